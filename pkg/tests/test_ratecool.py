import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp
from scipy.linalg import null_space

from eitcool import bloch, ratecool as rc, schemes
from eitcool.core import CA40_397, RB87, TrapMode


def lorentzian(gamma, omega=0.1):
    def W(d):
        return gamma * (omega**2 / 4) / (d**2 + omega**2 / 2 + gamma**2 / 4)

    return W


def test_no_projection_no_rates():
    r = rc.rate_coefficients(lorentzian(1.0), -0.5, 0.1, 0.1, axis_cosine=0.0, alpha=0.0)
    assert r.a_plus == 0 and r.a_minus == 0


def test_sign_convention_samples_blue_side_for_cooling():
    calls = []

    def W(d):
        calls.append(d)
        return 1.0 + d

    r = rc.rate_coefficients(W, 2.0, 0.5, 1.0, 1.0, 0.0)
    assert r.a_minus == pytest.approx(3.5) and r.a_plus == pytest.approx(2.5)


def test_resolved_sideband_regime():
    gamma, nu = 0.05, 1.0
    r = rc.rate_coefficients(lorentzian(gamma, 0.01), -nu, nu, 0.1)
    assert r.a_minus > 1e3 * r.a_plus
    assert rc.steady_state_n(r) < 1e-3


def test_eit_carrier_term_vanishes():
    s = schemes.fig3_scheme()
    W = bloch.probe_function(s, schemes.PROBE)
    assert W(2.5) < 1e-14
    r_a = rc.rate_coefficients(W, 2.5, 0.1, 0.145, 1.0, alpha=1 / 3)
    r_0 = rc.rate_coefficients(W, 2.5, 0.1, 0.145, 1.0, alpha=0.0)
    assert r_a.a_plus == pytest.approx(r_0.a_plus, rel=1e-9)
    assert r_a.a_minus == pytest.approx(r_0.a_minus, rel=1e-9)


def test_steady_state_and_time_identities():
    assert rc.steady_state_n(rc.CoolingRates(0.0, 1.0)) == 0.0
    assert rc.cooling_time(rc.CoolingRates(0.0, 1.0)) == 1.0
    r = rc.CoolingRates(1.0, 3.0)
    assert rc.steady_state_n(r) == 0.5


def test_net_heating_error_carries_values():
    with pytest.raises(rc.NetHeatingError) as info:
        rc.steady_state_n(rc.CoolingRates(2.0, 1.0))
    assert info.value.a_plus == 2.0 and info.value.a_minus == 1.0
    with pytest.raises(rc.NetHeatingError):
        rc.cooling_time(rc.CoolingRates(1.0, 1.0))


@given(st.floats(0.1, 10.0), st.floats(0.01, 0.3), st.floats(-10, -0.1), st.floats(0.01, 5))
def test_eta_invariance_of_limit(c, eta, delta, nu):
    W = lorentzian(1.0)
    r1 = rc.rate_coefficients(W, delta, nu, eta)
    r2 = rc.rate_coefficients(W, delta, nu, c * eta)
    assert rc.steady_state_n(r2) == rc.steady_state_n(r1)
    assert rc.cooling_time(r2) == pytest.approx(rc.cooling_time(r1) / c**2, rel=1e-12)


def test_tau_quarters_when_eta_doubles():
    W = lorentzian(1.0)
    r1 = rc.rate_coefficients(W, -0.5, 0.1, 0.05)
    r2 = rc.rate_coefficients(W, -0.5, 0.1, 0.10)
    assert rc.cooling_time(r2) == pytest.approx(rc.cooling_time(r1) / 4, rel=1e-12)


@given(st.floats(1e-3, 1e3), st.floats(-5, -0.1), st.floats(0.01, 2))
def test_spectrum_scale_invariance(c, delta, nu):
    W = lorentzian(1.0)
    r1 = rc.rate_coefficients(W, delta, nu, 0.1)
    r2 = rc.rate_coefficients(lambda d: c * W(d), delta, nu, 0.1)
    assert rc.steady_state_n(r2) == pytest.approx(rc.steady_state_n(r1), rel=1e-12)
    assert 1 / rc.cooling_time(r2) == pytest.approx(c / rc.cooling_time(r1), rel=1e-12)


@given(st.floats(10, 100))
def test_doppler_law(ratio):
    # full recoil weight along the axis (alpha = 1) and a beam on the axis
    gamma = 20.0
    nu = gamma / ratio
    r = rc.scheme_rates(schemes.two_level(gamma, 0.1, -gamma / 2), TrapMode(nu, 0.05, recoil_alpha=1.0))
    assert 0.45 * gamma <= rc.steady_state_n(r) * nu <= 0.55 * gamma


def test_optimal_coupling_matches_stark_shift():
    nu = 0.1
    omegas = np.linspace(0.6, 1.6, 41)
    mbars = []
    for om in omegas:
        s = schemes.lambda_scheme(1.0, 0.05, om, 2.5, 2.5)
        mbars.append(rc.steady_state_n(rc.scheme_rates(s, TrapMode(nu, 0.1))))
    best = omegas[int(np.argmin(mbars))]
    assert abs(bloch.ac_stark_shift(2.5, best) - nu) < 0.2 * nu


def test_saturation_warning():
    s = schemes.lambda_scheme(1.0, 0.5, 1.0, 2.5, 2.5)
    with pytest.warns(UserWarning, match="saturation"):
        rc.scheme_rates(s, TrapMode(0.1, 0.1))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rc.scheme_rates(schemes.fig3_scheme(), TrapMode(0.1, 0.1))


def test_weak_probe_limit():
    s = schemes.fig3_scheme()
    mode = TrapMode(0.1, 0.145)
    full = rc.scheme_rates(s, mode)
    weak = rc.scheme_rates(s, mode, probe_limit="weak")
    # at gamma/20 the probe already shifts the limit by ~25%
    assert rc.steady_state_n(weak) == pytest.approx(0.0108334, rel=1e-4)
    assert rc.steady_state_n(full) == pytest.approx(0.0135759, rel=1e-4)
    with pytest.raises(ValueError):
        rc.scheme_rates(s, mode, probe_limit="strong")


def test_evolve_mean_n_limits():
    r = rc.CoolingRates(0.1, 0.3)
    assert rc.evolve_mean_n(r, 4.0, [0.0])[0] == 4.0
    assert rc.evolve_mean_n(r, 4.0, [1e4])[0] == pytest.approx(0.5)
    grow = rc.evolve_mean_n(rc.CoolingRates(0.3, 0.1), 1.0, [0.0, 10.0])
    assert grow[1] > grow[0]
    flat = rc.evolve_mean_n(rc.CoolingRates(0.2, 0.2), 1.0, [5.0])
    assert flat[0] == pytest.approx(2.0)


def test_evolve_mean_n_against_ode_fig3():
    r = rc.scheme_rates(schemes.fig3_scheme(), TrapMode(0.1, 0.145))
    tau = rc.cooling_time(r)
    t = np.linspace(0, 5 * tau, 11)
    sol = solve_ivp(lambda _, n: -(r.a_minus - r.a_plus) * n + r.a_plus, (0, t[-1]), [2.0], t_eval=t, rtol=1e-12, atol=1e-14)
    assert np.allclose(rc.evolve_mean_n(r, 2.0, t), sol.y[0], rtol=1e-9)
    # decay constant equals the cooling time
    m = rc.steady_state_n(r)
    n_tau = rc.evolve_mean_n(r, 2.0, [tau])[0]
    assert (n_tau - m) / (2.0 - m) == pytest.approx(math.exp(-1), rel=1e-12)


def _null_thermal(a_plus, a_minus, n_max):
    G = rc.rate_matrix(rc.CoolingRates(a_plus, a_minus), n_max).toarray()[: n_max + 1, : n_max + 1]
    v = null_space(G)[:, 0]
    return v / v.sum()


@settings(max_examples=20)
@given(st.floats(0.01, 1.0), st.floats(1.2, 20.0), st.integers(0, 2**31))
def test_detailed_balance(a_plus, ratio, seed):
    a_minus = a_plus * ratio
    rates = rc.CoolingRates(a_plus, a_minus)
    mbar = rc.steady_state_n(rates)
    n_max = max(60, math.ceil(40 * (1 + mbar)))
    p0 = np.random.default_rng(seed).random(12)
    p = rc.evolve_populations(rates, rc.PhononDistribution(p0 / p0.sum()), 40 * rc.cooling_time(rates), n_max)
    assert np.max(np.abs(p.probabilities - rc.thermal_distribution(mbar, n_max).probabilities)) < 1e-6
    assert np.max(np.abs(p.probabilities - _null_thermal(a_plus, a_minus, n_max))) < 1e-6


def test_frozen_dynamics():
    p0 = rc.PhononDistribution(np.array([0.2, 0.5, 0.3]))
    p = rc.evolve_populations(rc.CoolingRates(0.0, 0.0), p0, 100.0, 10)
    assert np.array_equal(p.probabilities[:3], p0.probabilities)
    assert p.truncation_loss == 0.0


@settings(max_examples=25)
@given(st.floats(0.0, 1.0), st.floats(1.0, 3.0), st.floats(0.0, 20.0), st.integers(0, 2**31))
def test_moment_closure(a_plus, ratio, t, seed):
    rates = rc.CoolingRates(a_plus, a_plus * ratio)
    p0 = np.random.default_rng(seed).random(6)
    dist = rc.PhononDistribution(p0 / p0.sum())
    p = rc.evolve_populations(rates, dist, t, n_max=400)
    assert p.mean == pytest.approx(rc.evolve_mean_n(rates, dist.mean, [t])[0], abs=1e-8)


def test_moment_closure_heating():
    rates = rc.CoolingRates(0.5, 0.2)
    dist = rc.PhononDistribution(np.array([0.3, 0.3, 0.4]))
    p = rc.evolve_populations(rates, dist, 2.0, n_max=400)
    assert p.mean == pytest.approx(rc.evolve_mean_n(rates, dist.mean, [2.0])[0], abs=1e-8)


def test_truncation_error():
    with pytest.raises(rc.TruncationError):
        rc.evolve_populations(rc.CoolingRates(1.0, 0.5), rc.PhononDistribution(np.array([1.0])), 50.0, n_max=10)


def test_adaptive_truncation_grows():
    rates = rc.CoolingRates(0.9, 1.0)
    p = rc.evolve_populations(rates, rc.PhononDistribution(np.array([1.0])), 200.0)
    assert p.n_max > 60
    assert p.truncation_loss <= rc.LEAKAGE_TOL


def test_thermal_distribution():
    assert np.array_equal(rc.thermal_distribution(0.0, 5).probabilities, [1, 0, 0, 0, 0, 0])
    p = rc.thermal_distribution(1.0, 200).probabilities
    assert p[0] == pytest.approx(0.5) and p[1] == pytest.approx(0.25)


@given(st.floats(0.0, 50.0))
def test_thermal_moment_identity(mbar):
    n_max = math.ceil(40 * (1 + mbar))
    d = rc.thermal_distribution(mbar, n_max)
    assert abs(d.probabilities.sum() - 1) < 1e-9
    assert d.mean == pytest.approx(mbar, abs=1e-9)
    assert d.truncation_loss < 1e-6


def test_band_sweep_single_point_matches_direct():
    s = schemes.rb_scheme()
    template = TrapMode(0.03, 0.01, species=RB87)
    (row,) = rc.band_sweep(s, template, (0.03, 0.03), 1)
    from eitcool.core import lamb_dicke_single

    direct = rc.scheme_rates(s, TrapMode(0.03, lamb_dicke_single(RB87, 0.03)))
    assert row.mbar == rc.steady_state_n(direct)
    assert row.tau == pytest.approx(rc.cooling_time(direct), rel=1e-12)


def test_band_sweep_reports_heating_in_row():
    s = schemes.two_level(20.0, 1.0, +10.0)
    rows = rc.band_sweep(s, TrapMode(1.0, 0.1, species=CA40_397), (1.0, 2.0), 3)
    assert [r.status for r in rows] == ["net_heating"] * 3
    assert all(math.isnan(r.mbar) for r in rows)


def test_band_sweep_needs_species():
    with pytest.raises(rc.PhysicsDomainError):
        rc.band_sweep(schemes.rb_scheme(), TrapMode(0.03, 0.01), (0.03, 0.04), 2)


def test_csv_writers(tmp_path):
    rows = [rc.SweepRow(0.025, 0.5, 1000.0)]
    rc.write_sweep_csv(tmp_path / "s.csv", rows)
    assert (tmp_path / "s.csv").read_text() == "nu_mhz,mbar,tau_us,status\n0.025000000000000001,0.5,1000,ok\n"
    rc.write_dynamics_csv(tmp_path / "d.csv", [0.0], [1.5])
    assert (tmp_path / "d.csv").read_text() == "t_us,mean_n\n0,1.5\n"
