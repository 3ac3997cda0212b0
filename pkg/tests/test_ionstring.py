import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eitcool import ionstring as ist, ratecool as rc, schemes, bloch
from eitcool.core import CA40


def test_two_and_three_ions_closed_form():
    # N = 2: u = +-(1/4)^(1/3); N = 3: u = 0, +-(5/4)^(1/3)
    assert np.allclose(ist.dimensionless_positions(2), [-(0.25 ** (1 / 3)), 0.25 ** (1 / 3)], atol=1e-12)
    assert np.allclose(ist.dimensionless_positions(3), [-(1.25 ** (1 / 3)), 0.0, 1.25 ** (1 / 3)], atol=1e-12)
    assert ist.dimensionless_positions(2)[1] == pytest.approx(0.62996, abs=1e-5)
    assert ist.dimensionless_positions(3)[2] == pytest.approx(1.0772, abs=1e-4)


def test_axial_eigenvalues_three_ions():
    lam = sorted((m.frequency / 1.0) ** 2 for m in ist.axial_modes(ist.dimensionless_positions(3), 1.0))
    assert np.allclose(lam, [1.0, 3.0, 29 / 5], atol=1e-10)


@settings(max_examples=15)
@given(st.integers(1, 30))
def test_positions_antisymmetric_and_balanced(n):
    u = ist.dimensionless_positions(n)
    assert np.allclose(u, -u[::-1], atol=1e-12)
    assert np.all(np.diff(u) > 0)
    assert np.abs(ist._residual(u)).max() < 1e-9


@settings(max_examples=15)
@given(st.integers(2, 25))
def test_modes_orthonormal_and_com(n):
    modes = ist.axial_modes(ist.dimensionless_positions(n), 1.0)
    B = np.array([m.vector for m in modes])
    assert np.allclose(B @ B.T, np.eye(n), atol=1e-10)
    # lowest mode is the centre-of-mass mode at the trap frequency
    assert modes[0].frequency == pytest.approx(1.0, rel=1e-10)
    assert np.allclose(modes[1].frequency, math.sqrt(3), rtol=1e-8)


@given(st.floats(0.1, 10.0), st.integers(2, 8))
def test_spacing_scales_with_frequency(nu, n):
    a = ist.equilibrium_positions(n, CA40, nu)
    b = ist.equilibrium_positions(n, CA40, 2 * nu)
    assert np.allclose(b, a * 2 ** (-2 / 3), rtol=1e-10)


def test_length_scale_two_ion_hand_value():
    # two ions at 1 MHz: separation (e^2 / (2 pi eps0 M w^2))^(1/3)
    e, eps0 = 1.602176634e-19, 8.8541878128e-12
    M = 39.962591 * 1.66053906660e-27
    w = 2 * math.pi * 1e6
    d = (e**2 / (2 * math.pi * eps0 * M * w**2)) ** (1 / 3)
    assert np.diff(ist.equilibrium_positions(2, CA40, 1.0))[0] * 1e-6 == pytest.approx(d, rel=1e-6)


def test_radial_modes_below_trap_frequency():
    s = ist.build_string(5, CA40, 0.7, 5.0)
    freqs = [m.frequency for m in s.radial_modes]
    assert max(freqs) == pytest.approx(5.0, rel=1e-12)
    assert all(f <= 5.0 + 1e-12 for f in freqs)
    assert all(m.multiplicity == 2 for m in s.radial_modes)


def test_zigzag_thresholds():
    exact = ist.exact_zigzag_threshold(10, 0.7)
    approx = ist.zigzag_threshold(10, 0.7)
    assert abs(exact / approx - 1) < 0.2
    with pytest.raises(ist.ZigZagInstabilityError):
        ist.build_string(10, CA40, 0.7, 0.99 * exact)
    ist.build_string(10, CA40, 0.7, 1.01 * exact)


def test_two_ion_zigzag_exact():
    # N = 2: rocking mode sqrt(beta^2 - 1) vanishes at beta = 1
    assert ist.exact_zigzag_threshold(2, 1.3) == pytest.approx(1.3, rel=1e-10)


def _lambda():
    return schemes.lambda_scheme(20.0, 0.5, 30.0, 75.0, 75.0)


def test_mode_limit_matches_single_mode():
    s = _lambda()
    string = ist.build_string(3, CA40, 0.7)
    geom = ist.CoolingGeometry(397.0, 1.0, 0.0)
    rows = ist.multimode_cooling(string, s, geom)
    W = bloch.probe_function(s, schemes.PROBE)
    for r in rows:
        single = rc.rate_coefficients(W, 75.0, r.frequency, 0.05, 1.0, geom.alpha)
        assert r.mbar == pytest.approx(rc.steady_state_n(single), rel=1e-10)


def test_perpendicular_beam_gives_no_coupling():
    string = ist.build_string(3, CA40, 0.7, 5.0)
    rows = ist.multimode_cooling(string, _lambda(), ist.CoolingGeometry(397.0, 1.0, 0.0))
    radial = [r for r in rows if r.kind == "radial"]
    assert radial and all(r.status == "no_coupling" and math.isnan(r.mbar) for r in radial)


def test_best_mode_near_bright_resonance():
    s = _lambda()
    stark = bloch.ac_stark_shift(75.0, 30.0)
    string = ist.build_string(6, CA40, stark / 2.0)
    rows = [r for r in ist.multimode_cooling(string, s) if r.status == "ok"]
    best = min(rows, key=lambda r: r.mbar)
    nearest = min(rows, key=lambda r: abs(r.frequency - stark))
    assert best.index == nearest.index


def test_rabi_blur_arithmetic():
    blur, osc = ist.rabi_blur([0.1, 0.2], [1.0, 0.5], n_ions=1)
    expected = math.sqrt((0.1**4 * 2 + 0.2**4 * 0.75) / 2)
    assert blur == pytest.approx(expected, rel=1e-12)
    assert osc == pytest.approx(1 / expected)
    assert ist.rabi_blur([0.1], [0.0]) == (0.0, math.inf)
    with pytest.raises(ValueError):
        ist.rabi_blur([0.1], [0.1, 0.2])


def test_mode_lamb_dicke_uses_participation():
    string = ist.build_string(2, CA40, 1.0)
    etas = ist.mode_lamb_dicke(string, 0)
    # both modes have participation 1/sqrt(2) on either ion
    assert abs(etas[0]) == pytest.approx(ist.lamb_dicke_single(CA40, 1.0) / math.sqrt(2), rel=1e-10)
    assert abs(etas[1]) == pytest.approx(ist.lamb_dicke_single(CA40, math.sqrt(3)) / math.sqrt(2), rel=1e-10)


def test_csv_writers(tmp_path):
    string = ist.build_string(3, CA40, 0.7)
    ist.write_positions_csv(tmp_path / "p.csv", string.positions)
    rows = ist.multimode_cooling(string, _lambda())
    ist.write_string_csv(tmp_path / "m.csv", rows)
    assert (tmp_path / "p.csv").read_text().splitlines()[0] == "ion_index,z_um"
    lines = (tmp_path / "m.csv").read_text().splitlines()
    assert lines[0] == "mode_index,kind,freq_mhz,mbar,tau_us" and len(lines) == 4


def test_bad_inputs():
    with pytest.raises(ValueError):
        ist.dimensionless_positions(0)
    with pytest.raises(ist.PhysicsDomainError):
        ist.equilibrium_positions(3, CA40, 0.0)
    with pytest.raises(ValueError):
        ist.zigzag_threshold(1, 1.0)
