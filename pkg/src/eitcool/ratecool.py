"""Rate-equation cooling in the Lamb-Dicke regime.

Heating and cooling coefficients follow from the scattering spectrum W
sampled at the carrier and at the two motional sidebands:

    A+ = eta^2 (alpha W(D) + cos^2(theta) W(D - nu))
    A- = eta^2 (alpha W(D) + cos^2(theta) W(D + nu))

so the cooling coefficient picks up the spectrum one trap quantum *above*
the laser detuning, where the EIT bright resonance sits.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from . import bloch
from .core import ISOTROPIC_ALPHA, NumericalError, PhysicsDomainError, lamb_dicke_single
from .schemes import PROBE

LEAKAGE_TOL = 1e-6


class NetHeatingError(PhysicsDomainError):
    def __init__(self, a_plus, a_minus):
        super().__init__(f"net heating: A+ = {a_plus:.6g} >= A- = {a_minus:.6g}")
        self.a_plus = a_plus
        self.a_minus = a_minus


class TruncationError(NumericalError):
    pass


@dataclass(frozen=True)
class CoolingRates:
    """Heating (``a_plus``) and cooling (``a_minus``) coefficients in MHz.

    ``reduced_plus``/``reduced_minus`` are the same coefficients without the
    eta^2 prefactor, when known.
    """

    a_plus: float
    a_minus: float
    reduced_plus: float | None = None
    reduced_minus: float | None = None

    def __post_init__(self):
        if self.a_plus < 0 or self.a_minus < 0:
            raise PhysicsDomainError("rate coefficients must be non-negative")

    @property
    def net(self):
        return self.a_minus - self.a_plus

    def scaled(self, factor):
        return CoolingRates(self.a_plus * factor, self.a_minus * factor, self.reduced_plus, self.reduced_minus)


@dataclass
class PhononDistribution:
    probabilities: np.ndarray
    truncation_loss: float = 0.0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probabilities must be a non-empty 1-d array")
        if np.any(p < -1e-12):
            raise ValueError("probabilities must be non-negative")
        self.probabilities = np.clip(p, 0, None)

    @property
    def n_max(self):
        return self.probabilities.size - 1

    @property
    def mean(self):
        return float(np.dot(np.arange(self.probabilities.size), self.probabilities))

    def normalized(self):
        p = self.probabilities
        return PhononDistribution(p / p.sum(), self.truncation_loss)

    def padded(self, n_max):
        p = np.zeros(n_max + 1)
        m = min(n_max, self.n_max)
        p[: m + 1] = self.probabilities[: m + 1]
        return PhononDistribution(p, self.truncation_loss)


def rate_coefficients(spectrum_fn, delta, nu, eta, axis_cosine=1.0, alpha=ISOTROPIC_ALPHA):
    """Lowest-order heating/cooling coefficients from a scattering spectrum."""
    if not nu > 0:
        raise PhysicsDomainError(f"trap frequency must be > 0, got {nu}")
    w0 = spectrum_fn(delta)
    c2 = axis_cosine**2
    red_plus = alpha * w0 + c2 * spectrum_fn(delta - nu)
    red_minus = alpha * w0 + c2 * spectrum_fn(delta + nu)
    # tiny negative solver noise
    red_plus, red_minus = max(red_plus, 0.0), max(red_minus, 0.0)
    e2 = eta**2
    return CoolingRates(e2 * red_plus, e2 * red_minus, red_plus, red_minus)


WEAK_PROBE_FRACTION = 1e-4


def scheme_rates(scheme, mode, probe=PROBE, alpha=None, probe_limit="full"):
    """Coefficients for a trap mode cooled by the ``probe`` laser of ``scheme``.

    With ``probe_limit="full"`` the spectrum is computed at the configured
    probe Rabi frequency. ``"weak"`` evaluates it at a vanishing probe and
    rescales by Omega_g^2, the linear-response limit; this can differ a lot
    when the probe saturates the narrow bright resonance even though it is
    well below gamma.

    Warns when the probe drives the transition above saturation, where the
    rate picture is no longer justified.
    """
    idx = scheme.find_coupling(*probe)
    laser = scheme.couplings[idx]
    gamma = scheme.linewidth(laser.upper)
    if gamma > 0 and laser.rabi > gamma / 5:
        warnings.warn(
            f"cooling laser Rabi frequency {laser.rabi} exceeds gamma/5 = {gamma / 5:.3g}; "
            "rate equations assume excitation below saturation",
            stacklevel=2,
        )
    if probe_limit == "full":
        W = bloch.probe_function(scheme, probe)
    elif probe_limit == "weak":
        weak = WEAK_PROBE_FRACTION * max(gamma, laser.rabi)
        W0 = bloch.probe_function(scheme.with_coupling(idx, rabi=weak), probe)
        gain = (laser.rabi / weak) ** 2

        def W(x):
            return gain * W0(x)

    else:
        raise ValueError(f"probe_limit must be 'full' or 'weak', got {probe_limit!r}")
    a = mode.recoil_alpha if alpha is None else alpha
    return rate_coefficients(W, laser.detuning, mode.frequency, mode.lamb_dicke, laser.axis_cosine, a)


def steady_state_n(rates: CoolingRates) -> float:
    """Cooling limit A+ / (A- - A+)."""
    if rates.a_minus <= rates.a_plus:
        raise NetHeatingError(rates.a_plus, rates.a_minus)
    if rates.reduced_plus is not None and rates.reduced_minus > rates.reduced_plus:
        # eta-free ratio: exactly invariant under eta -> c eta
        return rates.reduced_plus / (rates.reduced_minus - rates.reduced_plus)
    return rates.a_plus / (rates.a_minus - rates.a_plus)


def cooling_time(rates: CoolingRates) -> float:
    """Cooling time constant 1 / (A- - A+) in microseconds (rates in MHz = 1/us)."""
    if rates.a_minus <= rates.a_plus:
        raise NetHeatingError(rates.a_plus, rates.a_minus)
    return 1.0 / (rates.a_minus - rates.a_plus)


def evolve_mean_n(rates: CoolingRates, n0, times):
    """Exact solution of d<n>/dt = -(A- - A+) <n> + A+.

    Also valid for net heating, where it grows without bound.
    """
    if n0 < 0:
        raise ValueError("n0 must be >= 0")
    t = np.asarray(times, dtype=float)
    k = rates.a_minus - rates.a_plus
    if k == 0:
        return n0 + rates.a_plus * t
    mbar = rates.a_plus / k
    return mbar + (n0 - mbar) * np.exp(-k * t)


def rate_matrix(rates: CoolingRates, n_max):
    """Generator of the truncated birth-death chain, reflecting at ``n_max``.

    The extra last row accumulates the probability flux that would have
    left through the top level.
    """
    n = np.arange(n_max + 1, dtype=float)
    up = rates.a_plus * (n + 1)
    down = rates.a_minus * n
    up_in = up.copy()
    up_in[-1] = 0.0
    diag = np.append(-(up_in + down), 0.0)
    # sub-diagonal: n -> n+1, with the top level feeding the leakage row
    lower = up
    upper = np.append(down[1:], 0.0)
    return sparse.diags([lower, diag, upper], [-1, 0, 1], shape=(n_max + 2, n_max + 2), format="csr")


def default_n_max(n0):
    return max(60, math.ceil(10 * (1 + n0)))


def evolve_populations(rates: CoolingRates, p0: PhononDistribution, t, n_max=None):
    """Propagate the Fock populations of the birth-death rate equations to time ``t``.

    Uses the exact matrix exponential of the sparse generator. When ``n_max``
    is not given it starts from ``default_n_max`` and doubles while the
    leakage through the top level exceeds ``LEAKAGE_TOL``.
    """
    adaptive = n_max is None
    if adaptive:
        n_max = max(default_n_max(p0.mean), p0.n_max)
    for _ in range(8):
        p = p0.padded(n_max).probabilities
        G = rate_matrix(rates, n_max)
        x = expm_multiply(G * float(t), np.append(p, 0.0))
        leak = float(x[-1])
        if leak <= LEAKAGE_TOL:
            pt = np.clip(x[:-1], 0, None)
            return PhononDistribution(pt, p0.truncation_loss + leak)
        if not adaptive:
            break
        n_max *= 2
    raise TruncationError(f"leakage {leak:.3g} through n_max = {n_max} exceeds {LEAKAGE_TOL}; increase n_max")


def thermal_distribution(mbar, n_max) -> PhononDistribution:
    """Thermal Fock populations mbar^n / (mbar + 1)^(n+1), renormalised on 0..n_max."""
    if mbar < 0:
        raise ValueError("mbar must be >= 0")
    n = np.arange(n_max + 1)
    if mbar == 0:
        p = (n == 0).astype(float)
        return PhononDistribution(p, 0.0)
    q = mbar / (mbar + 1)
    p = np.exp(n * math.log(q)) / (mbar + 1)
    loss = max(0.0, 1.0 - p.sum())
    return PhononDistribution(p / p.sum(), loss)


@dataclass
class SweepRow:
    nu: float
    mbar: float
    tau: float
    status: str = "ok"


def band_sweep(scheme, mode_template, nu_range, points, probe=PROBE):
    """Cooling limit and time across a band of trap frequencies.

    eta is recomputed at each frequency from ``mode_template.species``;
    points with net heating are reported in their row, not raised.
    """
    lo, hi = nu_range
    if points < 1 or (points < 2 and lo != hi):
        raise ValueError("need points >= 2 for a non-degenerate range")
    if mode_template.species is None:
        raise PhysicsDomainError("band_sweep needs a TrapMode template with a species")
    nus = np.linspace(lo, hi, int(points)) if lo != hi else np.array([float(lo)])
    idx = scheme.find_coupling(*probe)
    laser = scheme.couplings[idx]
    W = bloch.probe_function(scheme, probe)
    cache = {}

    def Wc(x):
        key = round(float(x), 15)
        if key not in cache:
            cache[key] = W(x)
        return cache[key]

    rows = []
    for nu in nus:
        eta = lamb_dicke_single(mode_template.species, nu)
        r = rate_coefficients(Wc, laser.detuning, nu, eta, laser.axis_cosine, mode_template.recoil_alpha)
        try:
            rows.append(SweepRow(float(nu), steady_state_n(r), cooling_time(r)))
        except NetHeatingError:
            rows.append(SweepRow(float(nu), math.nan, math.nan, "net_heating"))
    return rows


def write_sweep_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nu_mhz", "mbar", "tau_us", "status"])
        for r in rows:
            w.writerow([f"{r.nu:.17g}", f"{r.mbar:.17g}", f"{r.tau:.17g}", r.status])


def write_dynamics_csv(path, times, mean_n):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_us", "mean_n"])
        for t, n in zip(times, mean_n):
            w.writerow([f"{t:.17g}", f"{n:.17g}"])
