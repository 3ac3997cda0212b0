"""Simulated vibrational thermometry on a narrow (resolved-sideband) transition.

For a thermal state the red/blue sideband ratio is mbar / (mbar + 1) for any
pulse length, because p_{n+1} = p_n mbar / (mbar + 1). Rabi flops on the blue
sideband follow

    P(t) = sum_n p_n sin^2(eta * Omega * sqrt(n + 1) * t).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal, stats

from .core import NumericalError, PhysicsDomainError
from .ratecool import thermal_distribution


class RatioOutOfRangeError(PhysicsDomainError):
    pass


class FitError(NumericalError):
    pass


@dataclass(frozen=True)
class SidebandCounts:
    red_excited: int
    blue_excited: int
    shots_per_side: int

    def __post_init__(self):
        for k in (self.red_excited, self.blue_excited):
            if not 0 <= k <= self.shots_per_side:
                raise ValueError(f"excited count {k} outside [0, {self.shots_per_side}]")


@dataclass
class RabiDataset:
    times: np.ndarray  # us
    excitation: np.ndarray
    shots: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.excitation = np.asarray(self.excitation, dtype=float)
        if self.times.shape != self.excitation.shape:
            raise ValueError("times and excitation must have equal length")
        if np.any(self.excitation < -1e-12) or np.any(self.excitation > 1 + 1e-12):
            raise ValueError("excitation probabilities must lie in [0, 1]")


def ground_state_probability(mbar):
    return 1.0 / (mbar + 1.0)


def _n_cut(mbar):
    return max(60, int(math.ceil(40 * (1 + mbar))))


def sideband_ratio_to_n(counts: SidebandCounts, confidence=0.95):
    """Mean phonon number and confidence interval from sideband excitation counts.

    The interval propagates binomial standard errors through R = P_red/P_blue
    and mbar = R / (1 - R). With no red excitations the estimate is 0 and the
    interval is one-sided, from the exact binomial upper bound on P_red.
    """
    N = counts.shots_per_side
    if counts.blue_excited == 0:
        raise PhysicsDomainError("no blue-sideband excitations: ratio undefined")
    pr, pb = counts.red_excited / N, counts.blue_excited / N
    R = pr / pb
    if R >= 1:
        raise RatioOutOfRangeError(f"P_red/P_blue = {R:.3g} >= 1 is outside the thermal range")
    if counts.red_excited == 0:
        p_up = 1 - (1 - confidence) ** (1 / N)
        r_up = p_up / pb
        return 0.0, (0.0, math.inf if r_up >= 1 else r_up / (1 - r_up))
    z = stats.norm.ppf(0.5 + confidence / 2)
    var_rel = (1 - pr) / (N * pr) + (1 - pb) / (N * pb)
    se_R = R * math.sqrt(var_rel)
    mbar = R / (1 - R)
    se_m = se_R / (1 - R) ** 2
    return mbar, (max(0.0, mbar - z * se_m), mbar + z * se_m)


def simulate_shelving(mbar, eta, omega, pulse_time, shots, seed):
    """Red- and blue-sideband shelving outcomes for ``shots`` preparations each."""
    rng = np.random.default_rng(seed)
    p = thermal_distribution(mbar, _n_cut(mbar)).probabilities
    n_red = rng.choice(p.size, size=shots, p=p)
    n_blue = rng.choice(p.size, size=shots, p=p)
    x = eta * omega * pulse_time
    p_red = np.sin(x * np.sqrt(n_red)) ** 2
    p_blue = np.sin(x * np.sqrt(n_blue + 1)) ** 2
    red = int(np.sum(rng.random(shots) < p_red))
    blue = int(np.sum(rng.random(shots) < p_blue))
    return SidebandCounts(red, blue, shots)


def _signal(mbar, eta, omega, times, decay=None, n_max=None):
    p = thermal_distribution(mbar, n_max or _n_cut(mbar)).probabilities
    n = np.arange(p.size)
    phase = eta * omega * np.sqrt(n + 1)[:, None] * np.asarray(times)[None, :]
    P = p @ np.sin(phase) ** 2
    if decay is not None:
        P = 0.5 + (P - 0.5) * np.exp(-np.asarray(times) / decay)
    return P


def rabi_signal(mbar, eta, omega, times, decay=None) -> RabiDataset:
    """Noiseless blue-sideband Rabi flops; ``decay`` (us) adds exponential loss of contrast."""
    return RabiDataset(np.asarray(times, float), _signal(mbar, eta, omega, times, decay), 0)


def noisy_rabi(data: RabiDataset, shots, seed):
    rng = np.random.default_rng(seed)
    k = rng.binomial(shots, np.clip(data.excitation, 0, 1))
    return RabiDataset(data.times, k / shots, shots)


@dataclass
class ThermalFit:
    mbar: float
    omega: float
    rss: float
    interval: tuple | None = None
    omega_interval: tuple | None = None
    n_boot: int = 0

    @property
    def p0(self):
        return ground_state_probability(self.mbar)

    def report(self):
        lines = [f"mbar = {self.mbar:.10g}", f"omega_mhz = {self.omega:.10g}", f"p0 = {self.p0:.10g}"]
        if self.interval is not None:
            lines.append(f"mbar_interval = {self.interval[0]:.10g}, {self.interval[1]:.10g}")
        lines.append(f"residual = {self.rss:.10g}")
        return "\n".join(lines) + "\n"


def _softplus(x):
    return np.logaddexp(0.0, x)


def _inv_softplus(y):
    return y + math.log(-math.expm1(-y))


def _dominant_omega(data, eta):
    t, y = data.times, data.excitation
    span = t.max() - t.min()
    dt_min = np.min(np.diff(np.sort(t)))
    freqs = np.linspace(0.5 * 2 * math.pi / span, math.pi / dt_min, 4000)
    power = signal.lombscargle(t, y - y.mean(), freqs)
    w = freqs[int(np.argmax(power))]
    # sin^2 oscillates at twice eta*Omega
    return w / (2 * eta)


def _refine(data, eta, x0):
    t, y = data.times, data.excitation

    def rss(x):
        return float(np.sum((_signal(_softplus(x[0]), eta, math.exp(x[1]), t) - y) ** 2))

    # absolute function tolerance relative to the starting residual, so noisy data converge too
    fatol = max(1e-18, 1e-12 * rss(x0))
    res = optimize.minimize(
        rss, x0, method="Nelder-Mead", options={"xatol": 1e-10, "fatol": fatol, "maxiter": 4000, "maxfev": 8000}
    )
    return res


def fit_thermal(data: RabiDataset, eta, n_boot=0, seed=0) -> ThermalFit:
    """Least-squares fit of mbar and the Rabi frequency to blue-sideband flops.

    Coarse grid (Omega around the dominant Lomb-Scargle frequency, mbar on a
    log grid in [1e-3, 50]) followed by Nelder-Mead refinement with mbar kept
    positive through a softplus transform. ``n_boot`` parametric bootstrap
    refits give a 95% interval.
    """
    t, y = data.times, data.excitation
    if t.size < 8:
        raise FitError("need at least 8 data points")
    if np.ptp(y) < 1e-12:
        raise FitError("signal is constant; nothing to fit")
    om0 = _dominant_omega(data, eta)
    mb_grid = np.geomspace(1e-3, 50, 41)
    om_grid = om0 * np.linspace(0.6, 1.4, 41)
    best = (math.inf, None)
    for mb in mb_grid:
        p = thermal_distribution(mb, _n_cut(mb)).probabilities
        n = np.arange(p.size)
        for om in om_grid:
            model = p @ np.sin(eta * om * np.sqrt(n + 1)[:, None] * t[None, :]) ** 2
            r = float(np.sum((model - y) ** 2))
            if r < best[0]:
                best = (r, (mb, om))
    mb, om = best[1]
    res = _refine(data, eta, np.array([_inv_softplus(mb), math.log(om)]))
    if not res.success and res.status != 2:
        raise FitError(f"simplex refinement failed: {res.message}")
    mbar, omega = float(_softplus(res.x[0])), float(math.exp(res.x[1]))
    cycles = eta * omega * np.ptp(t) / math.pi
    if cycles < 0.25:
        raise FitError(f"data cover only {cycles:.3g} Rabi cycles; mbar and Omega are not identifiable")
    fit = ThermalFit(mbar, omega, float(res.fun))
    if n_boot:
        fit.interval, fit.omega_interval = _bootstrap(data, eta, fit, n_boot, seed)
        fit.n_boot = n_boot
    return fit


def _bootstrap(data, eta, fit, n_boot, seed):
    shots = data.shots or 100
    model = _signal(fit.mbar, eta, fit.omega, data.times)
    rng = np.random.default_rng(seed)
    x0 = np.array([_inv_softplus(max(fit.mbar, 1e-6)), math.log(fit.omega)])
    mbs, oms = [], []
    for _ in range(n_boot):
        y = rng.binomial(shots, np.clip(model, 0, 1)) / shots
        r = _refine(RabiDataset(data.times, y, shots), eta, x0)
        mbs.append(float(_softplus(r.x[0])))
        oms.append(float(math.exp(r.x[1])))
    return tuple(np.percentile(mbs, [2.5, 97.5])), tuple(np.percentile(oms, [2.5, 97.5]))


def write_dataset_csv(path, data: RabiDataset):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_us", "p_excited", "shots"])
        for t, p in zip(data.times, data.excitation):
            w.writerow([f"{t:.17g}", f"{p:.17g}", data.shots])
