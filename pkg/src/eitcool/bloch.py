"""Steady state of driven, damped multi-level atoms.

The master equation is the usual Lindblad form in the rotating frame with
the rotating-wave approximation: frame energies on the diagonal, ``rabi/2``
on the off-diagonals, one collapse operator ``sqrt(rate)|lower><upper|`` per
decay channel. The steady state is found by a dense linear solve of the
vectorised Liouvillian with one row replaced by the trace condition.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import LevelScheme, NumericalError, SchemeError

HERMITIAN_TOL = 1e-10
NEG_EIG_CLIP = 1e-9
NEG_EIG_FATAL = 1e-6


class NonUniqueSteadyStateError(NumericalError):
    pass


class NoPeakError(NumericalError):
    pass


@dataclass(frozen=True)
class DensityMatrix:
    labels: tuple
    entries: np.ndarray

    @property
    def dim(self):
        return len(self.labels)

    def population(self, label):
        i = self.labels.index(label)
        return float(self.entries[i, i].real)

    @property
    def populations(self):
        return np.real(np.diag(self.entries)).copy()


@dataclass
class Spectrum:
    probe_detunings: np.ndarray
    rates: np.ndarray
    failures: list = field(default_factory=list)

    def to_csv(self, path):
        write_spectrum_csv(path, self)


def hamiltonian(scheme: LevelScheme):
    d = scheme.dim
    H = np.zeros((d, d), dtype=complex)
    for lab, e in scheme.frame_energies.items():
        i = scheme.index(lab)
        H[i, i] = e
    for c in scheme.couplings:
        l, u = scheme.index(c.lower), scheme.index(c.upper)
        H[u, l] += c.rabi / 2
        H[l, u] += c.rabi / 2
    return H


def collapse_operators(scheme: LevelScheme):
    d = scheme.dim
    ops = []
    for ch in scheme.decays:
        C = np.zeros((d, d), dtype=complex)
        C[scheme.index(ch.lower), scheme.index(ch.upper)] = math.sqrt(ch.rate)
        ops.append(C)
    return ops


def liouvillian(H, c_ops):
    """Superoperator acting on column-stacked (Fortran-order) density matrices."""
    d = H.shape[0]
    eye = np.eye(d)
    L = -1j * (np.kron(eye, H) - np.kron(H.T, eye))
    for C in c_ops:
        CdC = C.conj().T @ C
        L += np.kron(C.conj(), C) - 0.5 * np.kron(eye, CdC) - 0.5 * np.kron(CdC.T, eye)
    return L


def lindblad_rhs(rho, H, c_ops):
    out = -1j * (H @ rho - rho @ H)
    for C in c_ops:
        Cd = C.conj().T
        CdC = Cd @ C
        out += C @ rho @ Cd - 0.5 * (CdC @ rho + rho @ CdC)
    return out


def _components(scheme):
    parent = {lab: lab for lab in scheme.labels}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in scheme.couplings:
        if c.rabi > 0:
            parent[find(c.lower)] = find(c.upper)
    for ch in scheme.decays:
        parent[find(ch.lower)] = find(ch.upper)
    groups = {}
    for lab in scheme.labels:
        groups.setdefault(find(lab), []).append(lab)
    return list(groups.values())


def steady_state(scheme: LevelScheme) -> DensityMatrix:
    """Unique steady state of the scheme's master equation."""
    if not scheme.decays:
        raise NonUniqueSteadyStateError("scheme has no decay channel; steady state is not unique")
    d = scheme.dim
    L = liouvillian(hamiltonian(scheme), collapse_operators(scheme))
    A = L.copy()
    # trace row replaces the equation for rho_00
    A[0, :] = 0
    A[0, [i * (d + 1) for i in range(d)]] = 1
    b = np.zeros(d * d, dtype=complex)
    b[0] = 1
    sv = np.linalg.svd(L, compute_uv=False)
    scale = sv[0] if sv[0] > 0 else 1.0
    n_null = int(np.sum(sv < 1e-11 * scale))
    if n_null > 1:
        comps = _components(scheme)
        detail = "; ".join("{" + ", ".join(c) + "}" for c in comps) if len(comps) > 1 else (
            "dark subspace within " + ", ".join(scheme.labels)
        )
        raise NonUniqueSteadyStateError(
            f"non-unique steady state ({n_null}-dimensional kernel); decoupled subspaces: {detail}"
        )
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NonUniqueSteadyStateError(f"singular Liouvillian: {exc}") from exc
    rho = x.reshape((d, d), order="F")
    rho = 0.5 * (rho + rho.conj().T)
    rho = _enforce_positivity(rho)
    return DensityMatrix(tuple(scheme.labels), rho)


def _enforce_positivity(rho):
    w, v = np.linalg.eigh(rho)
    if w.min() < -NEG_EIG_FATAL:
        raise NumericalError(f"steady state has eigenvalue {w.min():.3g} < -{NEG_EIG_FATAL}")
    if w.min() < -NEG_EIG_CLIP:
        w = np.clip(w, 0, None)
        rho = (v * w) @ v.conj().T
    return rho / np.trace(rho).real


def scattering_rate(scheme: LevelScheme) -> float:
    """Total photon scattering rate W (MHz) in steady state."""
    rho = steady_state(scheme)
    return float(sum(ch.rate * rho.population(ch.upper) for ch in scheme.decays))


def probe_function(scheme, probe_transition):
    """Return ``W(detuning)`` with the probe laser's detuning as the variable."""
    idx = scheme.find_coupling(*probe_transition)

    def W(delta):
        return scattering_rate(scheme.with_coupling(idx, detuning=float(delta)))

    return W


def absorption_spectrum(scheme, probe_transition, detuning_min, detuning_max, points):
    """Scattering rate sampled on a uniform grid of probe detunings.

    Points whose steady state cannot be computed are kept as NaN and
    listed in ``Spectrum.failures``.
    """
    if points < 2:
        raise ValueError("points must be >= 2")
    W = probe_function(scheme, probe_transition)
    grid = np.linspace(detuning_min, detuning_max, int(points))
    rates = np.empty_like(grid)
    failures = []
    for i, x in enumerate(grid):
        try:
            rates[i] = W(x)
        except (NumericalError, SchemeError) as exc:
            rates[i] = np.nan
            failures.append((float(x), str(exc)))
    rates = np.where(rates < 0, np.where(rates > -1e-12, 0.0, rates), rates)
    return Spectrum(grid, rates, failures)


def ac_stark_shift(delta_r, omega_r):
    """Light shift of the dressed state created by the coupling laser."""
    return (math.sqrt(delta_r**2 + omega_r**2) - abs(delta_r)) / 2


def _golden_max(f, a, b, tol):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)


def _half_crossing(f, x_in, x_out, target):
    """Linear interpolation of f = target on a fine grid between x_in (above) and x_out (below)."""
    xs = np.linspace(x_in, x_out, 201)
    ys = np.array([f(x) for x in xs])
    below = np.nonzero(ys < target)[0]
    k = below[0]
    x0, x1, y0, y1 = xs[k - 1], xs[k], ys[k - 1], ys[k]
    return x0 + (target - y0) * (x1 - x0) / (y1 - y0)


def find_bright_resonance(scheme, probe_transition, search_window, grid_points=401):
    """Locate the narrow (bright) resonance inside ``search_window``.

    Returns ``(position, fwhm, peak_rate)``. The window must exclude the broad
    resonance and contain a single interior maximum.
    """
    lo, hi = map(float, search_window)
    W = probe_function(scheme, probe_transition)
    xs = np.linspace(lo, hi, grid_points)
    ys = np.array([W(x) for x in xs])
    k = int(np.argmax(ys))
    if k == 0 or k == len(xs) - 1:
        raise NoPeakError(f"no interior maximum of the scattering rate in [{lo}, {hi}]")
    width = hi - lo
    pos, peak = _golden_max(W, xs[k - 1], xs[k + 1], 1e-4 * width)
    half = peak / 2
    left_idx = np.nonzero(ys[:k] < half)[0]
    right_idx = np.nonzero(ys[k + 1 :] < half)[0]
    if left_idx.size == 0 or right_idx.size == 0:
        raise NoPeakError("half maximum is not reached inside the search window")
    x_left = _half_crossing(W, pos, xs[left_idx[-1]], half)
    x_right = _half_crossing(W, pos, xs[k + 1 + right_idx[0]], half)
    return pos, x_right - x_left, peak


def write_spectrum_csv(path, spectrum: Spectrum):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["detuning_mhz", "rate_mhz"])
        for x, y in zip(spectrum.probe_detunings, spectrum.rates):
            w.writerow([f"{x:.17g}", f"{y:.17g}"])
