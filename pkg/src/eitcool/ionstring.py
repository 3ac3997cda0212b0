"""Linear ion crystals: equilibrium, normal modes and multimode cooling.

Positions are solved in the dimensionless units of the length scale
``l = (e^2 / (4 pi eps0 M omega_ax^2))^(1/3)``, where the force balance reads

    u_m - sum_{j != m} sign(u_m - u_j) / (u_m - u_j)^2 = 0.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import bloch
from .core import (
    COULOMB_K,
    ISOTROPIC_ALPHA,
    NumericalError,
    PhysicalSpecies,
    PhysicsDomainError,
    lamb_dicke_single,
    mhz_to_angular,
)
from .ratecool import NetHeatingError, cooling_time, rate_coefficients, steady_state_n
from .schemes import PROBE

NEWTON_TOL = 1e-12
NEWTON_MAXITER = 200


class ZigZagInstabilityError(PhysicsDomainError):
    pass


class UnstableConfigurationError(PhysicsDomainError):
    pass


@dataclass(frozen=True)
class Mode:
    frequency: float  # MHz
    vector: np.ndarray
    kind: str = "axial"
    multiplicity: int = 1


@dataclass
class IonString:
    n_ions: int
    species: PhysicalSpecies
    nu_axial: float
    nu_radial: float | None
    positions: np.ndarray  # um
    axial_modes: list = field(default_factory=list)
    radial_modes: list = field(default_factory=list)

    @property
    def min_spacing(self):
        return float(np.diff(self.positions).min()) if self.n_ions > 1 else math.inf


def length_scale(species, nu_axial):
    """Characteristic ion spacing in metres."""
    omega = mhz_to_angular(nu_axial)
    return float((COULOMB_K / (species.mass_kg * omega**2)) ** (1 / 3))


def _residual(u):
    d = u[:, None] - u[None, :]
    np.fill_diagonal(d, np.inf)
    return u - np.sum(np.sign(d) / d**2, axis=1)


def coulomb_coupling(u):
    """Matrix K with K_mn = -1/|u_m - u_n|^3 off the diagonal and zero row sums."""
    d = np.abs(u[:, None] - u[None, :])
    np.fill_diagonal(d, np.inf)
    K = -1.0 / d**3
    np.fill_diagonal(K, -K.sum(axis=1))
    return K


def axial_hessian(u):
    return np.eye(u.size) + 2 * coulomb_coupling(u)


def dimensionless_positions(n_ions):
    """Equilibrium positions in units of the length scale, by damped Newton iteration."""
    if n_ions < 1:
        raise ValueError("n_ions must be >= 1")
    if n_ions == 1:
        return np.zeros(1)
    spacing = 2.018 / n_ions**0.559
    u = spacing * (np.arange(n_ions) - (n_ions - 1) / 2)
    res = _residual(u)
    for it in range(NEWTON_MAXITER):
        norm = np.abs(res).max()
        if norm < NEWTON_TOL:
            break
        step = np.linalg.solve(axial_hessian(u), -res)
        lam = 1.0
        while True:
            trial = u + lam * step
            if np.all(np.diff(trial) > 0):
                r_trial = _residual(trial)
                if np.abs(r_trial).max() < norm or lam < 1e-6:
                    break
            lam /= 2
        u, res = trial, r_trial
    else:
        raise NumericalError(
            f"Newton iteration did not converge in {NEWTON_MAXITER} steps (max residual {np.abs(res).max():.3g})"
        )
    # enforce the exact mirror symmetry the solution has
    u = 0.5 * (u - u[::-1])
    return u


def equilibrium_positions(n_ions, species, nu_axial):
    """Axial equilibrium positions in micrometres, ascending."""
    if not nu_axial > 0:
        raise PhysicsDomainError("nu_axial must be > 0")
    return dimensionless_positions(n_ions) * length_scale(species, nu_axial) * 1e6


def _dimensionless(positions_um, species, nu_axial):
    return np.asarray(positions_um) * 1e-6 / length_scale(species, nu_axial)


def axial_modes(positions, nu_axial, species=None):
    """Axial normal modes sorted by frequency.

    ``positions`` are in micrometres when ``species`` is given, otherwise
    already dimensionless.
    """
    u = np.asarray(positions, float) if species is None else _dimensionless(positions, species, nu_axial)
    w, v = np.linalg.eigh(axial_hessian(u))
    if w.min() <= 0:
        raise UnstableConfigurationError(f"non-positive axial eigenvalue {w.min():.3g}")
    return [Mode(nu_axial * math.sqrt(lam), _fix_sign(v[:, q]), "axial") for q, lam in enumerate(w)]


def radial_modes(positions, nu_axial, nu_radial, species=None):
    """Modes of one transverse direction, highest (centre of mass, at nu_radial) first."""
    u = np.asarray(positions, float) if species is None else _dimensionless(positions, species, nu_axial)
    beta2 = (nu_radial / nu_axial) ** 2
    kappa, v = np.linalg.eigh(coulomb_coupling(u))
    arg = beta2 - kappa
    if arg.min() <= 0:
        raise ZigZagInstabilityError(
            f"radial frequency {nu_radial} MHz is below the zig-zag threshold "
            f"{nu_axial * math.sqrt(kappa.max()):.4g} MHz for {u.size} ions"
        )
    return [Mode(nu_axial * math.sqrt(a), _fix_sign(v[:, q]), "radial", 2) for q, a in enumerate(arg)]


def _fix_sign(vec):
    k = int(np.argmax(np.abs(vec) > 1e-9))
    return vec if vec[k] > 0 else -vec


def zigzag_threshold(n_ions, nu_axial):
    """Empirical radial frequency below which the linear string buckles."""
    if n_ions < 2:
        raise ValueError("n_ions must be >= 2")
    return 0.73 * n_ions**0.86 * nu_axial


def exact_zigzag_threshold(n_ions, nu_axial):
    """Radial frequency at which the softest transverse mode reaches zero."""
    u = dimensionless_positions(n_ions)
    return nu_axial * math.sqrt(np.linalg.eigvalsh(coulomb_coupling(u)).max())


def build_string(n_ions, species, nu_axial, nu_radial=None):
    u = dimensionless_positions(n_ions)
    pos = u * length_scale(species, nu_axial) * 1e6
    ax = axial_modes(u, nu_axial)
    rad = radial_modes(u, nu_axial, nu_radial) if nu_radial is not None else []
    return IonString(n_ions, species, nu_axial, nu_radial, pos, ax, rad)


@dataclass(frozen=True)
class CoolingGeometry:
    """Beam geometry used for the cooling times.

    ``wavelength`` (nm) and ``axis_cosine`` set the effective recoil on the
    axial modes, ``radial_cosine`` on the radial ones.
    """

    wavelength: float = 397.0
    axis_cosine: float = 1.0
    radial_cosine: float = 0.0
    alpha: float = ISOTROPIC_ALPHA


@dataclass
class ModeCooling:
    index: int
    kind: str
    frequency: float
    mbar: float
    tau: float
    eta: float
    status: str = "ok"


def multimode_cooling(string: IonString, scheme, geometry=CoolingGeometry(), probe=PROBE, include_radial=True):
    """Rate-equation cooling limit and time of every mode of the string.

    The limit uses the single-ion spectrum at each mode frequency and does
    not depend on the Lamb-Dicke factors; the time uses the per-mode factor
    summed over equally illuminated ions.
    """
    idx = scheme.find_coupling(*probe)
    laser = scheme.couplings[idx]
    W = bloch.probe_function(scheme, probe)
    cool_species = PhysicalSpecies(string.species.mass, geometry.wavelength)
    modes = [(q, m) for q, m in enumerate(string.axial_modes)]
    if include_radial:
        modes += [(q, m) for q, m in enumerate(string.radial_modes)]
    rows = []
    for q, m in modes:
        cos = geometry.axis_cosine if m.kind == "axial" else geometry.radial_cosine
        # sum over equally illuminated ions of (b_q^(i))^2 is 1 for a normalised mode vector
        eta = lamb_dicke_single(cool_species, m.frequency)
        if cos == 0:
            rows.append(ModeCooling(q, m.kind, m.frequency, math.nan, math.inf, 0.0, "no_coupling"))
            continue
        rates = rate_coefficients(W, laser.detuning, m.frequency, eta, cos, geometry.alpha)
        try:
            rows.append(ModeCooling(q, m.kind, m.frequency, steady_state_n(rates), cooling_time(rates), eta * abs(cos)))
        except NetHeatingError:
            rows.append(ModeCooling(q, m.kind, m.frequency, math.nan, math.nan, eta * abs(cos), "net_heating"))
    return rows


def mode_lamb_dicke(string: IonString, ion, axis_cosine=1.0, kind="axial"):
    """Lamb-Dicke factors of one ion on each mode, for the string's laser wavelength."""
    modes = string.axial_modes if kind == "axial" else string.radial_modes
    return np.array([lamb_dicke_single(string.species, m.frequency, axis_cosine) * m.vector[ion] for m in modes])


def rabi_blur(etas, mbars, n_ions=None):
    """Relative spread of the Rabi frequency caused by thermal spectator modes.

    Returns ``(dOmega/Omega, max_oscillations)``; the sum is divided by
    ``3 n_ions - 1`` when ``n_ions`` is given, otherwise by the number of
    spectator modes passed in.
    """
    etas = np.asarray(etas, float)
    mbars = np.asarray(mbars, float)
    if etas.shape != mbars.shape:
        raise ValueError("etas and mbars must have equal length")
    denom = 3 * n_ions - 1 if n_ions is not None else etas.size
    blur = math.sqrt(float(np.sum(etas**4 * mbars * (mbars + 1))) / denom)
    return blur, (math.inf if blur == 0 else 1.0 / blur)


def write_string_csv(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["mode_index", "kind", "freq_mhz", "mbar", "tau_us"])
        for r in rows:
            w.writerow([r.index, r.kind, f"{r.frequency:.17g}", f"{r.mbar:.17g}", f"{r.tau:.17g}"])


def write_positions_csv(path, positions):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ion_index", "z_um"])
        for i, z in enumerate(positions):
            w.writerow([i, f"{z:.17g}"])
