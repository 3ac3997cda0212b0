"""Shared domain types, unit conventions and physical constants.

Frequencies (Rabi frequencies, detunings, linewidths, trap frequencies) are
kept in MHz everywhere, read as rates in 1/us. Only the Lamb-Dicke factor and
the ion-string geometry need SI constants; those conversions go through
:func:`mhz_to_angular` exactly once.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants as sc

HBAR = sc.hbar
AMU = sc.physical_constants["atomic mass constant"][0]
E_CHARGE = sc.e
EPS0 = sc.epsilon_0
COULOMB_K = E_CHARGE**2 / (4 * math.pi * EPS0)

#: isotropic average of cos^2 of the emission direction on an axis
ISOTROPIC_ALPHA = 1.0 / 3.0


class EitCoolError(Exception):
    """Base class for all package errors."""

    category = "error"


class ConfigError(EitCoolError, ValueError):
    category = "config"


class PhysicsDomainError(EitCoolError, ValueError):
    category = "physics-domain"


class NumericalError(EitCoolError, ArithmeticError):
    category = "numerical"


class SchemeError(ConfigError):
    """An inconsistent or malformed level scheme."""


def mhz_to_angular(nu_mhz):
    """Cyclic frequency in MHz -> angular frequency in rad/s."""
    return 2 * math.pi * 1e6 * np.asarray(nu_mhz, dtype=float)


def angular_to_mhz(omega):
    return np.asarray(omega, dtype=float) / (2 * math.pi * 1e6)


@dataclass(frozen=True)
class Level:
    label: str
    energy_offset: float = 0.0


@dataclass(frozen=True)
class DecayChannel:
    upper: str
    lower: str
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise SchemeError(f"decay {self.upper}->{self.lower}: rate must be > 0, got {self.rate}")
        if self.upper == self.lower:
            raise SchemeError(f"decay {self.upper}->{self.lower}: from and to must differ")


@dataclass(frozen=True)
class LaserField:
    """One coherent drive between ``lower`` and ``upper``.

    ``detuning`` is the laser frequency minus the transition frequency, so a
    positive value means blue of resonance.
    """

    lower: str
    upper: str
    rabi: float
    detuning: float = 0.0
    axis_cosine: float = 1.0

    def __post_init__(self):
        if self.rabi < 0:
            raise SchemeError(f"laser {self.lower}-{self.upper}: rabi must be >= 0")
        if abs(self.axis_cosine) > 1:
            raise SchemeError(f"laser {self.lower}-{self.upper}: |axis_cosine| must be <= 1")
        if self.lower == self.upper:
            raise SchemeError("a laser must couple two different levels")

    @property
    def drives(self):
        return (self.lower, self.upper)


@dataclass(frozen=True)
class LevelScheme:
    """Internal levels, coherent couplings and decay channels.

    Construction validates label references and that the coupling graph
    admits a consistent rotating frame. The frame energies are then
    available as :attr:`frame_energies`.
    """

    levels: tuple[Level, ...]
    couplings: tuple[LaserField, ...] = ()
    decays: tuple[DecayChannel, ...] = ()
    frame_energies: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        object.__setattr__(self, "couplings", tuple(self.couplings))
        object.__setattr__(self, "decays", tuple(self.decays))
        labels = [lv.label for lv in self.levels]
        if len(set(labels)) != len(labels):
            raise SchemeError(f"duplicate level labels in {labels}")
        known = set(labels)
        for c in self.couplings:
            for lab in c.drives:
                if lab not in known:
                    raise SchemeError(f"laser references unknown level {lab!r}")
        for d in self.decays:
            for lab in (d.upper, d.lower):
                if lab not in known:
                    raise SchemeError(f"decay references unknown level {lab!r}")
        object.__setattr__(self, "frame_energies", self._solve_frame())

    def _solve_frame(self):
        # E_upper = E_lower - detuning along every drive; roots keep energy_offset
        adj = {lv.label: [] for lv in self.levels}
        for c in self.couplings:
            adj[c.lower].append((c.upper, -c.detuning))
            adj[c.upper].append((c.lower, c.detuning))
        energies = {}
        for lv in self.levels:
            if lv.label in energies:
                continue
            energies[lv.label] = lv.energy_offset
            stack = [lv.label]
            while stack:
                cur = stack.pop()
                for nxt, step in adj[cur]:
                    e = energies[cur] + step
                    if nxt in energies:
                        tol = 1e-9 * max(1.0, abs(e), abs(energies[nxt]))
                        if abs(energies[nxt] - e) > tol:
                            raise SchemeError(
                                f"drive loop through {cur!r} and {nxt!r} has inconsistent "
                                f"detunings (frame energy {energies[nxt]} vs {e})"
                            )
                    else:
                        energies[nxt] = e
                        stack.append(nxt)
        return energies

    @property
    def labels(self):
        return [lv.label for lv in self.levels]

    @property
    def dim(self):
        return len(self.levels)

    def index(self, label):
        return self.labels.index(label)

    def linewidth(self, label):
        """Total decay rate out of ``label``."""
        return sum(d.rate for d in self.decays if d.upper == label)

    def find_coupling(self, lower, upper):
        for i, c in enumerate(self.couplings):
            if (c.lower, c.upper) == (lower, upper):
                return i
        raise SchemeError(f"no laser drives {lower!r} -> {upper!r}")

    def with_coupling(self, index, **changes):
        """Copy of the scheme with coupling ``index`` modified."""
        cs = list(self.couplings)
        cs[index] = replace(cs[index], **changes)
        return LevelScheme(self.levels, tuple(cs), self.decays)

    def scaled(self, factor):
        """Every rate, Rabi frequency and detuning multiplied by ``factor``."""
        levels = tuple(Level(lv.label, lv.energy_offset * factor) for lv in self.levels)
        cs = tuple(replace(c, rabi=c.rabi * factor, detuning=c.detuning * factor) for c in self.couplings)
        ds = tuple(DecayChannel(d.upper, d.lower, d.rate * factor) for d in self.decays)
        return LevelScheme(levels, cs, ds)


@dataclass(frozen=True)
class PhysicalSpecies:
    mass: float  # amu
    wavelength: float  # nm

    def __post_init__(self):
        if not self.mass > 0 or not self.wavelength > 0:
            raise PhysicsDomainError("species mass and wavelength must be positive")

    @property
    def mass_kg(self):
        return self.mass * AMU

    @property
    def wavenumber(self):
        return 2 * math.pi / (self.wavelength * 1e-9)


CA40 = PhysicalSpecies(mass=39.962591, wavelength=729.0)
CA40_397 = PhysicalSpecies(mass=39.962591, wavelength=397.0)
HG199 = PhysicalSpecies(mass=198.968280, wavelength=194.2)
RB87 = PhysicalSpecies(mass=86.909180531, wavelength=780.24)


@dataclass(frozen=True)
class TrapMode:
    frequency: float  # MHz
    lamb_dicke: float
    recoil_alpha: float = ISOTROPIC_ALPHA
    species: PhysicalSpecies | None = None

    def __post_init__(self):
        if not self.frequency > 0:
            raise PhysicsDomainError(f"TrapMode.frequency must be > 0, got {self.frequency}")
        if not self.lamb_dicke >= 0:
            raise PhysicsDomainError(f"TrapMode.lamb_dicke must be >= 0, got {self.lamb_dicke}")
        if not 0 <= self.recoil_alpha <= 1:
            raise PhysicsDomainError(f"TrapMode.recoil_alpha must lie in [0, 1], got {self.recoil_alpha}")

    def check_lamb_dicke(self, mbar):
        """Warn when eta*sqrt(mbar) leaves the Lamb-Dicke regime."""
        val = self.lamb_dicke * math.sqrt(max(mbar, 0.0))
        if val > 0.3:
            warnings.warn(
                f"eta*sqrt(n) = {val:.3g} > 0.3: outside the Lamb-Dicke regime, "
                "lowest-order sideband rates are unreliable",
                stacklevel=2,
            )
        return val


def lamb_dicke_single(species, nu, axis_cosine=1.0):
    """Lamb-Dicke factor of a single particle in a trap of frequency ``nu`` (MHz).

    eta = |cos theta| * k * sqrt(hbar / (2 M omega)).
    """
    if not nu > 0:
        raise PhysicsDomainError(f"trap frequency must be > 0, got {nu}")
    omega = mhz_to_angular(nu)
    x0 = np.sqrt(HBAR / (2 * species.mass_kg * omega))
    return float(abs(axis_cosine) * species.wavenumber * x0)
