"""EIT laser cooling of trapped particles: spectra, rate equations, quantum trajectories, ion strings and thermometry."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    ConfigError,
    DecayChannel,
    EitCoolError,
    LaserField,
    Level,
    LevelScheme,
    NumericalError,
    PhysicalSpecies,
    PhysicsDomainError,
    SchemeError,
    TrapMode,
    lamb_dicke_single,
)

__all__ = [
    "ConfigError",
    "DecayChannel",
    "EitCoolError",
    "LaserField",
    "Level",
    "LevelScheme",
    "NumericalError",
    "PhysicalSpecies",
    "PhysicsDomainError",
    "SchemeError",
    "TrapMode",
    "lamb_dicke_single",
]
