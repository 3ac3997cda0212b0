"""Ready-made level schemes for the standard cooling configurations.

Labels: ``g`` is the ground state probed by the cooling laser, ``r`` the state
driven by the coupling laser, ``e`` the short-lived excited state and ``d`` a
repumped leak state. The cooling laser is always ``("g", "e")``.
"""

from __future__ import annotations

from .core import DecayChannel, LaserField, Level, LevelScheme

PROBE = ("g", "e")
COUPLING = ("r", "e")


def two_level(gamma, rabi, detuning, axis_cosine=1.0):
    return LevelScheme(
        levels=(Level("g"), Level("e")),
        couplings=(LaserField("g", "e", rabi, detuning, axis_cosine),),
        decays=(DecayChannel("e", "g", gamma),),
    )


def lambda_scheme(
    gamma,
    omega_g,
    omega_r,
    delta_g,
    delta_r,
    branching_g=0.5,
    cos_g=1.0,
    cos_r=0.0,
):
    """Three-level Lambda system; ``branching_g`` is the fraction of decays into g."""
    decays = []
    if branching_g > 0:
        decays.append(DecayChannel("e", "g", gamma * branching_g))
    if branching_g < 1:
        decays.append(DecayChannel("e", "r", gamma * (1 - branching_g)))
    return LevelScheme(
        levels=(Level("g"), Level("r"), Level("e")),
        couplings=(
            LaserField("g", "e", omega_g, delta_g, cos_g),
            LaserField("r", "e", omega_r, delta_r, cos_r),
        ),
        decays=tuple(decays),
    )


def repumped_lambda(
    gamma,
    omega_g,
    omega_r,
    delta_g,
    delta_r,
    omega_repump,
    delta_repump,
    leak_fraction,
    cos_g=1.0,
    cos_r=0.0,
):
    """Lambda system whose excited state also decays into ``d``, repumped back to ``e``.

    The non-leaking decays are shared equally between g and r.
    """
    share = gamma * (1 - leak_fraction) / 2
    return LevelScheme(
        levels=(Level("g"), Level("r"), Level("e"), Level("d")),
        couplings=(
            LaserField("g", "e", omega_g, delta_g, cos_g),
            LaserField("r", "e", omega_r, delta_r, cos_r),
            LaserField("d", "e", omega_repump, delta_repump, 0.0),
        ),
        decays=(
            DecayChannel("e", "g", share),
            DecayChannel("e", "r", share),
            DecayChannel("e", "d", gamma * leak_fraction),
        ),
    )


def fig3_scheme(gamma=1.0):
    """Generic Lambda system: coupling Rabi gamma, probe gamma/20, both 2.5 gamma blue."""
    return lambda_scheme(gamma, gamma / 20, gamma, 2.5 * gamma, 2.5 * gamma)


def hg_scheme():
    """Hg+ S1/2(F=1, m=1, 0) / P1/2(F'=1, m=1) with the F=0 leak repumped resonantly."""
    return repumped_lambda(64.0, 4.0, 21.0, 80.0, 80.0, 2.0, 0.0, leak_fraction=1 / 3)


def rb_scheme():
    """87Rb (F=1, m=0, 1) - (F'=1, m=1) with repumping from F=2 (1/6 of the decays)."""
    return repumped_lambda(6.0, 0.1, 1.2, 10.0, 10.0, 1.0, 0.0, leak_fraction=1 / 6)


def ca_string_scheme():
    """Ca+ S1/2 - P1/2: sigma+ coupling from S(-1/2), pi cooling beam from S(+1/2).

    P(+1/2) decays to S(+1/2) with probability 1/3 and to S(-1/2) with 2/3.
    """
    return lambda_scheme(20.0, 0.5, 30.0, 75.0, 75.0, branching_g=1 / 3)
