# %% [markdown]
# # Cooling one mode: rate equations against quantum trajectories
#
# Same three-level atom as in ``eit_spectrum.py``, now with a trap of
# frequency 0.1 (units of gamma) and Lamb-Dicke factor 0.145.

# %%
import numpy as np

from eitcool import ratecool as rc, schemes, trajectory as tj
from eitcool.core import TrapMode

s = schemes.fig3_scheme()
mode = TrapMode(0.1, 0.145)
rates = rc.scheme_rates(s, mode)
print(f"A+ = {rates.a_plus:.3e}, A- = {rates.a_minus:.3e}")
print(f"limit mbar = {rc.steady_state_n(rates):.4f}, cooling time = {rc.cooling_time(rates):.0f} /gamma")

# %% [markdown]
# The mean phonon number relaxes exponentially; the full distribution stays
# thermal once it gets there.

# %%
t = np.linspace(0, 5 * rc.cooling_time(rates), 6)
for ti, n in zip(t, rc.evolve_mean_n(rates, 2.0, t)):
    print(f"t = {ti:8.0f}   <n> = {n:.4f}")
p = rc.evolve_populations(rates, rc.thermal_distribution(2.0, 40), t[-1])
print("p_n:", np.round(p.probabilities[:4], 4))

# %% [markdown]
# A short trajectory ensemble. Thirty-two trajectories over two cooling
# times take a few seconds; the bundled ``fig3`` config runs the full
# 200-trajectory version through the CLI.

# %%
cfg = tj.TrajectoryConfig(s, mode, n_max=30, t_final=2 * rc.cooling_time(rates), dt=1.25, initial_n=2.0, record_interval=1250.0)
res = tj.ensemble_average(cfg, 32)
for ti, m, e in zip(res.times[::4], res.mean_n[::4], res.stderr_n[::4]):
    print(f"t = {ti:8.0f}   MC <n> = {m:.3f} +- {e:.3f}   rate {rc.evolve_mean_n(rates, 2.0, [ti])[0]:.3f}")
