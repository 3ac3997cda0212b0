# %% [markdown]
# # Reading a temperature off sideband data
#
# Two estimators: the red/blue sideband ratio, and a fit to blue-sideband
# Rabi flops.

# %%
import math

import numpy as np

from eitcool import thermometry as th

eta, omega = 0.05, 2 * math.pi
pulse = math.pi / (2 * eta * omega)

counts = th.simulate_shelving(0.18, eta, omega, pulse, shots=400, seed=1)
mbar, (lo, hi) = th.sideband_ratio_to_n(counts)
print(counts)
print(f"ratio estimate {mbar:.3f}  [{lo:.3f}, {hi:.3f}]")

# %% [markdown]
# Flops with 200 shots per point, fitted with a parametric bootstrap.

# %%
times = np.linspace(0, 40, 80)
data = th.noisy_rabi(th.rabi_signal(0.18, eta, omega, times), shots=200, seed=3)
fit = th.fit_thermal(data, eta, n_boot=50, seed=3)
print(fit.report())
print(f"ground-state probability {fit.p0:.1%}")
