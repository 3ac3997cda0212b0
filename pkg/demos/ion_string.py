# %% [markdown]
# # A ten-ion string
#
# Equilibrium positions, axial modes and the cooling limit of each mode for
# 40Ca+ at 0.7 MHz axial confinement.

# %%
import numpy as np

from eitcool import ionstring as ist, schemes
from eitcool.core import CA40

string = ist.build_string(10, CA40, 0.7)
print("positions (um):", np.round(string.positions, 2))
print(f"closest pair {string.min_spacing:.3f} um")
print("axial modes (MHz):", np.round([m.frequency for m in string.axial_modes], 3))

# %% [markdown]
# Radial confinement has to beat the zig-zag instability. The power law and
# the exact soft-mode condition differ by about 13% at N = 10.

# %%
print(f"power law {ist.zigzag_threshold(10, 0.7):.2f} MHz, exact {ist.exact_zigzag_threshold(10, 0.7):.2f} MHz")

# %% [markdown]
# One pair of beams cools every axial mode at once because the bright
# resonance is broad compared with the mode band.

# %%
s = schemes.lambda_scheme(20.0, 0.5, 30.0, 75.0, 75.0, branching_g=1 / 3)
rows = ist.multimode_cooling(string, s, include_radial=False)
for r in rows:
    print(f"mode {r.index}: {r.frequency:6.3f} MHz   mbar {r.mbar:.3f}   tau {r.tau:7.1f} us")

# %% [markdown]
# Residual motion of the spectator modes blurs the Rabi frequency of a gate
# driven on the centre-of-mass mode with a 729 nm laser.

# %%
etas = ist.mode_lamb_dicke(string, 0)
keep = list(range(1, 10))
blur, osc = ist.rabi_blur(etas[keep], np.array([rows[q].mbar for q in keep]), 10)
print(f"dOmega/Omega = {blur:.2e}, about {osc:.0f} clean oscillations")
