# %% [markdown]
# # Absorption of a three-level atom
#
# A strong coupling beam on r-e dresses the excited state. Scanning a weak
# probe on g-e shows a transparency point at two-photon resonance and a
# narrow, light-shifted peak just above it.

# %%
import numpy as np

from eitcool import bloch, schemes

s = schemes.lambda_scheme(gamma=1.0, omega_g=0.05, omega_r=1.0, delta_g=2.5, delta_r=2.5)
spec = bloch.absorption_spectrum(s, schemes.PROBE, -2.0, 4.0, 601)
print(f"max scattering rate {np.nanmax(spec.rates):.3e} /us at {spec.probe_detunings[np.nanargmax(spec.rates)]:.3f} MHz")

# %% [markdown]
# At Delta_g = Delta_r the atom is pumped into the dark superposition and
# stops scattering.

# %%
W = bloch.probe_function(s, schemes.PROBE)
print(f"W(2.5) = {W(2.5):.2e}")

# %% [markdown]
# The narrow peak sits one ac-Stark shift above the dark point. Tuning the
# coupling so that this shift equals the trap frequency puts the red sideband
# on the peak and the carrier on the zero.

# %%
delta = bloch.ac_stark_shift(2.5, 1.0)
pos, fwhm, peak = bloch.find_bright_resonance(s, schemes.PROBE, (2.55, 2.75))
print(f"predicted {2.5 + delta:.4f} MHz, located {pos:.4f} MHz, width {fwhm:.4f} MHz")
