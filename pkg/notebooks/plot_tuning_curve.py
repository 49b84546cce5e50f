"""
Phase matching in a 51 degree LiIO3 crystal
===========================================

Walks through the type-I kinematics for a 351 nm pump: refractive indices,
emission angles against signal wavelength, and the direction of the beam
stimulated by a 789 nm seed.

Run with ``python notebooks/plot_tuning_curve.py``; figures land in
``notebooks/output/``.
"""

# %%
# Indices of refraction
# ---------------------
# The shipped table gives the ordinary index and the principal extraordinary
# index.  The pump travels as an extraordinary wave, so its index depends on
# the angle to the optic axis.
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from spucsim import (BeamSpec, CrystalSpec, PhaseMatchError, direction_from_angles, exit_beam, idler_wavelength,
                     index_extraordinary, index_ordinary, index_principal_extraordinary, load_dispersion,
                     solve_emission_angles, stimulated_direction)
from spucsim.kinematics import angle_between, collinear_cut_angle

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)

liio3 = load_dispersion("liio3")
for wl in (351, 633, 789):
    print(f"{wl} nm: n_o = {index_ordinary(liio3, wl):.5f}, n_e = {index_principal_extraordinary(liio3, wl):.5f}")
print(f"pump index at 51 deg: {index_extraordinary(liio3, 351, math.radians(51)):.5f}")

# %%
# The crystal is cut close to, but not exactly at, the degenerate collinear
# angle.  Below that angle a normally incident pump cannot phase-match signals
# near 702 nm; a small external tilt fixes it.
print(f"degenerate collinear cut: {collinear_cut_angle(liio3, 351.0):.3f} deg")
crystal = CrystalSpec(liio3, 51.0)

# %%
# Tuning curves
# -------------
# External emission angle (measured from the pump in air) against signal
# wavelength, for a pump at normal incidence and tilted by 2 degrees.
signal = np.linspace(700, 1100, 161)
fig, ax = plt.subplots(figsize=(6, 4))
for tilt in (0.0, 2.0):
    pump = BeamSpec(351.0, direction_from_angles(tilt, 180.0))
    ext = []
    for wl in signal:
        try:
            sol = solve_emission_angles(crystal, pump, float(wl))
            ext.append(math.degrees(angle_between(exit_beam(sol.signal, crystal).direction, pump.direction)))
        except PhaseMatchError:
            ext.append(np.nan)
    ax.plot(signal, ext, label=f"pump tilt {tilt:g} deg")
ax.set_xlabel("signal wavelength (nm)")
ax.set_ylabel("external cone half-angle (deg)")
ax.legend()
fig.tight_layout()
fig.savefig(OUT / "tuning_curve.png", dpi=120)

# %%
# Stimulated emission
# -------------------
# Seeding at 789 nm along its own phase-matched direction drives emission at
# the energy-conjugate wavelength along k0 - k1, which lands on the conjugate
# SPDC cone.
pump = BeamSpec(351.0, direction_from_angles(2.0, 180.0))
sol = solve_emission_angles(crystal, pump, 789.0)
seed = exit_beam(sol.signal, crystal)
stim = stimulated_direction(pump, seed, crystal)
print(f"idler for 789 nm: {idler_wavelength(351, 789):.2f} nm")
print(f"stimulated vs SPDC idler direction: {angle_between(stim.internal.direction, sol.idler.direction):.1e} rad")
print(f"phase matched: {stim.matched} (mismatch {stim.mismatch:.1e})")
