"""
Rings, spots and the hypothetical up-conversion arcs
====================================================

Builds the screen picture for the argon-pumped setup: SPDC rings at a few
wavelengths, the injected 789 nm spot, the stimulated 633 nm spot, and the
family of arcs where up-converted light would have to appear if it existed.
"""

# %%
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from spucsim import load_scenario, render_pattern, run_scenario

OUT = Path(__file__).with_name("output")
OUT.mkdir(exist_ok=True)

# %%
# The shipped scenario carries every geometric setting.  Running it also
# exposes the frames, which we look at in the CCD walkthrough.
scenario = load_scenario("argon789")
result = run_scenario(scenario)
screen = scenario.screen

for f in result.features:
    if f.kind == "spdc":
        print(f"SPDC ring {f.wavelength:7.2f} nm: radius {f.radius:6.2f} mm")
    else:
        print(f"{f.kind:>10} spot at x = {f.center[0]:6.2f} mm")

# %%
# Up-conversion arcs are anchored at the pump spot (pump frequency) and at the
# stimulated spot (stimulated frequency).  The arc shape between the anchors
# is a stand-in; only the anchors come from the kinematics.
arcs = result.spuc_features
print(f"{len(arcs)} arcs from {arcs[0].wavelength:.1f} nm to {arcs[-1].wavelength:.1f} nm")

# %%
# Render both halves of the experiment without camera noise.
rings_and_spots = render_pattern(result.features, screen, scenario.pattern.ring_width).irradiance
arc_map = render_pattern(arcs, screen, scenario.pattern.ring_width).irradiance
half = screen.width * screen.pixel_pitch / 2
extent = (-half, half, half, -half)

fig, axes = plt.subplots(1, 2, figsize=(10, 5))
axes[0].imshow(rings_and_spots, extent=extent, vmax=1.5, cmap="magma")
axes[0].set_title("pump on: SPDC rings and spots")
axes[1].imshow(arc_map, extent=extent, vmax=1.5, cmap="magma")
axes[1].set_title("pump off: where SPUC would be")
for ax in axes:
    ax.set_xlabel("x (mm)")
axes[0].set_ylabel("y (mm)")
fig.tight_layout()
fig.savefig(OUT / "screen_pattern.png", dpi=120)
