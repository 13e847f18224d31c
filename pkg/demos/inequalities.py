# %% [markdown]
# # Inequality constants
#
# The interpolation constants are calibrated once on a seeded family of wave packets
# and then frozen. A fresh suite should stay below them.

# %%
import numpy as np

from modscat import analysis

frozen = analysis.frozen_constants()
print("frozen constants:", frozen["interpolation"])

grid, fields = analysis.random_suite(seed=7, count=300)
for j, k in analysis.INTERPOLATION_PAIRS:
    ratios = [np.divide(*analysis.interpolation_sides(grid, V, j, k)) for V in fields]
    print(f"(j, k) = ({j}, {k}):  worst ratio {max(ratios):.4f}  vs frozen {frozen['interpolation'][f'{j},{k}']:.4f}")

# %% [markdown]
# The sup-norm bound has constant 1. Gaussians come within about 20% of it.

# %%
y = grid.points
for width in (0.5, 1.0, 3.0):
    rep = analysis.check_supnorm_bound(grid, np.exp(-y**2 / (2 * width**2)))
    print(f"width {width}: lhs {rep.lhs:.4f}  rhs {rep.rhs:.4f}  ok {rep.satisfied}")
