# %% [markdown]
# # Higher-order asymptotic profiles
#
# Each Newton step adds terms c(y) e^{i phi} ln^j s / s^k chosen so that the residual of the
# profile equation decays one power of s faster.

# %%
import numpy as np

from modscat import ScatteringData, make_grid
from modscat.grid import norm
from modscat.scatter import fit_rate
from modscat.series import evaluate_series, expand, psi_of_series

grid = make_grid(40.0, 1024)
data = ScatteringData.from_presets(grid, "gaussian(0.3, 2, 0)", "zero", 0.2, 0.1)
Vs = expand(data, 3)
for n, V in enumerate(Vs):
    print(f"V_{n}: terms {sorted(V.terms)}")

# %% [markdown]
# Residual decay for each V_n over s in [10, 1000].

# %%
s = np.geomspace(10, 1000, 25)
for n, V in enumerate(Vs):
    R = psi_of_series(V, 5 * n + 4)
    vals = [norm(grid, evaluate_series(R, si), "Linf") for si in s]
    print(f"n = {n}:  lowest order {R.min_order},  fitted exponent {fit_rate(s, vals, 0).exponent:.3f}")
