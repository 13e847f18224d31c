"""Numerical laboratory for modified scattering of the 1D cubic-quintic NLS.

    i v_t + v_xx - beta |v|^2 v - gamma |v|^4 v = 0

Solutions are handled mostly through the profile V(s, y) defined by
v(t, x) = t^{-1/2} exp(i x^2 / 4t) V(t, x/t).
"""

from .grid import Grid1D, make_grid, norm, spectral_deriv
from .ansatz import (
    PhaseConvention,
    ScatteringData,
    build_V0,
    phase_phi,
    physical_to_profile,
    profile_to_physical,
    residual_F0_profile,
)
from .series import AsymSeries, AsymTerm, LinearizedPair
from .scatter import ExtractedData, PhaseAccumulator, RateFit, fit_rate

__version__ = "0.1.0"
