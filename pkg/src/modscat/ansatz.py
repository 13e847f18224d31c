"""Profile variables, the first-order asymptotic profile V0 and its residual.

The change of variables is

    v(t, x) = t^{-1/2} exp(i x^2 / 4t) V(t, x/t),

under which the NLS becomes

    Psi(V) = i V_s - beta s^{-1} |V|^2 V - gamma s^{-2} |V|^4 V + s^{-2} V_yy = 0.

V0 = a(y) exp(i phi), phi = -beta a^2 ln s + b, solves the ODE part exactly.
"""

from dataclasses import dataclass

import numpy as np

from .grid import Grid1D, spectral_deriv
from .profiles import evaluate_preset

EDGE_FRACTION = 0.1
EDGE_TOL = 1e-10


@dataclass(frozen=True)
class PhaseConvention:
    include_quintic_phase: bool = False


@dataclass(frozen=True, eq=False)
class ScatteringData:
    """Asymptotic data: modulus a(y) >= 0, phase offset b(y), couplings."""

    grid: Grid1D
    a: np.ndarray
    b: np.ndarray
    beta: float
    gamma: float

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if a.shape != (self.grid.n,) or b.shape != (self.grid.n,):
            raise ValueError("a and b must be sampled on the grid")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("a and b must be finite")
        if np.any(a < 0):
            raise ValueError("a must be non-negative")
        edge = _edge_mask(self.grid)
        if np.any(np.abs(a[edge]) > EDGE_TOL) or np.any(np.abs(b[edge]) > EDGE_TOL):
            raise ValueError("a and b must decay below 1e-10 near the grid edges")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def from_presets(cls, grid, a="gaussian(0.3, 2, 0)", b="zero", beta=0.2, gamma=0.1):
        y = grid.points
        return cls(grid, evaluate_preset(a, y), evaluate_preset(b, y), beta, gamma)


def _edge_mask(grid):
    y = grid.points
    return np.abs(y) >= (1.0 - EDGE_FRACTION) * grid.half_length


def _check_time(s):
    if not s > 0:
        raise ValueError(f"time must be positive, got {s}")


def phase_phi(data: ScatteringData, s: float, conv=PhaseConvention()) -> np.ndarray:
    _check_time(s)
    a2 = data.a**2
    phi = -data.beta * a2 * np.log(s) + data.b
    if conv.include_quintic_phase:
        phi = phi + data.gamma * a2**2 / s
    return phi


def phase_phi_ds(data, s, conv=PhaseConvention()):
    """Exact s-derivative of :func:`phase_phi`."""
    a2 = data.a**2
    d = -data.beta * a2 / s
    if conv.include_quintic_phase:
        d = d - data.gamma * a2**2 / s**2
    return d


def build_V0(data: ScatteringData, s: float, conv=PhaseConvention()) -> np.ndarray:
    return data.a * np.exp(1j * phase_phi(data, s, conv))


def residual_F0_profile(data: ScatteringData, s: float, conv=PhaseConvention()) -> np.ndarray:
    """Psi(V0)(s, .) evaluated with spectral y-derivatives.

    With the default convention this is s^{-2} (-gamma |V0|^4 V0 + d_y^2 V0).
    """
    _check_time(s)
    V0 = build_V0(data, s, conv)
    mod2 = data.a**2
    V0_s = 1j * phase_phi_ds(data, s, conv) * V0
    return (
        1j * V0_s
        - data.beta / s * mod2 * V0
        - data.gamma / s**2 * mod2**2 * V0
        + spectral_deriv(data.grid, V0, 2) / s**2
    )


def interp_cubic(grid: Grid1D, f, q) -> np.ndarray:
    """Four-point Lagrange interpolation of samples ``f`` at positions ``q``.

    Positions outside ``[-L, L)`` give zero, and so do stencil points that
    fall off the grid.
    """
    f = np.asarray(f)
    q = np.asarray(q, dtype=float)
    p = (q + grid.half_length) / grid.dx
    i0 = np.floor(p).astype(np.int64)
    r = p - i0
    # Lagrange basis on nodes -1, 0, 1, 2
    w = (
        -r * (r - 1.0) * (r - 2.0) / 6.0,
        (r + 1.0) * (r - 1.0) * (r - 2.0) / 2.0,
        -(r + 1.0) * r * (r - 2.0) / 2.0,
        (r + 1.0) * r * (r - 1.0) / 6.0,
    )
    out = np.zeros(q.shape, dtype=np.result_type(f.dtype, float))
    for off, wk in zip((-1, 0, 1, 2), w):
        idx = i0 + off
        ok = (idx >= 0) & (idx < grid.n)
        out[ok] += wk[ok] * f[idx[ok]]
    inside = (q >= -grid.half_length) & (q < grid.half_length)
    out[~inside] = 0.0
    return out


def profile_to_physical(V, t: float, y_grid: Grid1D, x_grid: Grid1D) -> np.ndarray:
    """v(t, x) = t^{-1/2} e^{i x^2/4t} V(t, x/t) sampled on ``x_grid``."""
    _check_time(t)
    x = x_grid.points
    Vq = interp_cubic(y_grid, np.asarray(V, dtype=complex), x / t)
    return t**-0.5 * np.exp(1j * x**2 / (4.0 * t)) * Vq


def physical_to_profile(v, t: float, x_grid: Grid1D, y_grid: Grid1D) -> np.ndarray:
    """Inverse map V(t, y) = t^{1/2} e^{-i t y^2/4} v(t, t y) on ``y_grid``."""
    _check_time(t)
    y = y_grid.points
    vq = interp_cubic(x_grid, np.asarray(v, dtype=complex), t * y)
    return t**0.5 * np.exp(-1j * t * y**2 / 4.0) * vq
