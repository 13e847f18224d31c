"""Periodic 1D grid, spectral derivatives and discrete norms.

Fields are plain numpy arrays sampled on a :class:`Grid1D`; every function
that needs the spacing or the wavenumbers takes the grid explicitly.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on ``[-half_length, half_length)``."""

    half_length: float
    n: int

    def __post_init__(self):
        if not np.isfinite(self.half_length) or self.half_length <= 0:
            raise ValueError(f"half_length must be positive, got {self.half_length}")
        n = self.n
        if int(n) != n or n < 16 or (int(n) & (int(n) - 1)) != 0:
            raise ValueError(f"n must be a power of two >= 16, got {n}")
        object.__setattr__(self, "n", int(n))
        object.__setattr__(self, "half_length", float(self.half_length))

    @property
    def dx(self) -> float:
        return 2.0 * self.half_length / self.n

    @cached_property
    def points(self) -> np.ndarray:
        return -self.half_length + self.dx * np.arange(self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return 2.0 * np.pi * sfft.fftfreq(self.n, d=self.dx)

    def deriv(self, f, order=1):
        return spectral_deriv(self, f, order)

    def norm(self, f, kind="L2"):
        return norm(self, f, kind)


def make_grid(half_length: float, n: int) -> Grid1D:
    return Grid1D(half_length, n)


def spectral_deriv(grid: Grid1D, f, order: int = 1) -> np.ndarray:
    """Derivative of order 1, 2 or 3 via the Fourier multiplier (i xi)^order.

    Works along the last axis, so a stack of fields can be differentiated
    at once. Real input is promoted to complex.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"unsupported derivative order {order}")
    f = np.asarray(f, dtype=complex)
    if f.shape[-1] != grid.n:
        raise ValueError("field length does not match grid")
    mult = (1j * grid.wavenumbers) ** order
    if order % 2 == 1:
        # the Nyquist mode has no well-defined odd derivative
        mult = mult.copy()
        mult[grid.n // 2] = 0.0
    return sfft.ifft(mult * sfft.fft(f, axis=-1), axis=-1)


def norm(grid: Grid1D, f, kind="L2") -> float:
    """Discrete norm of a sampled field.

    ``kind`` is ``"L2"``, ``"Linf"`` or a real ``p >= 1`` (also ``"L4"`` style
    strings) for the Riemann-sum Lp norm.
    """
    f = np.asarray(f)
    if f.shape[-1] != grid.n:
        raise ValueError("field length does not match grid")
    if not np.all(np.isfinite(f)):
        raise ValueError("field contains non-finite values")
    a = np.abs(f)
    if kind in ("Linf", "inf", np.inf):
        return float(a.max())
    if kind == "L2":
        return float(np.sqrt(np.sum(a * a) * grid.dx))
    if isinstance(kind, str):
        if not kind.startswith("L"):
            raise ValueError(f"unknown norm kind {kind!r}")
        kind = float(kind[1:])
    p = float(kind)
    if p < 1:
        raise ValueError("Lp norm needs p >= 1")
    return float((np.sum(a**p) * grid.dx) ** (1.0 / p))


def parseval_norm(grid: Grid1D, f) -> float:
    """L2 norm computed from the discrete Fourier coefficients."""
    fh = sfft.fft(np.asarray(f, dtype=complex))
    return float(np.sqrt(np.sum(np.abs(fh) ** 2) * grid.dx / grid.n))
