import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from modscat.grid import Grid1D, make_grid, norm, parseval_norm, spectral_deriv


def test_points_and_spacing():
    g = make_grid(10.0, 64)
    assert g.dx == pytest.approx(20.0 / 64)
    assert g.points[0] == -10.0
    assert g.points[-1] == pytest.approx(10.0 - g.dx)


@pytest.mark.parametrize("n", [0, 15, 100, 24])
def test_bad_sizes(n):
    with pytest.raises(ValueError):
        make_grid(1.0, n)


@pytest.mark.parametrize("L", [0.0, -1.0, np.inf, np.nan])
def test_bad_length(L):
    with pytest.raises(ValueError):
        Grid1D(L, 64)


def test_derivatives_of_a_resolved_mode():
    g = make_grid(np.pi, 64)
    y = g.points
    f = np.exp(3j * y)
    for order in (1, 2, 3):
        assert np.allclose(spectral_deriv(g, f, order), (3j) ** order * f, atol=1e-11)


def test_gaussian_derivative(grid):
    y = grid.points
    f = np.exp(-y**2)
    assert np.allclose(spectral_deriv(grid, f, 2), (4 * y**2 - 2) * f, atol=1e-10)


def test_derivative_stack_and_errors(grid):
    y = grid.points
    stack = np.stack([np.exp(-y**2), np.exp(-(y - 1) ** 2)])
    d = spectral_deriv(grid, stack, 1)
    assert d.shape == stack.shape
    assert np.allclose(d[1], -2 * (y - 1) * stack[1], atol=1e-10)
    with pytest.raises(ValueError):
        spectral_deriv(grid, stack, 4)
    with pytest.raises(ValueError):
        spectral_deriv(grid, np.ones(10), 1)


def test_norms_of_gaussian(grid):
    y = grid.points
    f = np.exp(-y**2 / 2)
    assert norm(grid, f, "L2") == pytest.approx(np.pi**0.25, rel=1e-12)
    assert norm(grid, f, "Linf") == 1.0
    # int exp(-2 y^2) = sqrt(pi/2)
    assert norm(grid, f, "L4") == pytest.approx((np.pi / 2) ** 0.125, rel=1e-12)
    assert norm(grid, f, 4) == norm(grid, f, "L4")
    assert grid.norm(f) == norm(grid, f)


def test_norm_rejects_bad_input(grid):
    f = np.ones(grid.n)
    f[3] = np.nan
    with pytest.raises(ValueError):
        norm(grid, f)
    with pytest.raises(ValueError):
        norm(grid, np.ones(grid.n), 0.5)
    with pytest.raises(ValueError):
        norm(grid, np.ones(grid.n), "H1")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_parseval_and_linearity(coeffs):
    g = make_grid(20.0, 256)
    y = g.points
    f = coeffs[0] * np.exp(-(y - coeffs[1]) ** 2) + 1j * coeffs[2] * np.exp(-(y + coeffs[3]) ** 2)
    assert parseval_norm(g, f) == pytest.approx(norm(g, f), rel=1e-10, abs=1e-14)
    h = np.exp(-y**2)
    lhs = spectral_deriv(g, 2.0 * f + h, 2)
    assert np.allclose(lhs, 2.0 * spectral_deriv(g, f, 2) + spectral_deriv(g, h, 2), atol=1e-9)
