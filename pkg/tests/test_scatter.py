import numpy as np
import pytest

from modscat.ansatz import ScatteringData, build_V0
from modscat.scatter import (PhaseAccumulator, accumulate_phase, extract, fit_rate, profile_error,
                             read_summary, rate_section, write_extracted, write_summary)
from modscat.solver import ProfileState


def v0_trajectory(data, s):
    return [ProfileState(si, build_V0(data, si), data.grid) for si in s]


# --- fit_rate


def test_fit_exact_power():
    s = np.geomspace(1, 100, 12)
    fit = fit_rate(s, s**-2.0, 3)
    assert fit.exponent == pytest.approx(-2, abs=1e-10)
    assert fit.log_power == 0
    assert fit.residual_rms < 1e-12


def test_fit_log_correction():
    s = np.geomspace(10, 1e4, 30)
    fit = fit_rate(s, np.log1p(np.log(s)) ** 0 * (1 + np.log(s)) ** 2 / s, 4)
    assert fit.exponent == pytest.approx(-1, abs=0.05)
    assert fit.log_power == 2


def test_fit_constant():
    fit = fit_rate(np.geomspace(1, 100, 10), np.full(10, 3.0), 2)
    assert fit.exponent == pytest.approx(0, abs=1e-12) and fit.log_power == 0


@pytest.mark.parametrize("s, v", [
    (np.full(10, 5.0), np.ones(10)),             # all equal s
    (np.geomspace(1, 10, 10), np.ones(10)),      # one decade only
    (np.geomspace(1, 100, 5), np.ones(5)),       # too few samples
    (np.geomspace(1, 100, 10), -np.ones(10)),    # non-positive values
])
def test_fit_rejects(s, v):
    with pytest.raises(ValueError):
        fit_rate(s, v, 1)


def test_fit_window_override():
    s = np.geomspace(20, 500, 10)
    with pytest.raises(ValueError):
        fit_rate(s, 1 / s, 0)
    assert fit_rate(s, 1 / s, 0, min_decades=1.3).exponent == pytest.approx(-1)


# --- phase accumulation


def test_accumulate_zero_and_constant(grid):
    acc = PhaseAccumulator.start(1.0, grid.n)
    z = [ProfileState(s, np.zeros(grid.n, complex), grid) for s in (1.0, 2.0)]
    assert np.all(accumulate_phase(acc, z[0], z[1], 1.0, 1.0).G == 0)
    a0 = 0.7
    errs = []
    for count in (41, 81):
        s = np.geomspace(1, 10, count)
        acc = PhaseAccumulator.start(1.0, grid.n)
        for s1, s2 in zip(s, s[1:]):
            acc = accumulate_phase(acc, ProfileState(s1, np.full(grid.n, a0 + 0j), grid),
                                   ProfileState(s2, np.full(grid.n, a0 + 0j), grid), 0.5, 0.0)
        assert acc.last_s == pytest.approx(10.0)
        errs.append(np.max(np.abs(acc.G - 0.5 * a0**2 * np.log(10.0))))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.05)


def test_accumulate_rejects_bad_order(grid):
    acc = PhaseAccumulator.start(2.0, grid.n)
    a = ProfileState(2.0, np.zeros(grid.n, complex), grid)
    b = ProfileState(1.5, np.zeros(grid.n, complex), grid)
    with pytest.raises(ValueError):
        accumulate_phase(acc, a, b, 1.0, 0.0)
    with pytest.raises(ValueError):
        accumulate_phase(acc, ProfileState(3.0, a.V, grid), ProfileState(4.0, a.V, grid), 1.0, 0.0)


# --- extraction


def test_extract_closed_form(grid):
    y = grid.points
    data = ScatteringData(grid, 0.4 * np.exp(-y**2 / 8), 0.5 * np.exp(-y**2 / 8) * np.sin(y),
                          0.8, 0.0)
    traj = v0_trajectory(data, np.geomspace(1, 1000, 400))
    ext = extract(traj, 0.8, 0.0)
    assert np.max(np.abs(ext.a - data.a)) <= 1e-8
    assert np.max(np.abs(ext.b - data.b)[ext.mask]) <= 1e-6
    assert not ext.degenerate


def test_extract_large_phase_is_unwrapped(grid):
    y = grid.points
    b = 9.0 * np.exp(-y**2 / 18)  # several turns across the bump
    data = ScatteringData(grid, 0.5 * np.exp(-y**2 / 50), np.where(np.abs(y) < 36, b, 0.0), 0.3, 0.0)
    ext = extract(v0_trajectory(data, np.geomspace(1, 200, 200)), 0.3, 0.0)
    idx = np.flatnonzero(ext.mask)
    assert np.max(np.abs(np.diff(ext.b[idx]))) < np.pi
    # the branch is fixed at the centre, so b is recovered up to one global 2 pi shift
    shift = (ext.b - data.b)[ext.mask]
    turns = np.round(shift[0] / (2 * np.pi))
    assert np.max(np.abs(shift - 2 * np.pi * turns)) <= 1e-6


def test_extract_zero(grid):
    traj = [ProfileState(s, np.zeros(grid.n, complex), grid) for s in np.geomspace(1, 200, 20)]
    ext = extract(traj, 1.0, 1.0)
    assert ext.degenerate
    assert np.all(ext.a == 0) and np.all(ext.b == 0)
    assert ext.rate_modulus is None and rate_section(None) == {"degenerate": "true"}


def test_extract_needs_span(grid, data):
    with pytest.raises(ValueError):
        extract(v0_trajectory(data, np.geomspace(1, 50, 20)), 0.2, 0.1)


def test_extract_gauge_independent(small_data_run):
    full = extract(small_data_run, 1.0, 1.0)
    head, tail = small_data_run[:10], small_data_run[9:]
    acc = PhaseAccumulator.start(head[0].s, head[0].grid.n)
    for a, b in zip(head, head[1:]):
        acc = accumulate_phase(acc, a, b, 1.0, 1.0)
    shifted = extract(tail, 1.0, 1.0, acc=acc, min_span=10)
    plain = extract(tail, 1.0, 1.0, min_span=10)
    assert np.allclose(shifted.a, full.a) and np.allclose(shifted.b, plain.b, atol=1e-12)


def test_small_data_rates(small_data_run):
    ext = extract(small_data_run, 1.0, 1.0)
    assert -1.3 <= ext.rate_modulus.exponent <= -0.7
    assert -1.3 <= ext.rate_phase.exponent <= -0.7
    assert np.all(ext.a >= 0)
    s = np.array([st.s for st in small_data_run])
    err = profile_error(small_data_run, ext.as_scattering_data(1.0, 1.0)) / np.sqrt(s)
    sel = s <= 250
    assert fit_rate(s[sel], err[sel], 0).exponent <= -1.2


def test_text_output(tmp_path, grid, data):
    ext = extract(v0_trajectory(data, np.geomspace(1, 500, 60)), 0.2, 0.0)
    write_extracted(tmp_path / "e.txt", ext)
    arr = np.loadtxt(tmp_path / "e.txt")
    assert arr.shape == (grid.n, 3)
    assert np.array_equal(arr[:, 1], ext.a)
    write_summary(tmp_path / "s.ini", {"rate": rate_section(ext.rate_modulus), "x": {"k": 1}})
    back = read_summary(tmp_path / "s.ini")
    assert back["x"]["k"] == "1" and "exponent" in back["rate"]
