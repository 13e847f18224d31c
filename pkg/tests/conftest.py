import numpy as np
import pytest

from modscat import ScatteringData, make_grid

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def grid():
    return make_grid(40.0, 1024)


@pytest.fixture(scope="session")
def small_grid():
    return make_grid(40.0, 256)


@pytest.fixture(scope="session")
def data(grid):
    return ScatteringData.from_presets(grid, "gaussian(0.3, 2, 0)", "zero", 0.2, 0.1)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_data_run(grid):
    """Forward profile run: epsilon = 0.05 Gaussian, beta = gamma = 1, s in [1, 500]."""
    from modscat.cli import initial_profile
    from modscat.solver import ProfileState, StepControl, solve_forward

    V1 = initial_profile(grid, 0.05, "gaussian(1, 1, 0)", 1.0)
    snaps = tuple(float(t) for t in np.geomspace(1, 500, 80))
    return solve_forward(ProfileState(1.0, V1, grid), 500.0, StepControl(5e-3, snapshot_times=snaps), 1.0, 1.0)


@pytest.fixture(scope="session")
def coarse_duhamel():
    """Backward construction on a coarse grid, with three close snapshots at s = 100."""
    from modscat.solver import StepControl, duhamel_iterate

    g = make_grid(40.0, 512)
    d = ScatteringData.from_presets(g, "gaussian(0.3, 2, 0)", "zero", 0.2, 0.1)
    snaps = tuple(sorted(set(np.geomspace(10, 1000, 30)) | {99.8, 100.0, 100.2}))
    traj, log = duhamel_iterate(d, 1000.0, 10.0, StepControl(2e-2, snapshot_times=snaps), 6, 1e-8)
    return d, snaps, traj, log
