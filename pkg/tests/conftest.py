import sys

import numpy as np
import pytest

from hmbeam.array_model import AngleGrid, ScenarioConfig, UpaGeometry


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_geom():
    # 16 directions on a 16x4 array: segments of 16 elements span whole rows
    return UpaGeometry(16, 4)


@pytest.fixture
def small_grid():
    return AngleGrid(16)


@pytest.fixture
def small_scenario(small_geom, small_grid):
    return ScenarioConfig(1, 1, small_geom, small_grid, noise_power=0.0)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    report = getattr(module, "REPORT", None)
    if report:
        terminalreporter.section("acceptance criteria")
        for name in sorted(report):
            terminalreporter.write_line(report[name])
