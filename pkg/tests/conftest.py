import numpy as np
import pytest

from ddrom.core import Geometry, SnapshotSet, StateLayout, TimeGrid

# Measured values worth surfacing in CI output even when every test passes
# (accuracy numbers, timing margins).  Tests append lines through the ci_log
# fixture; pytest_terminal_summary prints them after the run.
_CI_LINES: list[str] = []


@pytest.fixture
def ci_log():
    def log(line: str) -> None:
        _CI_LINES.append(str(line))

    return log


def pytest_terminal_summary(terminalreporter):
    if _CI_LINES:
        terminalreporter.section("measured results")
        for line in _CI_LINES:
            terminalreporter.write_line(line)


def make_set(
    data,
    n_s=1,
    periodic=False,
    dt=0.1,
    n_train=None,
    names=None,
):
    """Small snapshot set around a raw (n, n_t) array for unit tests."""
    data = np.asarray(data, dtype=np.float64)
    n, n_t = data.shape
    if n % n_s:
        raise ValueError("row count must divide by n_s")
    n_x = n // n_s
    if names is None:
        names = tuple(f"v{i}" for i in range(n_s))
    layout = StateLayout(n_s=n_s, n_x=n_x, variable_names=tuple(names))
    geometry = Geometry.circle(n_x) if periodic else Geometry.interval(n_x)
    time = TimeGrid(dt * np.arange(n_t), n_train=n_train)
    return SnapshotSet(layout=layout, geometry=geometry, time=time, data=data)
