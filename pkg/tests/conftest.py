import numpy as np
import pytest

from longfid.data_model import LongDataset, TimeGrid, VariableSpec


def continuous_dataset(series, var="y", step=1.0, subjects=None):
    """series: {subject: (times, values)} with plain lists allowed."""
    spec = VariableSpec(var, "continuous", grid_step=step)
    data = {
        var: {
            s: (np.asarray(t, dtype=float), np.asarray(v, dtype=float))
            for s, (t, v) in series.items()
        }
    }
    return LongDataset(data, {var: spec}, subjects=subjects)


def discrete_dataset(series, classes, var="s", step=1.0, subjects=None):
    spec = VariableSpec(var, "discrete", classes=tuple(classes), grid_step=step)
    data = {
        var: {
            s: (np.asarray(t, dtype=float), np.asarray(v, dtype=object))
            for s, (t, v) in series.items()
        }
    }
    return LongDataset(data, {var: spec}, subjects=subjects)


@pytest.fixture
def grid3():
    return TimeGrid(0.0, 2.0, 1.0)


@pytest.fixture(scope="session", autouse=True)
def warm_solver():
    """Compile the assignment kernels once so timed tests measure the algorithm."""
    from longfid.assignment import solve_assignment
    from longfid.measurement import _row_distance_matrix, _similarity_from_distances

    solve_assignment(np.array([[0.0, 1.0], [1.0, 0.0]]))
    bits = np.array([[1, 0], [0, 1]], dtype=np.uint8)
    _similarity_from_distances(_row_distance_matrix(bits, bits), 4)
