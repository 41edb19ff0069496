import numpy as np
import pytest

from replicheck.domain import Dataset, Observation


def make_dataset(cells, name="test"):
    """``cells`` maps (treatment, batch) -> list of outcomes."""
    rows = [Observation(y, tr, bt) for (tr, bt), ys in cells.items() for y in ys]
    return Dataset(tuple(rows), name=name)


def random_dataset(rng, t, b, counts=None, r=None, loc=0.0, scale=1.0):
    """Dataset with given per-cell counts (t x b array) or a constant r."""
    if counts is None:
        counts = np.full((t, b), r)
    rows = []
    for i in range(t):
        for j in range(b):
            for _ in range(int(counts[i][j])):
                rows.append(Observation(float(rng.normal(loc, scale)), f"T{i}", f"B{j}"))
    order = rng.permutation(len(rows))
    return Dataset(tuple(rows[k] for k in order))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def small_balanced():
    return make_dataset({
        ("C", "B1"): [10, 12], ("T", "B1"): [20, 22],
        ("C", "B2"): [11, 13], ("T", "B2"): [25, 27],
    })


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
