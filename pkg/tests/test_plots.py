import math

from hypothesis import given, strategies as st

from replicheck.plots import nice_ticks

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(finite, finite)
def test_ticks_enclose_range(a, b):
    lo, hi = min(a, b), max(a, b)
    ticks = nice_ticks(lo, hi)
    assert ticks == sorted(ticks)
    # round-off slack of a billionth of a step is allowed at either end
    tol = 1e-9 * (ticks[1] - ticks[0])
    assert ticks[0] <= lo + tol
    if hi > lo:
        assert ticks[-1] >= hi - tol
    assert 2 <= len(ticks) <= 12


def test_ticks_are_round():
    assert nice_ticks(-1.8, 4.1) == [-2, 0, 2, 4, 6]
    assert nice_ticks(0, 1) == [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    steps = {round(b - a, 9) for a, b in zip(nice_ticks(3, 97), nice_ticks(3, 97)[1:])}
    assert len(steps) == 1
    step = steps.pop()
    assert step / 10 ** math.floor(math.log10(step)) in (1, 2, 2.5, 5)
