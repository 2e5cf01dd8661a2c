import numpy as np
import pytest

from isolab.errors import NumericalAbort
from isolab.integrate import StepStats, integrate


def test_exponential_growth():
    y = integrate(lambda s, y: y, [1.0], 0.0, 1.0, 1e-12)
    assert abs(y[0] - np.e) < 1e-10


def test_complex_rotation_is_accurate():
    y = integrate(lambda s, y: 1j * y, [1.0], 0.0, 2 * np.pi, 1e-11)
    assert abs(y[0] - 1) < 1e-9


@pytest.mark.parametrize("tol", [1e-6, 1e-8, 1e-10])
def test_error_tracks_tolerance(tol):
    y = integrate(lambda s, y: np.array([y[1], -y[0]]), [0.0, 1.0], 0.0, 10.0, tol)
    assert abs(y[0] - np.sin(10.0)) < 100 * tol * 10


def test_stats_and_callback():
    seen = []
    stats = StepStats()
    integrate(lambda s, y: -y, [1.0], 0.0, 1.0, 1e-9, callback=lambda s, y: seen.append(s), stats=stats)
    assert stats.accepted == len(seen) and seen[-1] == 1.0
    assert all(a < b for a, b in zip(seen, seen[1:]))


def test_singularity_triggers_step_underflow():
    with pytest.raises(NumericalAbort) as exc:
        integrate(lambda s, y: y * y, [1.0], 0.0, 2.0, 1e-10)
    assert exc.value.code == "STEP_UNDERFLOW"


def test_absolute_mode_is_tighter_for_large_states():
    # y' = y from y(0) = 1e3: relative control allows ~1e3 times larger error
    exact = 1e3 * np.e
    rel = integrate(lambda s, y: y, np.array([1e3 + 0j]), 0.0, 1.0, 1e-8)
    ab = integrate(lambda s, y: y, np.array([1e3 + 0j]), 0.0, 1.0, 1e-8, relative=False)
    assert abs(ab[0] - exact) < 1e-7
    assert abs(ab[0] - exact) < abs(rel[0] - exact)
