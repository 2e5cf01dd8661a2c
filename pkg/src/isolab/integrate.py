"""Adaptive Dormand-Prince 5(4) integrator for complex linear and nonlinear ODEs.

The independent variable is real (arclength along a path in the z-plane or
in parameter space); the state is a flat complex vector.  Local error is
controlled *per unit step*: a step of length h is accepted when the
embedded error estimate satisfies

    |err|_max <= tol * h * (1 + |y|_max)      (relative=True, default)
    |err|_max <= tol * h                      (relative=False)

so the accumulated error over a path of length L stays O(tol * L).  The
absolute form is the transport contract; the mixed form lets nonlinear
flows follow a solution whose size grows by many orders of magnitude.  Step
sizes follow a PI controller.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NumericalAbort

# Dormand & Prince (1980) coefficients
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

_SAFETY = 0.9
_FAC_MIN = 0.2
_FAC_MAX = 5.0
# PI gains for an error-per-unit-step estimate of order 4
_ALPHA = 0.7 / 4
_BETA = 0.4 / 4


@dataclass
class StepStats:
    accepted: int = 0
    rejected: int = 0
    h_last: float = 0.0


def integrate(f, y0, s0, s1, tol, h0=None, length_scale=None, callback=None, stats=None, relative=True):
    """Integrate ``y' = f(s, y)`` from ``s0`` to ``s1`` (``s1 > s0``).

    ``callback(s, y)`` runs after every accepted step and may raise to abort.
    ``length_scale`` is the arclength used for the step-underflow test
    (defaults to ``s1 - s0``).  Returns the state at ``s1``; step counts are
    accumulated into ``stats`` when given.
    """
    y = np.array(y0, dtype=complex)
    span = float(s1 - s0)
    if span <= 0:
        return y
    if length_scale is None:
        length_scale = span
    h_min = 1e-13 * length_scale
    h = min(h0 if h0 else 0.05 * span, span)
    stats = stats if stats is not None else StepStats()
    s = float(s0)
    k = np.empty((7, y.size), dtype=complex)
    k[0] = f(s, y)
    err_prev = 1.0
    while s < s1:
        last = s + h >= s1 - 1e-15 * max(1.0, abs(s1))
        if last:
            h = s1 - s
        for i in range(1, 7):
            yi = y + h * (np.asarray(_A[i]) @ k[:i])
            k[i] = f(s + _C[i] * h, yi)
        y_new = yi  # stage 7 is evaluated at the 5th-order solution (FSAL)
        err_vec = h * (_E @ k)
        scale = tol * max(h, h_min)
        if relative:
            scale *= 1.0 + max(np.max(np.abs(y)), np.max(np.abs(y_new)))
        err = float(np.max(np.abs(err_vec))) / scale
        if not np.isfinite(err):
            err = 1e10
        if err <= 1.0:
            s = s1 if last else s + h
            y = y_new
            k[0] = k[6]
            stats.accepted += 1
            stats.h_last = h
            if callback is not None:
                callback(s, y)
            fac = _SAFETY * err ** -_ALPHA * err_prev ** _BETA if err > 0 else _FAC_MAX
            err_prev = max(err, 1e-4)
            h = h * min(_FAC_MAX, max(_FAC_MIN, fac))
        else:
            stats.rejected += 1
            h = h * max(_FAC_MIN, _SAFETY * err ** -_ALPHA)
        if h < h_min and s < s1:
            raise NumericalAbort(
                f"step size {h:.3e} below {h_min:.3e} at s={s:.6g}", code="STEP_UNDERFLOW", s=s
            )
    return y
