"""Schlesinger isomonodromic flow in the pole positions, and the tau-function.

The residues evolve by

    dB_i = - sum_{j != i} [B_i, B_j] / (a_i - a_j) d(a_i - a_j)

and ``ln tau`` is accumulated by integrating the closed 1-form

    d ln tau = 1/2 sum_{i != j} tr(B_i B_j) / (a_i - a_j) d(a_i - a_j)

alongside the residues.  Paths in parameter space are polylines through
waypoint pole vectors, parameterized by Euclidean arclength in C^n.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import algebra
from .errors import BlowupDetected, InvalidInput
from .fuchsian import DIAGONAL_K, SUM_ZERO, FuchsianSystem
from .integrate import StepStats, integrate

COLLISION_TOL = 1e-12
MIN_SEPARATION = 1e-3
DEFAULT_CEILING = 1e8


@dataclass
class SchlesingerState:
    """Pole vector, residues and the accumulated ``ln tau``."""

    poles: np.ndarray
    residues: np.ndarray
    ln_tau: complex = 0j
    policy: str = SUM_ZERO

    def __post_init__(self):
        self.poles = np.asarray(self.poles, dtype=complex).ravel()
        self.residues = np.asarray(self.residues, dtype=complex)

    @classmethod
    def from_system(cls, system, ln_tau=0j):
        return cls(system.poles.copy(), system.residues.copy(), ln_tau, system.policy)

    def to_system(self):
        return FuchsianSystem(self.poles.copy(), self.residues.copy(), self.policy)

    @property
    def n(self):
        return len(self.poles)

    def residue_sum(self):
        return self.residues.sum(axis=0)

    @property
    def theta(self):
        """``theta`` of ``sum B_i = diag(theta, -theta)`` (0 under SUM_ZERO)."""
        return complex(self.residue_sum()[0, 0]) if self.policy == DIAGONAL_K else 0j

    def max_norm(self):
        return max(algebra.norm(B) for B in self.residues)

    def upper_right(self):
        return self.residues[:, 0, 1].copy()

    def copy(self):
        return replace(self, poles=self.poles.copy(), residues=self.residues.copy())


def _pair_data(poles, da):
    diff = poles[:, None] - poles[None, :]
    np.fill_diagonal(diff, 1.0)
    close = np.abs(diff) < COLLISION_TOL
    np.fill_diagonal(close, False)
    if close.any():
        i, j = map(int, np.argwhere(close)[0])
        raise InvalidInput(f"poles {i} and {j} collide during the flow", code="POLE_COLLISION", pair=(i, j))
    w = (da[:, None] - da[None, :]) / diff
    np.fill_diagonal(w, 0.0)
    return w


def _rhs(poles, residues, da):
    w = _pair_data(poles, da)
    prod = np.einsum("iab,jbc->ijac", residues, residues)
    comm = prod - prod.transpose(1, 0, 2, 3)
    dB = -np.einsum("ij,ijac->iac", w, comm)
    # tr(B_i B_j) = trace of prod[i, j]
    trs = np.einsum("ijaa->ij", prod)
    dtau = 0.5 * np.sum(w * trs)
    return dB, dtau


def schlesinger_rhs(state, direction):
    """Residue derivatives ``dB_i`` contracted with the tangent ``direction``."""
    da = np.asarray(direction, dtype=complex)
    return _rhs(state.poles, state.residues, da)[0]


def tau_increment(state, direction):
    """Value of the ``d ln tau`` 1-form on the tangent ``direction``."""
    da = np.asarray(direction, dtype=complex)
    w = _pair_data(state.poles, da)
    trs = np.einsum("iab,jba->ij", state.residues, state.residues)
    return complex(0.5 * np.sum(w * trs))


@dataclass
class ParamPath:
    """Polyline in pole space through ``waypoints`` (each a full pole vector)."""

    waypoints: list
    min_separation: float = MIN_SEPARATION
    probe: bool = False

    def __post_init__(self):
        self.waypoints = [np.asarray(w, dtype=complex).ravel() for w in self.waypoints]
        if len(self.waypoints) < 2:
            raise InvalidInput("a parameter path needs at least two waypoints", code="BAD_PATH")
        n = len(self.waypoints[0])
        if any(len(w) != n for w in self.waypoints):
            raise InvalidInput("waypoints have different lengths", code="SHAPE_MISMATCH")
        if not self.probe:
            sep = self.min_pair_distance()
            if sep < self.min_separation:
                raise InvalidInput(
                    f"path brings poles within {sep:.3e} (< {self.min_separation:.1e})",
                    code="POLE_COLLISION",
                )

    @classmethod
    def straight(cls, start, end, **kw):
        return cls([start, end], **kw)

    @property
    def start(self):
        return self.waypoints[0]

    @property
    def end(self):
        return self.waypoints[-1]

    def segments(self):
        return list(zip(self.waypoints, self.waypoints[1:]))

    @property
    def length(self):
        return float(sum(np.linalg.norm(b - a) for a, b in self.segments()))

    def min_pair_distance(self):
        """Exact minimum of ``|a_i - a_j|`` along the polyline."""
        best = np.inf
        for w0, w1 in self.segments():
            n = len(w0)
            for i in range(n):
                for j in range(i + 1, n):
                    d0, d1 = w0[i] - w0[j], w1[i] - w1[j]
                    dd = d1 - d0
                    t = 0.0 if dd == 0 else min(1.0, max(0.0, -(d0 * dd.conjugate()).real / abs(dd) ** 2))
                    best = min(best, abs(d0 + t * dd))
        return best

    def reversed(self):
        return ParamPath(self.waypoints[::-1], self.min_separation, self.probe)


def flow(state, path, tol=1e-10, ceiling=DEFAULT_CEILING, stats=None):
    """Integrate the Schlesinger equation and ``ln tau`` along ``path``.

    Raises :class:`BlowupDetected` (carrying the last accepted state) when
    ``max |B_i|`` exceeds ``ceiling``.
    """
    if np.max(np.abs(path.start - state.poles)) > 1e-12 * (1 + np.max(np.abs(state.poles))):
        raise InvalidInput("path does not start at the state's poles", code="BAD_PATH")
    n = state.n
    p = state.residues.shape[1]
    size = n * p * p
    y = np.concatenate([state.residues.ravel(), [state.ln_tau]])
    total = path.length
    stats = stats if stats is not None else StepStats()
    for w0, w1 in path.segments():
        L = float(np.linalg.norm(w1 - w0))
        if L == 0:
            continue
        da = (w1 - w0) / L

        def rhs(s, y, w0=w0, da=da):
            dB, dtau = _rhs(w0 + s * da, y[:size].reshape(n, p, p), da)
            return np.concatenate([dB.ravel(), [dtau]])

        def guard(s, y, w0=w0, da=da):
            big = float(np.max(np.abs(y[:size])))
            if not np.isfinite(big) or big > ceiling:
                partial = SchlesingerState(w0 + s * da, y[:size].reshape(n, p, p).copy(), complex(y[-1]), state.policy)
                raise BlowupDetected(f"residue norm {big:.3e} exceeded ceiling {ceiling:.1e}", partial=partial)

        y = integrate(rhs, y, 0.0, L, tol, h0=stats.h_last or None, length_scale=total, callback=guard, stats=stats)
    return SchlesingerState(path.end.copy(), y[:size].reshape(n, p, p).copy(), complex(y[-1]), state.policy)


def flow_through(state, points, tol=1e-10, ceiling=DEFAULT_CEILING, probe=False):
    """Flow sequentially through pole vectors ``points``, returning every state.

    The first point must be the state's own poles.  Each leg is a separate
    straight flow, so samples land exactly on the given points.
    """
    out = [state]
    cur = state
    stats = StepStats()
    for a, b in zip(points, points[1:]):
        cur = flow(cur, ParamPath([a, b], probe=probe), tol, ceiling, stats=stats)
        out.append(cur)
    return out


def b_function(state):
    """``b(a) = sum_i b_i^12 a_i``."""
    return complex(np.sum(state.residues[:, 0, 1] * state.poles))


def lemma1_residual(state, h, tol=1e-13):
    """Finite-difference check of ``db = (2 theta + 1) sum_i b_i^12 da_i``.

    Each coordinate ``a_j`` is moved by ``+-h`` with a short Schlesinger
    flow; returns ``max_j |(b(a + h e_j) - b(a - h e_j)) / 2h - (2 theta + 1) b_j^12|``.
    """
    if state.policy != DIAGONAL_K:
        raise InvalidInput("Lemma identity needs a diagonal residue sum", code="BAD_NORMALIZATION")
    K = state.residue_sum()
    theta = complex(K[0, 0])
    if abs(K[1, 1] + theta) > 1e-8 * (1 + abs(theta)):
        raise InvalidInput("residue sum is not of the form diag(theta, -theta)", code="BAD_NORMALIZATION")
    worst = 0.0
    for j in range(state.n):
        e = np.zeros(state.n, dtype=complex)
        e[j] = h
        plus = flow(state, ParamPath([state.poles, state.poles + e], probe=True), tol)
        minus = flow(state, ParamPath([state.poles, state.poles - e], probe=True), tol)
        fd = (b_function(plus) - b_function(minus)) / (2 * h)
        worst = max(worst, abs(fd - (2 * theta + 1) * state.residues[j, 0, 1]))
    return worst


def commutator_defect(residues):
    worst = 0.0
    for i in range(len(residues)):
        for j in range(i + 1, len(residues)):
            worst = max(worst, algebra.norm(algebra.commutator(residues[i], residues[j])))
    return worst


def commuting_ln_tau(residues, poles):
    """``sum_{i<j} tr(B_i B_j) log(a_i - a_j)`` with principal logarithms."""
    total = 0j
    for i in range(len(poles)):
        for j in range(i + 1, len(poles)):
            total += np.trace(residues[i] @ residues[j]) * np.log(complex(poles[i] - poles[j]))
    return total


def commuting_ln_tau_change(residues, path):
    """Change of ``ln tau`` along ``path`` for constant commuting residues.

    Uses a continuous branch of each ``log(a_i - a_j)``; a straight leg
    that avoids collisions sweeps less than pi, so the principal log of
    the ratio is the continuous increment.
    """
    total = 0j
    for w0, w1 in path.segments():
        for i in range(len(w0)):
            for j in range(i + 1, len(w0)):
                alpha = np.trace(residues[i] @ residues[j])
                total += alpha * np.log(complex((w1[i] - w1[j]) / (w0[i] - w0[j])))
    return total


def commuting_oracle(residues, poles, z, logs=None):
    """Closed-form fundamental matrix and tau for pairwise commuting residues.

    Returns ``(Y, tau, ln_tau)`` with ``Y = prod_i (z - a_i)^{B_i}`` and
    ``tau = prod_{i<j} (a_i - a_j)^{tr B_i B_j}``.  ``logs`` optionally fixes
    the branch of each ``log(z - a_i)``; principal branches otherwise.
    """
    residues = np.asarray(residues, dtype=complex)
    poles = np.asarray(poles, dtype=complex)
    defect = commutator_defect(residues)
    if defect > 1e-12:
        raise InvalidInput(f"residues do not commute (defect {defect:.3e})", code="NOT_COMMUTING")
    p = residues.shape[1]
    Y = np.eye(p, dtype=complex)
    for i, (a, B) in enumerate(zip(poles, residues)):
        lg = None if logs is None else logs[i]
        Y = Y @ algebra.mat_power(z - a, B, lg)
    ln_tau = commuting_ln_tau(residues, poles)
    return Y, complex(np.exp(ln_tau)), ln_tau
