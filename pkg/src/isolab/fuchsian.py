"""Fuchsian systems, exponent data, and reduction to a scalar equation.

A :class:`FuchsianSystem` is ``dy/dz = sum_i B_i / (z - a_i) y``.  For the
2x2 case :func:`reduce_to_scalar` applies the gauge ``Gamma = [[1, 0],
[b11, b12]]`` built from the coefficient matrix; the first component of the
solution then satisfies ``w'' + p w' + q w = 0`` whose extra (apparent)
singular points are the zeros of ``b12``.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import polynomial as P

from . import algebra
from .errors import InvalidInput
from .rational import RationalFunction
from .transport import PathSpec, continue_solution

SUM_ZERO = "SUM_ZERO"
DIAGONAL_K = "DIAGONAL_K"
POLICIES = (SUM_ZERO, DIAGONAL_K)

MIN_POLE_DISTANCE = 1e-8
CLUSTER_TOL = 1e-6


@dataclass
class FuchsianSystem:
    """Poles ``a_i``, residues ``B_i`` and the normalization at infinity.

    ``SUM_ZERO``: infinity is nonsingular, ``sum B_i = 0``.
    ``DIAGONAL_K``: ``sum B_i = diag(-theta, theta)`` (only the
    off-diagonal part is enforced; the diagonal defines ``theta``).
    """

    poles: np.ndarray
    residues: np.ndarray
    policy: str = SUM_ZERO

    def __post_init__(self):
        self.poles = np.asarray(self.poles, dtype=complex).ravel()
        self.residues = np.asarray(self.residues, dtype=complex)
        if self.residues.ndim != 3 or self.residues.shape[0] != len(self.poles):
            raise InvalidInput(
                f"need one square residue per pole, got {self.residues.shape} for {len(self.poles)} poles",
                code="SHAPE_MISMATCH",
            )
        if self.residues.shape[1] != self.residues.shape[2]:
            raise InvalidInput("residues must be square", code="SHAPE_MISMATCH")
        if self.policy not in POLICIES:
            raise InvalidInput(f"unknown normalization {self.policy!r}", code="BAD_NORMALIZATION")
        check_distinct(self.poles)
        S = self.residue_sum()
        scale = max(max((algebra.norm(B) for B in self.residues), default=0.0), 1e-300)
        off = S - np.diag(np.diag(S))
        bad = algebra.norm(S) if self.policy == SUM_ZERO else algebra.norm(off)
        if bad > 1e-10 * scale:
            raise InvalidInput(
                f"residue sum violates {self.policy} normalization (defect {bad:.3e})",
                code="NORMALIZATION_VIOLATED",
            )

    @property
    def p(self):
        return self.residues.shape[1]

    @property
    def n(self):
        return len(self.poles)

    def coefficient(self, z):
        return np.tensordot(1.0 / (z - self.poles), self.residues, axes=1)

    def residue_sum(self):
        return self.residues.sum(axis=0)

    @property
    def theta_inf(self):
        """``theta`` in ``sum B_i = diag(-theta, theta)``; 0 under SUM_ZERO."""
        if self.policy == SUM_ZERO:
            return 0j
        return complex(self.residue_sum()[1, 1])

    def log_det_increment(self, path):
        """``int tr B(z) dz`` along ``path`` (Liouville oracle for ``log det Y``)."""
        return sum(np.trace(B) * path.log_increment(a) for a, B in zip(self.poles, self.residues))

    def b12_numerator(self):
        """Ascending coefficients of ``sum_i b_i^12 prod_{j != i} (z - a_j)``."""
        out = np.zeros(self.n, dtype=complex)
        for i in range(self.n):
            others = np.delete(self.poles, i)
            c = P.polyfromroots(others) if len(others) else np.array([1.0])
            out[: len(c)] += self.residues[i, 0, 1] * c
        return out


def check_distinct(poles, min_distance=MIN_POLE_DISTANCE):
    poles = np.asarray(poles, dtype=complex)
    for i in range(len(poles)):
        for j in range(i + 1, len(poles)):
            if abs(poles[i] - poles[j]) < min_distance:
                raise InvalidInput(
                    f"poles {i} and {j} collide ({poles[i]} vs {poles[j]})",
                    code="POLE_COLLISION",
                    pair=(i, j),
                )


def exponents(system, i):
    """Eigenvalues of ``B_i`` sorted by (real, imag)."""
    return algebra.eig(system.residues[i]).values


@dataclass(frozen=True)
class ThetaData:
    """Integer shifts and branch eigenvalues with exponents ``+-(m_k + rho_k)``."""

    m: tuple
    rho: tuple
    m_inf: int = 0
    rho_inf: complex = 0j

    def __post_init__(self):
        if len(self.m) != len(self.rho):
            raise InvalidInput("m and rho must have equal length", code="SHAPE_MISMATCH")
        for m in list(self.m) + [self.m_inf]:
            if int(m) != m or m < 0:
                raise InvalidInput(f"integer shift {m} must be a non-negative integer", code="BAD_THETA")
        for r in list(self.rho) + [self.rho_inf]:
            if not 0.0 <= complex(r).real < 1.0:
                raise InvalidInput(f"branch eigenvalue {r} must have real part in [0, 1)", code="BAD_THETA")

    @classmethod
    def from_values(cls, values, inf_value=0j):
        """Split exponent magnitudes ``m + rho`` into integer and branch parts."""
        ms, rhos = [], []
        for v in values:
            v = complex(v)
            if v.real < 0:
                v = -v
            m = math.floor(v.real)
            ms.append(m)
            rhos.append(complex(v.real - m, v.imag))
        v = complex(inf_value)
        if v.real < 0:
            raise InvalidInput(f"theta_inf {v} has negative real part", code="BAD_THETA")
        m_inf = math.floor(v.real)
        return cls(tuple(ms), tuple(rhos), m_inf, complex(v.real - m_inf, v.imag))

    @classmethod
    def from_system(cls, system):
        """Exponent data of a trace-free 2x2 system (``sqrt(-det B_i)`` with Re >= 0)."""
        vals = [np.sqrt(-np.linalg.det(B) + 0j) for B in system.residues]
        return cls.from_values(vals, system.theta_inf)

    @property
    def values(self):
        return np.array([m + r for m, r in zip(self.m, self.rho)], dtype=complex)

    @property
    def inf_value(self):
        return self.m_inf + self.rho_inf

    def riemann_thetas(self):
        """Scalar-equation parameters ``(2(m_i + rho_i), 2(m_inf + rho_inf) - 1)``."""
        return 2 * self.values, 2 * self.inf_value - 1

    def is_half_case(self):
        """True for ``(m_inf, rho_inf) == (0, 1/2)``."""
        return self.m_inf == 0 and abs(self.rho_inf - 0.5) < 1e-14

    def check_against(self, system, tol=1e-8):
        """Max mismatch between ``+-(m_k + rho_k)`` and the eigenvalues of ``B_k``."""
        worst = 0.0
        for v, B in zip(self.values, system.residues):
            ev = algebra.eig(B).values
            want = sorted([-v, v], key=lambda z: (z.real, z.imag))
            worst = max(worst, min(
                max(abs(ev[0] - want[0]), abs(ev[1] - want[1])),
                max(abs(ev[0] - want[1]), abs(ev[1] - want[0])),
            ))
        if worst > tol:
            raise InvalidInput(f"exponent data mismatch {worst:.3e}", code="THETA_MISMATCH")
        return worst


def fuchs_relation_residual(thetas, theta_inf, alpha, n):
    """``|sum theta_i + theta_inf + 2 alpha + 2n - (2n + 1)|``."""
    return abs(complex(np.sum(thetas)) + theta_inf + 2 * alpha + 2 * n - (2 * n + 1))


def fuchs_relation_check(theta, alpha, n):
    thetas, theta_inf = theta.riemann_thetas()
    return fuchs_relation_residual(thetas, theta_inf, alpha, n)


def fuchs_alpha(theta, n):
    """``alpha`` solving the Fuchs relation for ``theta``."""
    thetas, theta_inf = theta.riemann_thetas()
    return (1 - complex(np.sum(thetas)) - theta_inf) / 2


def polished_roots(coeffs, iterations=3):
    """Roots of an ascending-coefficient polynomial: companion seeds + Newton."""
    coeffs = np.asarray(coeffs, dtype=complex)
    if len(coeffs) < 2:
        return np.zeros(0, dtype=complex)
    roots = P.polyroots(coeffs)
    d = P.polyder(coeffs)
    out = []
    for r in roots:
        for _ in range(iterations):
            dv = P.polyval(r, d)
            if dv == 0:
                break
            step = P.polyval(r, coeffs) / dv
            r = r - step
            if abs(step) <= 1e-16 * (1 + abs(r)):
                break
        out.append(complex(r))
    return np.array(sorted(out, key=lambda z: (z.real, z.imag)))


def _quadratic_roots(b, c):
    disc = np.sqrt(b * b - 4 * c + 0j)
    return sorted([(-b - disc) / 2, (-b + disc) / 2], key=lambda z: (z.real, z.imag))


@dataclass
class ScalarEquation:
    """``w'' + p(z) w' + q(z) w = 0`` with declared singular and apparent points."""

    p: RationalFunction
    q: RationalFunction
    singular_points: np.ndarray
    apparent_points: np.ndarray
    shifts: np.ndarray = None
    degenerate: bool = False
    notes: list = field(default_factory=list)

    def indicial_roots(self, point):
        """Roots of ``r(r-1) + p_{-1} r + q_{-2} = 0`` at a finite point."""
        p1 = self.p.residue(point)
        qk = self.q.principal_part(point)
        q2 = qk[1] if len(qk) > 1 else 0j
        return _quadratic_roots(p1 - 1, q2)

    def infinity_coefficients(self):
        """``(p_inf, q_inf, q1)``: p ~ p_inf/z, q ~ q1/z + q_inf/z^2 at infinity."""
        _, pc = self.p.laurent_at_infinity(-1)
        _, qc = self.q.laurent_at_infinity(-2)
        return complex(pc[0]), complex(qc[0]), complex(qc[1])

    def indicial_roots_infinity(self):
        """Exponents r with ``w ~ z^-r``: roots of ``r(r+1) - p_inf r + q_inf = 0``."""
        p_inf, q_inf, _ = self.infinity_coefficients()
        return _quadratic_roots(1 - p_inf, q_inf)

    def exponent_sum_residual(self):
        """Fuchs relation over all singular points including infinity.

        The exponents of a second-order Fuchsian equation with N singular
        points (infinity counted) sum to N - 2.
        """
        pts = list(self.singular_points) + list(self.apparent_points)
        total = sum(sum(self.indicial_roots(c)) for c in pts)
        total += sum(self.indicial_roots_infinity())
        return abs(total - (len(pts) + 1 - 2))

    def companion(self, z):
        return np.array([[0.0, 1.0], [-self.q(z), -self.p(z)]], dtype=complex)

    def all_singular(self):
        return np.concatenate([np.asarray(self.singular_points, complex), np.asarray(self.apparent_points, complex)])


def _fractions(poles, values):
    return RationalFunction.simple_fractions(poles, values)


def reduce_to_scalar(system, theta=None, shifts=None):
    """Gauge a 2x2 Fuchsian system to ``w'' + p w' + q w = 0``.

    With ``theta`` (or explicit ``shifts``) the solution is further scaled by
    ``prod (z - a_i)^{s_i}``, ``s_i = m_i + rho_i``, which moves the local
    exponents at ``a_i`` from ``+-s_i`` to ``{0, 2 s_i}``.
    """
    if system.p != 2:
        raise InvalidInput("scalar reduction is implemented for 2x2 systems only", code="DIMENSION_UNSUPPORTED")
    a = system.poles
    B = system.residues
    scale = max(1.0, max(algebra.norm(b) for b in B))
    num = system.b12_numerator()
    if np.all(np.abs(num) <= 1e-12 * scale):
        raise InvalidInput("upper-right coefficient vanishes identically", code="REDUCIBLE_SYSTEM")
    # drop leading coefficients that vanish by the normalization at infinity
    big = np.nonzero(np.abs(num) > 1e-12 * np.max(np.abs(num)))[0]
    num = num[: big[-1] + 1]
    u = polished_roots(num)
    notes = []
    degenerate = False
    for k in range(len(u)):
        for j in range(k + 1, len(u)):
            if abs(u[k] - u[j]) < CLUSTER_TOL:
                degenerate = True
                notes.append(f"apparent points {k},{j} within {CLUSTER_TOL}")
        if np.min(np.abs(a - u[k])) < CLUSTER_TOL:
            degenerate = True
            notes.append(f"apparent point {k} within {CLUSTER_TOL} of a pole")
    if degenerate:
        notes.insert(0, "DEGENERATE_CONFIGURATION")

    b11 = _fractions(a, B[:, 0, 0])
    b12 = _fractions(a, B[:, 0, 1])
    b21 = _fractions(a, B[:, 1, 0])
    trB = _fractions(a, B[:, 0, 0] + B[:, 1, 1])
    # b12'/b12 = P'/P - Q'/Q with P the numerator, Q = prod (z - a_i)
    log_der = _fractions(u, np.ones(len(u))) - _fractions(a, np.ones(len(a)))
    p = -log_der - trB
    q = -b11.derivative() - b11 * b11 - b12 * b21 + b11 * log_der + b11 * trB

    if theta is not None and shifts is None:
        shifts = theta.values
    if shifts is not None:
        shifts = np.asarray(shifts, dtype=complex)
        F = _fractions(a, -shifts)  # phi'/phi for w = phi * w_new
        q = q + p * F + F.derivative() + F * F
        p = p + 2 * F
    return ScalarEquation(p, q, a.copy(), u, shifts, degenerate, notes)


def scalar_monodromy_at(eq, point, radius=None, tol=1e-10):
    """Monodromy of the companion system ``Y' = [[0,1],[-q,-p]] Y`` around ``point``.

    The loop is a circle of ``radius`` (default ``min(0.4 d, 0.25)``, with d
    the distance to the nearest other singular point) starting at
    ``point + radius``; ``Y = I`` there.
    """
    pts = eq.all_singular()
    others = pts[np.abs(pts - point) > 1e-14 * (1 + abs(point))]
    d = float(np.min(np.abs(others - point))) if len(others) else math.inf
    if radius is None:
        radius = min(0.4 * d, 0.25)
    if d - radius < radius / 2:
        raise InvalidInput(
            f"loop of radius {radius:.3e} around {point} comes within {d - radius:.3e} of another singularity",
            code="LOOP_TOO_CLOSE",
        )
    path = PathSpec.circle(point, radius, clearance=radius / 2, exclusions=tuple(others))
    return continue_solution(eq.companion, path, np.eye(2), tol)
