"""Analytic continuation along paths in the punctured plane and monodromy.

Paths are chains of straight segments and circular arcs parameterized by
arclength.  A fundamental matrix is continued by integrating

    dY/ds = B(z(s)) z'(s) Y

piece by piece with :func:`isolab.integrate.integrate`.  Monodromy follows
the right-action convention: continuing ``Y`` around loop ``i`` gives
``Y @ G_i``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import norm
from .errors import InvalidInput
from .integrate import StepStats, integrate

SCALAR_TOL = 1e-8
# distance of the default base point beyond the farthest pole from the centroid
BASE_MARGIN = 0.3


# -- path pieces ----------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    start: complex
    end: complex

    @property
    def length(self):
        return abs(self.end - self.start)

    def point(self, s):
        return self.start + (self.end - self.start) * (s / self.length)

    def tangent(self, s):
        return (self.end - self.start) / self.length

    def reversed(self):
        return Segment(self.end, self.start)

    def distance_to(self, a):
        d = self.end - self.start
        if d == 0:
            return abs(a - self.start)
        t = ((a - self.start) * d.conjugate()).real / abs(d) ** 2
        t = min(1.0, max(0.0, t))
        return abs(a - (self.start + t * d))

    def arg_increment(self, a):
        return float(np.angle((self.end - a) / (self.start - a)))


@dataclass(frozen=True)
class Arc:
    """Circular arc from angle ``theta0`` to ``theta1`` (radians, either direction)."""

    center: complex
    radius: float
    theta0: float
    theta1: float

    @property
    def length(self):
        return self.radius * abs(self.theta1 - self.theta0)

    @property
    def _sign(self):
        return 1.0 if self.theta1 >= self.theta0 else -1.0

    def _angle(self, s):
        return self.theta0 + self._sign * s / self.radius

    def point(self, s):
        return self.center + self.radius * np.exp(1j * self._angle(s))

    def tangent(self, s):
        return 1j * self._sign * np.exp(1j * self._angle(s))

    @property
    def start(self):
        return self.point(0.0)

    @property
    def end(self):
        return self.point(self.length)

    def reversed(self):
        return Arc(self.center, self.radius, self.theta1, self.theta0)

    def distance_to(self, a):
        rel = a - self.center
        d = abs(rel)
        lo, hi = sorted((self.theta0, self.theta1))
        if hi - lo >= 2 * math.pi or d == 0:
            return abs(d - self.radius)
        phi = math.atan2(rel.imag, rel.real)
        # shift phi into [lo, lo + 2 pi)
        phi = lo + (phi - lo) % (2 * math.pi)
        if phi <= hi:
            return abs(d - self.radius)
        return min(abs(a - self.point(0.0)), abs(a - self.point(self.length)))

    def arg_increment(self, a):
        if abs(a - self.center) <= 1e-14 * (1 + abs(a)):
            return self.theta1 - self.theta0
        dist = max(self.distance_to(a), 1e-300)
        chunks = int(math.ceil(self.length / (0.5 * dist))) + 1
        total = 0.0
        step = self.length / chunks
        prev = self.point(0.0) - a
        for j in range(1, chunks + 1):
            cur = self.point(j * step) - a
            total += float(np.angle(cur / prev))
            prev = cur
        return total


# -- paths ----------------------------------------------------------------


@dataclass
class PathSpec:
    """Piecewise path with a clearance requirement from excluded points."""

    pieces: list
    clearance: float = 1e-3
    exclusions: tuple = ()

    @classmethod
    def polyline(cls, waypoints, clearance=1e-3, exclusions=()):
        pts = [complex(w) for w in waypoints]
        pieces = [Segment(a, b) for a, b in zip(pts, pts[1:]) if a != b]
        return cls(pieces, clearance, tuple(exclusions))

    @classmethod
    def circle(cls, center, radius, start_angle=0.0, turns=1, clearance=1e-3, exclusions=()):
        arc = Arc(complex(center), float(radius), start_angle, start_angle + 2 * math.pi * turns)
        return cls([arc], clearance, tuple(exclusions))

    @property
    def start(self):
        return complex(self.pieces[0].start)

    @property
    def end(self):
        return complex(self.pieces[-1].end)

    @property
    def length(self):
        return float(sum(p.length for p in self.pieces))

    def reversed(self):
        return PathSpec([p.reversed() for p in reversed(self.pieces)], self.clearance, self.exclusions)

    def min_distance(self, points=None):
        points = self.exclusions if points is None else points
        if not len(points):
            return math.inf
        return min(p.distance_to(a) for p in self.pieces for a in points)

    def check_clearance(self):
        for a in self.exclusions:
            d = min(p.distance_to(a) for p in self.pieces)
            if d < self.clearance:
                raise InvalidInput(
                    f"path passes within {d:.3e} of excluded point {a} (clearance {self.clearance:.3e})",
                    code="CLEARANCE_VIOLATION",
                )

    def arg_increment(self, a):
        """Continuous change of arg(z - a) along the path."""
        return float(sum(p.arg_increment(a) for p in self.pieces))

    def log_increment(self, a):
        """Change of a continuous branch of log(z - a) along the path."""
        return math.log(abs(self.end - a) / abs(self.start - a)) + 1j * self.arg_increment(a)

    def winding_number(self, a):
        w = self.arg_increment(a) / (2 * math.pi)
        n = round(w)
        if abs(w - n) > 1e-9:
            raise InvalidInput(f"path is not closed around {a} (winding {w})", code="OPEN_PATH")
        return int(n)


def continue_solution(coeff, path, Y0, tol=1e-10, stats=None):
    """Continue the solution of ``dY/dz = coeff(z) Y`` along ``path``.

    ``coeff`` maps a complex point to a p x p matrix.  The path's clearance
    from its exclusion set (the poles of ``coeff``) is checked first.
    """
    path.check_clearance()
    Y = np.array(Y0, dtype=complex)
    p = Y.shape[0]
    if abs(np.linalg.det(Y)) == 0:
        raise InvalidInput("initial fundamental matrix is singular", code="SINGULAR_MATRIX")
    total = path.length
    y = Y.ravel()
    stats = stats if stats is not None else StepStats()
    for piece in path.pieces:
        L = piece.length
        if L == 0:
            continue

        def rhs(s, y, piece=piece):
            B = coeff(piece.point(s)) * piece.tangent(s)
            return (B @ y.reshape(p, -1)).ravel()

        h0 = stats.h_last if stats.h_last else None
        y = integrate(rhs, y, 0.0, L, tol, h0=h0, length_scale=total, stats=stats, relative=False)
    return y.reshape(Y.shape)


# -- loop bases and monodromy ---------------------------------------------


@dataclass
class LoopBasis:
    """Base point plus one simple counterclockwise loop per pole.

    ``loops[i]`` encircles ``poles[i]``.  ``order`` lists pole indices in
    the sequence whose loop product is contractible; for a base point below
    the poles this is decreasing argument of ``a_i - z0``.
    """

    base: complex
    poles: np.ndarray
    radii: np.ndarray
    order: tuple
    spokes: list = field(default_factory=list)
    circles: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def loop(self, i):
        spoke, circle = self.spokes[i], self.circles[i]
        return PathSpec(spoke.pieces + circle.pieces + spoke.reversed().pieces, spoke.clearance, spoke.exclusions)

    def validate(self):
        """Check every loop winds once around its pole and zero times around the rest."""
        for i in range(len(self.poles)):
            loop = self.loop(i)
            for j, a in enumerate(self.poles):
                w = loop.winding_number(a)
                if w != (1 if i == j else 0):
                    raise InvalidInput(f"loop {i} winds {w} times around pole {j}", code="BAD_LOOP_BASIS")
        return True

    def metadata(self):
        return {
            "base_point": self.base,
            "radii": list(map(float, self.radii)),
            "order": list(self.order),
            "convention": "right action Y -> Y G; loops ordered by decreasing arg(a_i - z0); "
            "relation G[order[0]] G[order[1]] ... = I",
            "warnings": list(self.warnings),
        }


def default_radii(poles, others=()):
    poles = np.asarray(poles, dtype=complex)
    pts = np.concatenate([poles, np.asarray(others, dtype=complex)])
    radii = []
    for i, a in enumerate(poles):
        d = np.abs(pts - a)
        d[i] = np.inf
        radii.append(min(0.4 * float(np.min(d)), 0.25) if len(pts) > 1 else 0.25)
    return np.array(radii)


def _spoke_clearance(z0, poles, radii):
    worst = math.inf
    for i, a in enumerate(poles):
        p_i = a + radii[i] * (z0 - a) / abs(z0 - a)
        seg = Segment(z0, p_i)
        for j, b in enumerate(poles):
            if j != i:
                worst = min(worst, seg.distance_to(b) / radii[j])
    return worst


def loop_basis(poles, base=None, radii=None, others=(), margin=None):
    """Build the default loop basis: straight spoke plus a circle per pole.

    Circle radius is ``min(0.4 * distance to nearest other singular point,
    0.25)``.  When ``base`` is omitted, candidate base points on a ring
    ``margin`` (default :data:`BASE_MARGIN`) beyond the farthest pole are
    tried, starting straight below, and the first whose spokes keep every
    other pole outside 1.5 of its radius is taken.  A basis that will later
    be transported should widen the margin by the largest pole displacement.
    """
    poles = np.asarray(poles, dtype=complex)
    radii = default_radii(poles, others) if radii is None else np.asarray(radii, dtype=float)
    if base is None:
        centroid = poles.mean()
        R = float(np.max(np.abs(poles - centroid))) + (BASE_MARGIN if margin is None else float(margin))
        best, best_score = None, -1.0
        offsets = [0] + [s * j for j in range(1, 13) for s in (1, -1)]
        for off in offsets[:24]:
            psi = -math.pi / 2 + off * (2 * math.pi / 24)
            cand = centroid + R * complex(math.cos(psi), math.sin(psi))
            score = _spoke_clearance(cand, poles, radii)
            if score >= 1.5:
                best = cand
                break
            if score > best_score:
                best, best_score = cand, score
        base = best
    base = complex(base)
    return _build_basis(base, poles, radii)


def _build_basis(base, poles, radii, warnings=()):
    spokes, circles = [], []
    clearance = 0.5 * float(np.min(radii))
    for i, a in enumerate(poles):
        phi = math.atan2((base - a).imag, (base - a).real)
        p_i = a + radii[i] * complex(math.cos(phi), math.sin(phi))
        spokes.append(PathSpec([Segment(base, p_i)], clearance, tuple(poles)))
        circles.append(PathSpec([Arc(a, float(radii[i]), phi, phi + 2 * math.pi)], clearance, tuple(poles)))
    args = [math.atan2((a - base).imag, (a - base).real) for a in poles]
    # measure angles relative to the direction pointing away from the poles
    ref = math.atan2((base - poles.mean()).imag, (base - poles.mean()).real)
    rel = [((t - ref) % (2 * math.pi)) for t in args]
    order = tuple(sorted(range(len(poles)), key=lambda i: -rel[i]))
    return LoopBasis(base, poles.copy(), np.asarray(radii, float), order, spokes, circles, list(warnings))


def transported_basis(basis, new_poles):
    """Loop basis for moved poles: same base point and radii, loops follow the poles.

    Records a homotopy warning when a pole moved farther than its loop
    radius, since the straight-spoke loops may then represent different
    classes than the canonical isomorphism of fundamental groups.
    """
    new_poles = np.asarray(new_poles, dtype=complex)
    warnings = []
    for i, (a, b) in enumerate(zip(basis.poles, new_poles)):
        if abs(b - a) >= basis.radii[i]:
            warnings.append(f"pole {i} moved {abs(b - a):.3g} >= loop radius {basis.radii[i]:.3g}; loops rebuilt")
    out = _build_basis(basis.base, new_poles, basis.radii, warnings)
    if out.order != basis.order:
        out.warnings.append("loop ordering changed along the deformation")
    return out


@dataclass
class MonodromyRep:
    """Monodromy generators ``G_i`` (indexed like the poles) at a base point."""

    base: complex
    generators: np.ndarray
    order: tuple
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        return len(self.generators)

    def fingerprint(self):
        """``[tr G_i] + [tr G_i G_j, i<j] + [det G_i]`` as one complex vector."""
        G = self.generators
        tr = [np.trace(g) for g in G]
        pairs = [np.trace(G[i] @ G[j]) for i in range(self.n) for j in range(i + 1, self.n)]
        dets = [np.linalg.det(g) for g in G]
        return np.array(tr + pairs + dets, dtype=complex)

    def product(self):
        out = np.eye(self.generators.shape[1], dtype=complex)
        for i in self.order:
            out = out @ self.generators[i]
        return out

    def relation_residual(self):
        return norm(self.product() - np.eye(self.generators.shape[1]))

    def conjugated(self, C):
        Ci = np.linalg.inv(C)
        return MonodromyRep(self.base, np.array([Ci @ g @ C for g in self.generators]), self.order, dict(self.metadata))


def monodromy(system, basis=None, tol=1e-10):
    """Monodromy generators of ``system`` with respect to ``Y(z0) = I``.

    ``system`` needs ``poles``, ``p`` and ``coefficient(z)``.  For each pole
    the spoke propagator ``T`` and the circle propagator ``C`` are
    integrated once and combined as ``G_i = T^-1 C T``.
    """
    if basis is None:
        basis = loop_basis(system.poles)
    gens = []
    p = system.p
    for i in range(len(basis.poles)):
        T = continue_solution(system.coefficient, basis.spokes[i], np.eye(p), tol)
        C = continue_solution(system.coefficient, basis.circles[i], np.eye(p), tol)
        gens.append(np.linalg.solve(T, C @ T))
    return MonodromyRep(basis.base, np.array(gens), basis.order, basis.metadata())


def rep_fingerprint_distance(r1, r2):
    if r1.n != r2.n or r1.generators.shape != r2.generators.shape:
        raise InvalidInput("representations have different shapes", code="SHAPE_MISMATCH")
    return float(np.max(np.abs(r1.fingerprint() - r2.fingerprint())))


def is_smaller(rep, tol=SCALAR_TOL):
    """Number of (2x2) generators within ``tol`` of a scalar matrix."""
    count = 0
    for g in rep.generators:
        lam = np.trace(g) / g.shape[0]
        if norm(g - lam * np.eye(g.shape[0])) <= tol:
            count += 1
    return count
