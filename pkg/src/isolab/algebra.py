"""Small dense complex matrix kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The 2x2 case,
which is the only one the deformation code needs, uses closed forms
throughout; sizes 3 and 4 fall back to LAPACK through numpy/scipy.

The matrix norm used for every tolerance in the package is the max
absolute entry (:func:`norm`).
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInput, NumericalAbort

TWO_PI_I = 2j * np.pi
JORDAN_GAP = 1e-10
SINGULAR_DET = 1e-14
MAX_DIM = 4


def as_matrix(A):
    """Return ``A`` as a square complex128 array, validating its shape."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {A.shape}", code="SHAPE_MISMATCH")
    return A


def norm(A):
    """Max absolute entry."""
    return float(np.max(np.abs(A))) if np.size(A) else 0.0


def commutator(A, B):
    return A @ B - B @ A


def _sort_key(z):
    return (z.real, z.imag)


@dataclass(frozen=True)
class EigenData:
    """Eigenvalues plus a similarity ``S`` with ``A = S J S^-1``.

    ``J`` is diagonal when ``diagonalizable`` is true, otherwise (2x2 only)
    the Jordan block ``[[lam, 1], [0, lam]]``.
    """

    values: np.ndarray
    diagonalizable: bool
    S: np.ndarray

    @property
    def J(self):
        J = np.diag(self.values).astype(complex)
        if not self.diagonalizable:
            J[0, 1] = 1.0
        return J

    def reconstruct(self):
        return self.S @ self.J @ np.linalg.inv(self.S)


def _eig2(A):
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    mu = 0.5 * (a + d)
    # ((a - d)/2)^2 + bc avoids the cancellation in mu^2 - det
    delta = np.sqrt(0.25 * (a - d) ** 2 + b * c + 0j)
    scale = max(norm(A), np.finfo(float).tiny)
    if 2 * abs(delta) < JORDAN_GAP * scale:
        N = A - mu * np.eye(2)
        values = np.array([mu, mu])
        if norm(N) <= JORDAN_GAP * scale:
            return EigenData(values, True, np.eye(2, dtype=complex))
        # pick the column of N with the larger image as the generalized vector
        k = int(np.argmax(np.abs(N).sum(axis=0)))
        w = np.zeros(2, dtype=complex)
        w[k] = 1.0
        v = N @ w
        return EigenData(values, False, np.column_stack([v, w]))

    lam = sorted([mu - delta, mu + delta], key=_sort_key)
    vecs = []
    for l in lam:
        v1 = np.array([b, l - a])
        v2 = np.array([l - d, c])
        v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
        vecs.append(v / np.linalg.norm(v))
    return EigenData(np.array(lam), True, np.column_stack(vecs))


def eig(A):
    """Sorted eigenvalues with Jordan detection (closed form for p = 2).

    Eigenvalues are ordered lexicographically by (real, imag).  Two
    eigenvalues closer than ``1e-10 * norm(A)`` are treated as equal; a
    2x2 matrix with a double eigenvalue that is not scalar is reported as a
    Jordan block.
    """
    A = as_matrix(A)
    p = A.shape[0]
    if p > MAX_DIM:
        raise InvalidInput(f"dimension {p} > {MAX_DIM} not supported", code="DIMENSION_UNSUPPORTED")
    if p == 1:
        return EigenData(A[0].copy(), True, np.eye(1, dtype=complex))
    if p == 2:
        return _eig2(A)
    w, V = np.linalg.eig(A)
    order = sorted(range(p), key=lambda i: _sort_key(w[i]))
    w, V = w[order], V[:, order]
    diagonalizable = np.linalg.cond(V) < 1e8
    return EigenData(w, bool(diagonalizable), V)


def _exp2(A):
    # e^A = e^mu (cosh(delta) I + sinh(delta)/delta (A - mu I)), exact for 2x2
    # and continuous through the Jordan case delta -> 0.
    mu = 0.5 * (A[0, 0] + A[1, 1])
    N = A - mu * np.eye(2)
    delta = np.sqrt(-(N[0, 0] * N[1, 1] - N[0, 1] * N[1, 0]) + 0j)
    if abs(delta) < 1e-8:
        d2 = delta * delta
        ch = 1 + d2 / 2 + d2 * d2 / 24
        sh = 1 + d2 / 6 + d2 * d2 / 120
    else:
        ch = np.cosh(delta)
        sh = np.sinh(delta) / delta
    return np.exp(mu) * (ch * np.eye(2) + sh * N)


def mat_exp(A):
    """Matrix exponential; raises ``NumericalAbort(OVERFLOW)`` on non-finite output."""
    A = as_matrix(A)
    p = A.shape[0]
    if p == 1:
        out = np.exp(A)
    elif p == 2:
        with np.errstate(over="ignore", invalid="ignore"):
            out = _exp2(A)
    elif p <= MAX_DIM:
        out = scipy.linalg.expm(A)
    else:
        raise InvalidInput(f"dimension {p} > {MAX_DIM} not supported", code="DIMENSION_UNSUPPORTED")
    if not np.all(np.isfinite(out)):
        raise NumericalAbort("matrix exponential overflowed", code="OVERFLOW")
    return out


def normalized_log_eigenvalues(G):
    """Eigenvalues rho of ``log(G)/(2 pi i)`` shifted into ``0 <= Re rho < 1``.

    Returned in the order of ``eig(G).values``.
    """
    values = eig(G).values
    rho = np.log(values.astype(complex)) / TWO_PI_I
    shift = np.floor(rho.real)
    rho = rho - shift
    # floor() can leave 1.0 after rounding of values just below an integer
    rho = np.where(rho.real >= 1.0, rho - 1.0, rho)
    return np.array([complex(max(r.real, 0.0), r.imag) for r in rho])


def mat_log_normalized(G):
    """``E`` with ``exp(2 pi i E) = G`` and every eigenvalue in ``0 <= Re < 1``.

    For 2x2 input ``E = alpha I + beta G`` (the interpolating polynomial of
    the branch-selected log on the spectrum), so ``E`` commutes with ``G``
    and inherits its Jordan structure.
    """
    G = as_matrix(G)
    if abs(np.linalg.det(G)) < SINGULAR_DET:
        raise InvalidInput("matrix is singular; logarithm undefined", code="SINGULAR_MATRIX")
    p = G.shape[0]
    data = eig(G)
    rho = normalized_log_eigenvalues(G)
    if p == 1:
        return rho.reshape(1, 1).astype(complex)
    if p == 2:
        l1, l2 = data.values
        r1, r2 = rho
        # l1 - l2 = +-2 sqrt(disc); the sign is taken from the subtraction,
        # the magnitude from the cancellation-free discriminant.
        root = 2 * np.sqrt(0.25 * (G[0, 0] - G[1, 1]) ** 2 + G[0, 1] * G[1, 0] + 0j)
        gap = l1 - l2
        if abs(gap - root) > abs(gap + root):
            root = -root
        if root != 0:
            gap = root
        # r1 - r2 = log(l1/l2)/(2 pi i) + k with integer k; log1p keeps the
        # divided difference accurate as the eigenvalues merge.
        # log(l1/l2) = 2 atanh(y) with y = gap / (2 mu): accurate as the
        # eigenvalues merge and independent of how l1, l2 were rounded.
        mu = 0.5 * (G[0, 0] + G[1, 1])
        y = gap / (2 * mu) if abs(mu) > abs(gap) else np.inf
        if abs(y) < 1e-4:
            dlog = (1 + y * y / 3 + y ** 4 / 5) / mu
        elif abs(y) < 0.5:
            dlog = np.arctanh(y) / (y * mu)
        else:
            dlog = np.log1p(gap / l2) / gap
        k = round((r1 - r2 - dlog * gap / TWO_PI_I).real)
        beta = dlog / TWO_PI_I
        if k:
            beta = beta + k / gap
        # centring on the trace keeps alpha consistent with the stable gap
        alpha = 0.5 * (r1 + r2) - beta * mu
        return alpha * np.eye(2) + beta * G
    if not data.diagonalizable:
        raise InvalidInput("defective matrices beyond 2x2 are not supported", code="DIMENSION_UNSUPPORTED")
    S = data.S
    return S @ np.diag(rho) @ np.linalg.inv(S)


def mat_power(base, E, log_base=None):
    """``(base)^E := exp(E * log(base))``.

    ``log_base`` selects the branch; when omitted the principal logarithm is
    used.  Callers continuing along a path pass the accumulated logarithm.
    """
    E = as_matrix(E)
    if base == 0:
        raise InvalidInput("zero base in matrix power", code="ZERO_BASE")
    if log_base is None:
        log_base = np.log(complex(base))
    return mat_exp(E * log_base)
