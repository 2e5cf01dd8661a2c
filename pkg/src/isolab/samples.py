"""Seeded random Fuchsian systems for property checks and the verify suite.

Poles are drawn uniformly from the square [-1, 1]^2 and resampled until
they are at least ``min_sep`` apart.  Residue entries are complex normal
scaled by ``scale`` and made trace-free; the last residue is fixed by the
normalization.  Since the last residue absorbs the sum of the others,
its exponents can have imaginary parts near one, and generator norms of
1e4 or more occur even at ``scale = 0.25``.
"""

import numpy as np

from .fuchsian import DIAGONAL_K, SUM_ZERO, FuchsianSystem


def random_poles(rng, n, min_sep=0.2, box=1.0, fixed=()):
    fixed = [complex(f) for f in fixed]
    for _ in range(10_000):
        a = box * (rng.uniform(-1, 1, n) + 1j * rng.uniform(-1, 1, n))
        pts = np.concatenate([a, fixed])
        d = np.abs(pts[:, None] - pts[None, :])
        np.fill_diagonal(d, np.inf)
        if d.min() >= min_sep:
            return a
    raise RuntimeError("could not place separated poles")


def random_residues(rng, n, scale=0.25, K=None):
    B = scale * (rng.normal(size=(n, 2, 2)) + 1j * rng.normal(size=(n, 2, 2)))
    B[:, 1, 1] = -B[:, 0, 0]
    K = np.zeros((2, 2), dtype=complex) if K is None else np.asarray(K, dtype=complex)
    B[-1] = K - B[:-1].sum(axis=0)
    return B


def random_system(rng, n, policy=SUM_ZERO, theta=0.0, scale=0.25, min_sep=0.2):
    """Random 2x2 system with ``n`` poles.

    Under ``DIAGONAL_K`` the residues sum to ``diag(theta, -theta)``.
    """
    K = np.diag([theta, -theta]) if policy == DIAGONAL_K else None
    return FuchsianSystem(random_poles(rng, n, min_sep), random_residues(rng, n, scale, K), policy)


def random_garnier_system(rng, n, theta_inf_prime, scale=0.25, min_sep=0.2):
    """System with ``n + 2`` poles ``(a_1, .., a_n, 0, 1)`` and ``sum B = diag(-th, th)``.

    This is the normalization used for the Painleve VI (``n = 1``) and
    Garnier reductions; ``theta_inf_prime`` is ``m_inf + rho_inf``.
    """
    a = random_poles(rng, n, min_sep, fixed=(0, 1))
    poles = np.concatenate([a, [0, 1]])
    th = complex(theta_inf_prime)
    B = random_residues(rng, n + 2, scale, np.diag([-th, th]))
    return FuchsianSystem(poles, B, DIAGONAL_K)
