import numpy as np
import pytest

from isolab import algebra
from isolab.errors import InvalidInput
from isolab.fuchsian import (
    DIAGONAL_K,
    FuchsianSystem,
    ThetaData,
    exponents,
    fuchs_alpha,
    fuchs_relation_check,
    polished_roots,
    reduce_to_scalar,
    scalar_monodromy_at,
)
from isolab.samples import random_garnier_system, random_system


def test_pole_collision_names_pair():
    B = np.zeros((3, 2, 2))
    with pytest.raises(InvalidInput) as exc:
        FuchsianSystem([0, 1, 1 + 1e-10], B)
    assert exc.value.code == "POLE_COLLISION" and exc.value.details["pair"] == (1, 2)


def test_normalization_checks():
    B = np.array([np.diag([0.3, -0.3]), np.diag([0.1, -0.1])])
    with pytest.raises(InvalidInput) as exc:
        FuchsianSystem([0, 1], B)
    assert exc.value.code == "NORMALIZATION_VIOLATED"
    sys_ = FuchsianSystem([0, 1], B, DIAGONAL_K)
    assert abs(sys_.theta_inf - (-0.4)) < 1e-15
    B[0, 0, 1] = 1.0
    with pytest.raises(InvalidInput):
        FuchsianSystem([0, 1], B, DIAGONAL_K)


def test_shape_mismatch():
    with pytest.raises(InvalidInput) as exc:
        FuchsianSystem([0, 1], np.zeros((3, 2, 2)))
    assert exc.value.code == "SHAPE_MISMATCH"


def test_exponents_sorted():
    B = np.array([np.diag([0.3, -0.3]), np.diag([-0.3, 0.3])])
    sys_ = FuchsianSystem([0, 1], B)
    np.testing.assert_allclose(exponents(sys_, 0), [-0.3, 0.3])


def test_theta_data_roundtrip(rng):
    sys_ = random_garnier_system(rng, 2, 1.3 + 0.1j)
    th = ThetaData.from_system(sys_)
    assert th.m_inf == 1 and abs(th.rho_inf - (0.3 + 0.1j)) < 1e-12
    assert th.check_against(sys_) < 1e-12


def test_theta_validation():
    with pytest.raises(InvalidInput):
        ThetaData((0,), (1.2,))
    with pytest.raises(InvalidInput):
        ThetaData((-1,), (0.2,))


def test_fuchs_alpha_solves_relation():
    th = ThetaData((0, 1, 0), (0.2, 0.1, 0.5 + 0.2j), 0, 0.3)
    a = fuchs_alpha(th, 1)
    assert fuchs_relation_check(th, a, 1) < 1e-15


def test_polished_roots():
    r = polished_roots(np.polynomial.polynomial.polyfromroots([1, 2 + 1j, -3]))
    np.testing.assert_allclose(sorted(r, key=lambda z: z.real), [-3, 1, 2 + 1j], atol=1e-13)


def test_reduction_invariants(rng):
    sys_ = random_system(rng, 3, DIAGONAL_K, theta=-0.3 + 0.1j)
    th = ThetaData.from_system(sys_)
    for theta in (None, th):
        eq = reduce_to_scalar(sys_, theta)
        assert len(eq.apparent_points) == 1
        u = eq.apparent_points[0]
        np.testing.assert_allclose(eq.indicial_roots(u), [0, 2], atol=1e-10)
        G = scalar_monodromy_at(eq, u)
        assert algebra.norm(G - np.eye(2)) < 1e-8
        assert eq.exponent_sum_residual() < 1e-10
    # normalized exponents at each pole are {0, 2 s_i}
    for a, s in zip(sys_.poles, th.values):
        r = eq.indicial_roots(a)
        assert min(abs(r[0]) + abs(r[1] - 2 * s), abs(r[1]) + abs(r[0] - 2 * s)) < 1e-10


def test_reduction_pole_monodromy_eigenvalues(rng):
    sys_ = random_system(rng, 3, DIAGONAL_K, theta=-0.2)
    eq = reduce_to_scalar(sys_)
    a = sys_.poles[0]
    G = scalar_monodromy_at(eq, a)
    want = np.sort_complex(np.exp(2j * np.pi * np.array(eq.indicial_roots(a))))
    np.testing.assert_allclose(np.sort_complex(np.linalg.eigvals(G)), want, atol=1e-8)


def test_reducible_system_rejected():
    B = np.array([np.diag([0.2, -0.2]), np.diag([-0.2, 0.2])])
    B[0, 1, 0] = 0.3
    B[1, 1, 0] = -0.3
    with pytest.raises(InvalidInput) as exc:
        reduce_to_scalar(FuchsianSystem([0, 1], B))
    assert exc.value.code == "REDUCIBLE_SYSTEM"


def test_reduction_needs_2x2():
    with pytest.raises(InvalidInput) as exc:
        reduce_to_scalar(FuchsianSystem([0, 1], np.zeros((2, 3, 3))))
    assert exc.value.code == "DIMENSION_UNSUPPORTED"
