import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from isolab import algebra
from isolab.errors import InvalidInput

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
cplx = st.builds(complex, finite, finite)
mat2 = st.lists(cplx, min_size=4, max_size=4).map(lambda v: np.array(v).reshape(2, 2))


def test_norm_is_max_entry():
    assert algebra.norm([[1, -3j], [2, 0]]) == 3


def test_commutator_of_nilpotents():
    e = np.array([[0, 1], [0, 0]])
    f = e.T
    np.testing.assert_array_equal(algebra.commutator(e, f), np.diag([1, -1]))


def test_eig_sorted_and_reconstructs(rng):
    for _ in range(50):
        A = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        data = algebra.eig(A)
        assert data.diagonalizable
        v = data.values
        assert (v[0].real, v[0].imag) <= (v[1].real, v[1].imag)
        np.testing.assert_allclose(data.reconstruct(), A, atol=1e-12)


def test_eig_detects_jordan_block():
    A = np.array([[2.0, 1.0], [0.0, 2.0]])
    data = algebra.eig(A)
    assert not data.diagonalizable
    np.testing.assert_allclose(data.reconstruct(), A, atol=1e-14)


def test_eig_scalar_matrix_is_diagonalizable():
    assert algebra.eig(3 * np.eye(2)).diagonalizable


def test_eig_rejects_large_dimension():
    with pytest.raises(InvalidInput) as exc:
        algebra.eig(np.eye(5))
    assert exc.value.code == "DIMENSION_UNSUPPORTED"


def test_shape_mismatch():
    with pytest.raises(InvalidInput) as exc:
        algebra.as_matrix(np.zeros((2, 3)))
    assert exc.value.code == "SHAPE_MISMATCH"


@given(mat2)
@settings(max_examples=200, deadline=None)
def test_exp_matches_scipy(A):
    np.testing.assert_allclose(algebra.mat_exp(A), scipy.linalg.expm(A), rtol=1e-10, atol=1e-10)


def test_exp_nilpotent_closed_form():
    N = np.array([[0, 1], [0, 0]], dtype=complex)
    np.testing.assert_allclose(algebra.mat_exp(N), np.eye(2) + N, atol=1e-15)


def test_exp_three_by_three_uses_reference():
    A = np.arange(9).reshape(3, 3) / 10
    np.testing.assert_allclose(algebra.mat_exp(A), scipy.linalg.expm(A), rtol=1e-13)


def test_exp_overflow():
    with pytest.raises(algebra.NumericalAbort) as exc:
        algebra.mat_exp(np.diag([800.0, 0.0]))
    assert exc.value.code == "OVERFLOW"


def eig2_closed_form(A):
    # LAPACK balancing can move eigenvalues of nearly defective matrices by ~sqrt(eps)
    h = np.sqrt(0.25 * (A[0, 0] - A[1, 1]) ** 2 + A[0, 1] * A[1, 0] + 0j)
    m = 0.5 * (A[0, 0] + A[1, 1])
    return np.array([m - h, m + h])


@given(mat2)
@settings(max_examples=300, deadline=None)
def test_log_normalized_roundtrip(G):
    if abs(np.linalg.det(G)) < 1e-6:
        return
    E = algebra.mat_log_normalized(G)
    err = algebra.norm(algebra.mat_exp(2j * np.pi * E) - G)
    # Two nearly equal eigenvalues on opposite sides of the branch cut force
    # |E| ~ 1/gap; exp(2 pi i E) then cannot beat roughly eps * |E| * |G|.
    assert err <= 1e-9 * (1 + algebra.norm(G)) + 1e-13 * algebra.norm(E) * algebra.norm(G)
    re = eig2_closed_form(E).real
    assert re.min() >= -1e-12 and re.max() < 1 + 1e-12


def test_log_identity_is_zero():
    np.testing.assert_allclose(algebra.mat_log_normalized(np.eye(2)), 0, atol=1e-15)


def test_log_minus_identity_is_half():
    np.testing.assert_allclose(algebra.mat_log_normalized(-np.eye(2)), 0.5 * np.eye(2), atol=1e-15)


def test_log_jordan_block():
    G = np.array([[1.0, 1.0], [0.0, 1.0]])
    E = algebra.mat_log_normalized(G)
    np.testing.assert_allclose(E, [[0, 1 / (2j * np.pi)], [0, 0]], atol=1e-14)


def test_log_close_eigenvalues_stay_accurate():
    G = np.array([[1.0, 1.0], [0.0, 1.0 + 1e-11]])
    E = algebra.mat_log_normalized(G)
    assert algebra.norm(algebra.mat_exp(2j * np.pi * E) - G) < 1e-12


def test_log_singular():
    with pytest.raises(InvalidInput) as exc:
        algebra.mat_log_normalized(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert exc.value.code == "SINGULAR_MATRIX"


def test_normalized_log_eigenvalues_range():
    rho = algebra.normalized_log_eigenvalues(np.diag([np.exp(2j * np.pi * 0.999999), -1]))
    assert all(0 <= r.real < 1 for r in rho)


def test_mat_power_branch_and_errors():
    B = np.diag([0.5, -0.5])
    np.testing.assert_allclose(algebra.mat_power(4.0, B), np.diag([2.0, 0.5]))
    # continuing once around the origin multiplies by exp(2 pi i B)
    lg = np.log(4.0) + 2j * np.pi
    np.testing.assert_allclose(algebra.mat_power(4.0, B, lg), np.diag([-2.0, -0.5]), atol=1e-14)
    with pytest.raises(InvalidInput) as exc:
        algebra.mat_power(0, B)
    assert exc.value.code == "ZERO_BASE"


def test_log_straddling_branch_cut_is_large_but_exact():
    G = np.array([[1, 1j], [5.43e-14j, 1]])
    E = algebra.mat_log_normalized(G)
    assert algebra.norm(E) > 1e6
    np.testing.assert_allclose(np.sort(np.linalg.eigvals(E).real), [0, 1], atol=1e-6)
    assert algebra.norm(algebra.mat_exp(2j * np.pi * E) - G) < 1e-8
