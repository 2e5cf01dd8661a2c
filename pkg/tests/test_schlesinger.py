import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isolab import algebra
from isolab.errors import BlowupDetected, InvalidInput
from isolab.fuchsian import DIAGONAL_K
from isolab.samples import random_system
from isolab.schlesinger import (
    ParamPath,
    SchlesingerState,
    commuting_ln_tau_change,
    commuting_oracle,
    flow,
    lemma1_residual,
    schlesinger_rhs,
    tau_increment,
)

E = np.array([[0, 1], [0, 0]], dtype=complex)
F = E.T.copy()


def test_rhs_worked_example():
    # dB_1 = -[B_1, B_2] / (a_1 - a_2) (da_1 - da_2) = +[B_1, B_2] for a = (0, 1), da = (1, 0)
    dB = schlesinger_rhs(SchlesingerState([0, 1], np.array([E, F])), [1, 0])
    np.testing.assert_allclose(dB[0], np.diag([1, -1]), atol=1e-15)
    np.testing.assert_allclose(dB[1], -np.diag([1, -1]), atol=1e-15)


def test_rhs_commuting_and_zero():
    B = np.array([np.diag([0.1, -0.1]), np.diag([0.3, -0.3]), np.diag([-0.4, 0.4])])
    assert np.all(schlesinger_rhs(SchlesingerState([0, 1, 2j], B), [1, 2, 3]) == 0)
    assert np.all(schlesinger_rhs(SchlesingerState([0, 1], np.zeros((2, 2, 2))), [1, 0]) == 0)
    assert tau_increment(SchlesingerState([0, 1], np.zeros((2, 2, 2))), [1, 0]) == 0


def test_rhs_collision():
    with pytest.raises(InvalidInput) as exc:
        schlesinger_rhs(SchlesingerState([0, 1e-13], np.array([E, F])), [1, 0])
    assert exc.value.code == "POLE_COLLISION"


def test_rhs_sums_to_zero(rng):
    st_ = SchlesingerState.from_system(random_system(rng, 5))
    dB = schlesinger_rhs(st_, rng.normal(size=5))
    assert algebra.norm(dB.sum(axis=0)) < 1e-14


def test_param_path_separation():
    with pytest.raises(InvalidInput) as exc:
        ParamPath([[0, 1], [2, 1]])
    assert exc.value.code == "POLE_COLLISION"
    assert ParamPath([[0, 1], [2, 1]], probe=True).min_pair_distance() == 0
    p = ParamPath([[0, 1], [0.5, 1]])
    assert abs(p.min_pair_distance() - 0.5) < 1e-15


def test_oracle_tau_example():
    B1 = np.diag([0.25, -0.25])
    Y, tau, ln_tau = commuting_oracle([B1, -B1], [0, 1], 2.0)
    assert abs(ln_tau - (-1 / 8) * np.log(-1 + 0j)) < 1e-15
    assert abs(tau - np.exp(-1j * np.pi / 8)) < 1e-15
    np.testing.assert_allclose(Y, np.diag([2 ** 0.25, 2 ** -0.25]), atol=1e-14)


def test_oracle_not_commuting():
    with pytest.raises(InvalidInput) as exc:
        commuting_oracle([E, F], [0, 1], 2.0)
    assert exc.value.code == "NOT_COMMUTING"


def test_commuting_flow_fixed_and_tau():
    B = np.array([np.diag([0.1, -0.1]), np.diag([0.3j, -0.3j]), np.diag([-0.1 - 0.3j, 0.1 + 0.3j])])
    st_ = SchlesingerState([0, 1, 1j], B)
    path = ParamPath([[0, 1, 1j], [0.3, 1.2, 1j], [0.3 + 0.4j, 0.9, 1.1j]])
    out = flow(st_, path)
    assert np.max(np.abs(out.residues - B)) <= 1e-9
    assert abs(out.ln_tau - commuting_ln_tau_change(B, path)) < 1e-9


def test_zero_residues_flow():
    st_ = SchlesingerState([0, 1], np.zeros((2, 2, 2)))
    out = flow(st_, ParamPath([[0, 1], [0.5j, 1]]))
    assert out.ln_tau == 0 and np.all(out.residues == 0)


def test_flow_rejects_wrong_start():
    with pytest.raises(InvalidInput):
        flow(SchlesingerState([0, 1], np.zeros((2, 2, 2))), ParamPath([[0, 2], [0, 3]]))


def test_blowup_ceiling(rng):
    st_ = SchlesingerState.from_system(random_system(rng, 3))
    path = ParamPath([st_.poles, st_.poles + [0.3, 0, 0]])
    with pytest.raises(BlowupDetected) as exc:
        flow(st_, path, ceiling=0.5 * st_.max_norm())
    assert exc.value.partial is not None


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_invariants_along_flow(seed):
    rng = np.random.default_rng(seed)
    sys_ = random_system(rng, 4)
    st_ = SchlesingerState.from_system(sys_)
    d = rng.normal(size=4) + 1j * rng.normal(size=4)
    d *= 0.05 / np.linalg.norm(d)
    out = flow(st_, ParamPath([sys_.poles, sys_.poles + d]))
    assert algebra.norm(out.residue_sum() - sys_.residue_sum()) < 1e-12
    for a, b in zip(sys_.residues, out.residues):
        assert abs(np.linalg.det(a) - np.linalg.det(b)) < 1e-10


def test_tau_closed_loop(rng):
    sys_ = random_system(rng, 3)
    a = sys_.poles
    out = flow(SchlesingerState.from_system(sys_), ParamPath([a, a + [0.1, 0, 0], a + [0.1, 0.1j, 0], a]))
    assert abs(out.ln_tau) < 1e-9


def test_lemma1(rng):
    st_ = SchlesingerState.from_system(random_system(rng, 3, DIAGONAL_K, theta=0.2 + 0.1j))
    r1, r2 = lemma1_residual(st_, 1e-3), lemma1_residual(st_, 1e-4)
    assert 80 <= r1 / r2 <= 120
    half = SchlesingerState.from_system(random_system(rng, 3, DIAGONAL_K, theta=-0.5))
    assert lemma1_residual(half, 1e-3) < 1e-10
    with pytest.raises(InvalidInput):
        lemma1_residual(SchlesingerState.from_system(random_system(rng, 3)), 1e-3)
