import numpy as np
from hypothesis import given, settings, strategies as st

from isolab.rational import RationalFunction

small = st.floats(-2, 2, allow_nan=False)
cplx = st.builds(complex, small, small)


def random_rf(rng, k=3, order=2, deg=1):
    centers = rng.normal(size=k) + 1j * rng.normal(size=k)
    poles = [(c, rng.normal(size=order) + 1j * rng.normal(size=order)) for c in centers]
    return RationalFunction(poles, rng.normal(size=deg + 1) + 0j)


def test_evaluate_simple_fractions():
    f = RationalFunction.simple_fractions([0, 1], [2, 3])
    z = 0.3 + 0.4j
    assert abs(f(z) - (2 / z + 3 / (z - 1))) < 1e-15


def test_product_and_sum_match_pointwise(rng):
    for _ in range(20):
        f, g = random_rf(rng), random_rf(rng, 2, 3, 0)
        z = complex(rng.normal(), rng.normal())
        assert abs((f * g)(z) - f(z) * g(z)) < 1e-9 * (1 + abs(f(z) * g(z)))
        assert abs((f + g)(z) - (f(z) + g(z))) < 1e-12 * (1 + abs(f(z)) + abs(g(z)))
        assert abs((f - g)(z) - (f(z) - g(z))) < 1e-12 * (1 + abs(f(z)) + abs(g(z)))


def test_derivative_matches_finite_difference(rng):
    f = random_rf(rng)
    z, h = 0.7 - 0.2j, 1e-6
    fd = (f(z + h) - f(z - h)) / (2 * h)
    assert abs(f.derivative()(z) - fd) < 1e-6 * (1 + abs(fd))


def test_residue_and_order():
    f = RationalFunction.pole(1.0, 2.0, order=3) + RationalFunction.pole(1.0, 5.0)
    assert f.residue(1.0) == 5
    assert f.order_at(1.0) == 3
    assert f.order_at(2.0) == 0


def test_square_of_simple_pole_has_double_pole():
    f = RationalFunction.simple_fractions([0, 1], [1, 1])
    g = f * f
    # 1/z^2 + 2/(z(z-1)) + 1/(z-1)^2; partial fractions give res 0 -> -2, res 1 -> 2
    np.testing.assert_allclose(g.principal_part(0), [-2, 1], atol=1e-14)
    np.testing.assert_allclose(g.principal_part(1), [2, 1], atol=1e-14)


def test_laurent_at_infinity_of_simple_pole():
    f = RationalFunction.pole(2.0)
    low, coeffs = f.laurent_at_infinity(-3)
    np.testing.assert_allclose(coeffs, [4, 2, 1], atol=1e-15)  # z^-3, z^-2, z^-1


@given(cplx, cplx, cplx)
@settings(max_examples=100, deadline=None)
def test_product_with_polynomial_tail(c, a, z):
    if abs(z - c) < 1e-2:
        return
    f = RationalFunction([(c, [a])], [1.0, 2.0])
    g = RationalFunction(poly=[0.5, 0.0, 1.0])
    assert abs((f * g)(z) - f(z) * g(z)) < 1e-8 * (1 + abs(f(z) * g(z)))


def test_trimmed_drops_small_terms():
    f = RationalFunction([(0, [1e-20, 1.0])], [1e-30])
    t = f.trimmed(1e-15)
    assert t.residue(0) == 0 and t.order_at(0) == 2 and t.degree == -1
