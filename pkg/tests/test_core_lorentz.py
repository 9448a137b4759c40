import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from causal_rigidity import core_lorentz as cl
from causal_rigidity.errors import DimensionMismatch, InvalidInput, SingularInversion

coord = st.floats(-2.0, 2.0, allow_nan=False)


@st.composite
def vec_pair(draw):
    n = draw(st.integers(2, 6))
    x = draw(arrays(float, n, elements=coord))
    y = draw(arrays(float, n, elements=coord))
    return x, y


def brute_mul(x, y):
    n = len(x)
    z = [sum(x[k] * y[k] for k in range(n))]
    for j in range(1, n):
        z.append(x[0] * y[j] + x[j] * y[0])
    return np.array(z)


def test_neutral_times_x():
    np.testing.assert_array_equal(cl.jordan_mul([1, 0, 0], [2, 1, 0]), [2, 1, 0])


@pytest.mark.parametrize(
    "x,y,z",
    [((2, 1), (2, -1), (3, 0)), ((1, 1), (1, 1), (2, 2))],
)
def test_product_examples(x, y, z):
    np.testing.assert_allclose(cl.jordan_mul(x, y), z, atol=1e-12)
    np.testing.assert_allclose(brute_mul(x, y), z, atol=1e-12)


def test_mul_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        cl.jordan_mul([1, 0], [1, 0, 0])


@pytest.mark.parametrize("bad", [[1.0], [[1.0, 2.0]], [np.nan, 0.0], [np.inf, 1.0]])
def test_rejects_malformed(bad):
    with pytest.raises(InvalidInput):
        cl.as_chart_vector(bad)


@pytest.mark.parametrize("x,d", [((1, 0, 0), 1.0), ((1, 1), 0.0), ((2, 1, 0), 3.0)])
def test_lorentz_form(x, d):
    assert cl.lorentz_form(x) == d


def test_inverse_examples():
    np.testing.assert_array_equal(cl.jordan_inv([1, 0, 0]), [1, 0, 0])
    inv = cl.jordan_inv([2, 1, 0])
    np.testing.assert_allclose(inv, [2 / 3, -1 / 3, 0], atol=1e-12)
    np.testing.assert_allclose(cl.jordan_mul([2, 1, 0], inv), [1, 0, 0], atol=1e-12)
    with pytest.raises(SingularInversion):
        cl.jordan_inv([1, 1])


def test_singular_tolerance_scales_with_norm():
    # Delta = 2e-5 passes the absolute test but not the relative one
    with pytest.raises(SingularInversion):
        cl.jordan_inv([1e4, 1e4 - 1e-9])
    # the floor max(1, |x|^2) keeps tiny vectors singular
    with pytest.raises(SingularInversion):
        cl.jordan_inv([1e-7, 0.0])
    x = np.array([1e4, 1e3])
    np.testing.assert_allclose(cl.jordan_mul(x, cl.jordan_inv(x)), [1, 0], atol=1e-12)


def test_cone_examples():
    assert cl.in_cone([1, 0, 0])
    assert not cl.in_cone([1, 1])
    assert cl.in_cone([1, 1], closed=True)
    assert not cl.in_cone([-1, 0], closed=True)
    assert cl.in_cone([-1e-9, 0], closed=True, margin=1e-8)


def test_alpha_examples():
    np.testing.assert_array_equal(cl.alpha([1, 0, 0]), [1, 0, 0])
    np.testing.assert_array_equal(cl.alpha([0, 1, 2]), [0, -1, -2])


def test_split_examples():
    plus, minus = cl.split_parts([3, 1, 2])
    np.testing.assert_array_equal(plus, [3, 0, 0])
    np.testing.assert_array_equal(minus, [0, 1, 2])
    plus, minus = cl.split_parts([0, 5])
    np.testing.assert_array_equal(plus, [0, 0])
    np.testing.assert_array_equal(minus, [0, 5])


@given(vec_pair())
def test_product_matches_brute_force_and_commutes(pair):
    x, y = pair
    np.testing.assert_allclose(cl.jordan_mul(x, y), brute_mul(x, y), atol=1e-12)
    np.testing.assert_array_equal(cl.jordan_mul(x, y), cl.jordan_mul(y, x))


@given(vec_pair())
def test_jordan_identity(pair):
    x, y = pair
    x2 = cl.jordan_mul(x, x)
    lhs = cl.jordan_mul(x2, cl.jordan_mul(x, y))
    rhs = cl.jordan_mul(x, cl.jordan_mul(x2, y))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10


@given(vec_pair())
def test_alpha_split_and_neutral(pair):
    x, _ = pair
    np.testing.assert_array_equal(cl.alpha(cl.alpha(x)), x)
    plus, minus = cl.split_parts(x)
    np.testing.assert_array_equal(plus + minus, x)
    np.testing.assert_allclose(plus, (x + cl.alpha(x)) / 2)
    np.testing.assert_array_equal(cl.jordan_mul(cl.neutral(len(x)), x), x)


@given(vec_pair())
def test_inverse_properties(pair):
    x, _ = pair
    d = cl.lorentz_form(x)
    if abs(d) < 1e-6:
        return
    inv = cl.jordan_inv(x)
    assert np.max(np.abs(cl.jordan_mul(x, inv) - cl.neutral(len(x)))) <= 1e-10
    assert abs(cl.lorentz_form(inv) * d - 1) <= 1e-10


def test_cone_automorphisms_preserve_form_up_to_scale(rng):
    for dim in (2, 3, 5):
        g = cl.random_cone_automorphism(dim, rng)
        q = np.diag([1.0] + [-1.0] * (dim - 1))
        gram = g.T @ q @ g
        scale = gram[0, 0]
        assert scale > 0
        np.testing.assert_allclose(gram, scale * q, atol=1e-9 * scale)
        assert g[0, 0] > 0


def test_haar_orthogonal_is_orthogonal(rng):
    for k in (1, 2, 4):
        a = cl.haar_orthogonal(k, rng)
        np.testing.assert_allclose(a @ a.T, np.eye(k), atol=1e-12)
