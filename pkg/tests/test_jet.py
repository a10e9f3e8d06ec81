import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framelap import jet
from framelap.jet import Jet3, JetDomainError, JetOrderError, basis_size

finite = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=0.1, max_value=5.0, allow_nan=False, allow_infinity=False)


def random_jet(seed: int, nvars: int = 2, order: int = 3) -> Jet3:
    rng = np.random.default_rng(seed)
    return Jet3(rng.normal(size=basis_size(nvars, order)), nvars, order)


# Construction Tests
def test_basis_sizes():
    assert basis_size(1, 3) == 4
    assert basis_size(2, 2) == 6
    assert basis_size(3, 3) == 20


def test_variable_gradient():
    x, y = Jet3.variables([2.0, 3.0], 3)
    assert x.value == 2.0
    np.testing.assert_allclose(x.gradient(), [1.0, 0.0])
    np.testing.assert_allclose(y.gradient(), [0.0, 1.0])


def test_order_above_three_rejected():
    with pytest.raises(JetOrderError):
        Jet3.constant(1.0, 2, 4)


def test_too_many_variables_rejected():
    with pytest.raises(JetOrderError):
        Jet3.constant(1.0, 4, 2)


def test_wrong_coefficient_count():
    with pytest.raises(ValueError):
        Jet3([1.0, 2.0], 2, 1)


# Arithmetic Tests
def test_product_derivatives():
    x, y = Jet3.variables([2.0, 3.0], 3)
    f = x * x * y
    assert f.value == pytest.approx(12.0)
    np.testing.assert_allclose(f.gradient(), [12.0, 4.0])
    np.testing.assert_allclose(f.hessian(), [[6.0, 4.0], [4.0, 0.0]])
    assert f.partial((2, 1)) == pytest.approx(2.0)
    assert f.partial((3, 0)) == pytest.approx(0.0)


def test_quotient_matches_closed_form():
    (x,) = Jet3.variables([0.5], 3)
    f = 1.0 / (1.0 + x)
    for n in range(4):
        expected = (-1) ** n * math.factorial(n) / 1.5 ** (n + 1)
        assert f.partial((n,)) == pytest.approx(expected)


def test_integer_and_real_powers():
    (x,) = Jet3.variables([1.3], 3)
    cube = x**3
    assert cube.partial((1,)) == pytest.approx(3 * 1.3**2)
    root = x**0.5
    assert root.partial((2,)) == pytest.approx(-0.25 * 1.3**-1.5)


def test_mixed_order_arithmetic_truncates():
    x2 = Jet3.variable(0, 1.0, 1, 2)
    x3 = Jet3.variable(0, 1.0, 1, 3)
    assert (x2 + x3).order == 2


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_distributivity(seed):
    a, b, c = random_jet(seed), random_jet(seed + 1), random_jet(seed + 2)
    np.testing.assert_allclose(((a + b) * c).coeffs, (a * c + b * c).coeffs, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(positive)
def test_exp_log_inverse(value):
    (x,) = Jet3.variables([value], 3)
    np.testing.assert_allclose(jet.exp(jet.log(x)).coeffs, x.coeffs, atol=1e-10)


# Elementary Function Tests
def test_sine_derivatives():
    (x,) = Jet3.variables([0.7], 3)
    s = jet.sin(x)
    expected = [math.sin(0.7), math.cos(0.7), -math.sin(0.7), -math.cos(0.7)]
    for n, value in enumerate(expected):
        assert s.partial((n,)) == pytest.approx(value)


@settings(max_examples=30, deadline=None)
@given(finite, finite)
def test_pythagorean_identity(a, b):
    x, y = Jet3.variables([a, b], 3)
    arg = x * y + x
    one = jet.sin(arg) ** 2 + jet.cos(arg) ** 2
    np.testing.assert_allclose(one.coeffs, Jet3.constant(1.0, 2, 3).coeffs, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(finite, finite)
def test_finite_difference_agreement(a, b):
    def f(u, v):
        return jet.exp(u * 0.3) * jet.sin(v) + u * u * v

    x, y = Jet3.variables([a, b], 3)
    value = f(x, y)
    h = 1e-5
    fd = (f(a + h, b) - f(a - h, b)) / (2 * h)
    assert value.gradient()[0] == pytest.approx(fd, rel=1e-6, abs=1e-6)


def test_atan2_matches_angle_derivative():
    x, y = Jet3.variables([0.3, 1.2], 2)
    angle = jet.atan2(y, x)
    r2 = 0.3**2 + 1.2**2
    np.testing.assert_allclose(angle.gradient(), [-1.2 / r2, 0.3 / r2])


def test_log_of_negative_raises():
    (x,) = Jet3.variables([-1.0], 2)
    with pytest.raises(JetDomainError):
        jet.log(x)


def test_sqrt_at_zero_raises():
    (x,) = Jet3.variables([0.0], 1)
    with pytest.raises(JetDomainError):
        jet.sqrt(x)


def test_division_by_zero_raises():
    (x,) = Jet3.variables([0.0], 2)
    with pytest.raises(JetDomainError):
        1.0 / x


# Structural Tests
def test_deriv_exhausts_order():
    (x,) = Jet3.variables([1.0], 1)
    with pytest.raises(JetOrderError):
        x.deriv(0).deriv(0)


def test_hessian_needs_order_two():
    (x,) = Jet3.variables([1.0], 1)
    with pytest.raises(JetOrderError):
        x.hessian()


def test_integrate_then_differentiate():
    j = random_jet(3, order=2)
    np.testing.assert_allclose(j.integrate(1).deriv(1).coeffs, j.coeffs, atol=1e-14)


def test_embed_moves_variables():
    x, y = Jet3.variables([0.2, 0.5], 3)
    f = x * y * y
    g = f.embed(3, [2, 0])
    assert g.partial((2, 0, 1)) == pytest.approx(f.partial((1, 2)))


def test_compose_chain_rule():
    (t,) = Jet3.variables([0.4], 3)
    inner = jet.sin(t)
    (s,) = Jet3.variables([inner.value], 3)
    outer = jet.exp(s)
    direct = jet.exp(jet.sin(t))
    np.testing.assert_allclose(outer.compose([inner]).coeffs, direct.coeffs, atol=1e-12)


# Linear Algebra Tests
def test_solve_matches_numpy_and_derivatives():
    x, y = Jet3.variables([0.3, -0.4], 2)
    matrix = [[2.0 + x, y], [x * y, 3.0 - y]]
    rhs = [1.0 + x * x, y]
    solution = jet.solve(matrix, rhs)
    values = np.array([[jet.value_of(c) for c in row] for row in matrix])
    np.testing.assert_allclose([s.value for s in solution], np.linalg.solve(values, [1.09, -0.4]))
    residual = [sum(matrix[i][k] * solution[k] for k in range(2)) - rhs[i] for i in range(2)]
    for r in residual:
        np.testing.assert_allclose(r.coeffs, 0.0, atol=1e-12)


def test_singular_solve_raises():
    with pytest.raises(JetDomainError):
        jet.solve([[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0])


def test_determinant_three_by_three():
    matrix = [[2.0, 0.0, 1.0], [1.0, 3.0, 0.0], [0.0, 1.0, 4.0]]
    assert jet.value_of(jet.determinant(matrix)) == pytest.approx(np.linalg.det(np.array(matrix)))


def test_invert_map_round_trip():
    point = (0.3, 0.2)
    x, y = Jet3.variables(point, 3)
    forward = [x + y * y, y + 0.5 * x * x * x]
    inverse = jet.invert_map(forward, point)
    identity = [c.compose(inverse) for c in forward]
    image = Jet3.variables([c.value for c in forward], 3)
    for got, want in zip(identity, image):
        np.testing.assert_allclose(got.coeffs, want.coeffs, atol=1e-12)
