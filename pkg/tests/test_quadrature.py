import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bessel_poisson_lab.quadrature import (ConvergenceError, QuadratureSpec, TailPolicy,
                                           composite_gauss_legendre, gauss_jacobi, gauss_legendre,
                                           integrate, integrate_semi_infinite)


def test_sine_integral():
    res = integrate(np.sin, 0.0, math.pi)
    assert abs(res.value - 2.0) <= 1e-10
    assert res.error <= 1e-10


def test_a_constant_instance_over_the_line():
    f = lambda s: (s * s + 1.0) ** -2
    tail = TailPolicy.power_decay(4.0)
    half = integrate_semi_infinite(f, 0.0, tail).value
    assert 2 * half == pytest.approx(math.pi / 2, rel=1e-9)


def test_exponential_tail():
    res = integrate_semi_infinite(lambda y: np.exp(-y), 0.0, TailPolicy.exponential_decay(1.0))
    assert abs(res.value - 1.0) <= 1e-9
    assert res.error <= 1e-9


def test_gaussian_moment():
    # int_0^inf y^2 exp(-y^2/2) dy = sqrt(pi/2)
    res = integrate_semi_infinite(lambda y: y * y * np.exp(-y * y / 2), 0.0, TailPolicy.exponential_decay(1.0))
    assert res.value == pytest.approx(math.sqrt(math.pi / 2), rel=1e-10)


def test_rational_half_line():
    res = integrate_semi_infinite(lambda y: (1 + y * y) ** -2, 0.0, TailPolicy.power_decay(4.0))
    assert res.value == pytest.approx(math.pi / 4, rel=1e-9)


def test_zero_integrand():
    res = integrate_semi_infinite(lambda y: np.zeros_like(y), 0.0, TailPolicy.power_decay(2.0))
    assert res.value == 0.0
    assert integrate(lambda y: 0 * y, 0.0, 1.0).value == 0.0


def test_truncated_tail():
    res = integrate_semi_infinite(lambda y: np.ones_like(y), 1.0, TailPolicy.truncate_at(3.0))
    assert res.value == pytest.approx(2.0, rel=1e-14)
    assert integrate_semi_infinite(np.cos, 5.0, TailPolicy.truncate_at(3.0)).value == 0.0


def test_singular_hint_and_scalar_callable():
    spec = QuadratureSpec(rel_tol=1e-10).with_hints(0.3)
    res = integrate(lambda y: math.sqrt(abs(y - 0.3)), 0.0, 1.0, spec)
    ref = (2 / 3) * (0.3 ** 1.5 + 0.7 ** 1.5)
    assert res.value == pytest.approx(ref, rel=1e-9)


def test_budget_exhaustion_raises_with_estimate():
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-14, max_subdivisions=3)
    with pytest.raises(ConvergenceError) as info:
        integrate(lambda y: np.sin(1 / y), 1e-3, 1.0, spec)
    assert math.isfinite(info.value.value)


def test_non_decaying_tail_raises():
    with pytest.raises(ConvergenceError):
        integrate_semi_infinite(lambda y: np.ones_like(y), 0.0, TailPolicy.power_decay(0.0), max_doublings=5)


def test_reversed_interval_rejected():
    with pytest.raises(ValueError):
        integrate(np.sin, 1.0, 0.0)


def test_spec_and_policy_validation():
    with pytest.raises(ValueError):
        QuadratureSpec(abs_tol=0.0)
    with pytest.raises(ValueError):
        TailPolicy("polynomial")
    with pytest.raises(ValueError):
        TailPolicy.exponential_decay(0.0)
    assert TailPolicy.power_decay(-2.0).growth_exponent() == 2.0
    assert TailPolicy.exponential_decay(1.0).growth_exponent() == -math.inf
    assert TailPolicy.power_decay(1.0).tail_bound(1.0, 10.0) == math.inf
    assert TailPolicy.power_decay(3.0).tail_bound(2.0, 10.0) == pytest.approx(10.0)
    assert QuadratureSpec().scaled(0.1).rel_tol == pytest.approx(1e-9)


@given(st.integers(1, 40))
def test_gauss_legendre_exact_for_polynomials(n):
    x, w = gauss_legendre(n)
    for k in range(0, 2 * n, max(1, n // 3)):
        exact = 0.0 if k % 2 else 2.0 / (k + 1)
        assert float(w @ x ** k) == pytest.approx(exact, abs=1e-12)


def test_gauss_jacobi_weight_integral():
    x, w = gauss_jacobi(12, 0.5, -0.5)
    # int (1-x)^(1/2) (1+x)^(-1/2) dx = pi
    assert w.sum() == pytest.approx(math.pi, rel=1e-13)


def test_composite_rule_broadcasts():
    edges = np.array([[0.0, 1.0, 2.0], [0.0, 0.5, 3.0]])
    nodes, weights = composite_gauss_legendre(edges, 5)
    assert nodes.shape == weights.shape == (2, 10)
    assert np.allclose(weights.sum(axis=1), [2.0, 3.0])
    assert np.allclose((weights * nodes ** 3).sum(axis=1), [4.0, 81 / 4])
