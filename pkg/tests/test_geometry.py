import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bessel_poisson_lab import geometry as geo
from bessel_poisson_lab.catalog import get_entry
from bessel_poisson_lab.field import build_field, geometric_grid
from bessel_poisson_lab.specfun import DomainError

SH1, CH1 = math.sinh(1.0), math.cosh(1.0)

centers = st.tuples(st.floats(0.05, 20.0), st.floats(-10.0, 10.0))
radii = st.floats(0.01, 3.0)


@settings(max_examples=60, deadline=None)
@given(centers, radii, st.floats(0, 2 * math.pi))
def test_hyperbolic_circle_is_euclidean_circle(a, r, direction):
    ball = geo.HyperbolicBall(a[0], a[1], r)
    p = geo.point_at_distance(a, r, direction)
    c = ball.euclid_center
    assert math.hypot(p[0] - c[0], p[1] - c[1]) == pytest.approx(ball.euclid_radius, rel=1e-10)
    assert geo.sigma(a, p) == pytest.approx(math.cosh(r), rel=1e-10)


@settings(max_examples=30, deadline=None)
@given(centers, radii)
def test_circle_points_at_constant_distance(a, r):
    ball = geo.HyperbolicBall(a[0], a[1], r)
    b1, b2 = ball.circle_points(np.linspace(0, 2 * math.pi, 17))
    for p in zip(b1, b2):
        assert geo.sigma(a, p) == pytest.approx(math.cosh(r), rel=1e-9)
    assert ball.lowest_b2() == pytest.approx(a[1] - a[0] * math.sinh(r))


@given(centers, centers)
def test_sigma_symmetric(a, b):
    assert geo.sigma(a, b) == pytest.approx(geo.sigma(b, a), rel=1e-14)
    assert geo.sigma(a, a) == 1.0
    assert geo.sigma(a, b) >= 1.0 - 1e-15


def test_ball_validation():
    with pytest.raises(DomainError):
        geo.HyperbolicBall(0.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        geo.HyperbolicBall(1.0, 0.0, 0.0)


def test_circle_integral_closed_forms():
    ball = geo.HyperbolicBall(1.0, 0.0, 1.0)
    one = lambda b1, b2: np.ones_like(b1)
    assert geo.circle_integral(one, ball, 1.0) == pytest.approx(2 * math.pi * SH1, rel=1e-13)
    # w = 0 is the Euclidean circumference 2 pi a1 sinh r
    assert geo.circle_integral(one, ball, 0.0) == pytest.approx(2 * math.pi * SH1, rel=1e-13)
    assert geo.circle_integral(lambda b1, b2: b1 ** 2, ball, 1.0) == pytest.approx(2 * math.pi * SH1 * CH1, rel=1e-13)
    # int (A + B cos)^-2 = 2 pi A / (A^2 - B^2)^(3/2) with A = cosh 1, B = sinh 1
    assert geo.circle_integral(lambda b1, b2: 1 / b1, ball, 1.0) == pytest.approx(2 * math.pi * SH1 * CH1, rel=1e-13)


def test_normalization_closed_forms():
    assert geo.calibrate_normalization(2.0, 1.0) == pytest.approx(math.pi * CH1, rel=1e-12)
    for r in (0.1, 0.9, 2.5):
        assert geo.calibrate_normalization(1.0, r) == pytest.approx(math.pi, rel=1e-12)
    with pytest.raises(DomainError):
        geo.calibrate_normalization(2.0, 0.0)


@pytest.mark.parametrize("lam,r", [(3.5, 0.7), (1.2, 0.2), (2.7, 1.5)])
def test_normalization_matches_legendre(lam, r):
    ref = math.pi * float(mpmath.legenp(lam - 1, 0, math.cosh(r), type=3))
    assert geo.calibrate_normalization(lam, r) == pytest.approx(ref, rel=1e-8)


def test_normalization_independent_of_center():
    n = geo.calibrate_normalization(2.5, 0.6)
    assert geo.calibrate_normalization(2.5, 0.6, (3.0, -2.0)) == pytest.approx(n, rel=1e-12)


def test_mean_value_power_functions():
    for lam in (1.2, 2.0, 3.5):
        assert geo.mean_value_check(lam, lambda b1, b2: b1 ** lam, (1.7, 0.3), 0.8) <= 1e-10
    assert geo.mean_value_check(2.0, lambda b1, b2: b1 ** -1.0, (1, 0), 1.0) <= 1e-8


def test_mean_value_poisson_slice():
    v = geo.poisson_field_function(2.0, get_entry("chi_12").function(2.0))
    assert geo.mean_value_check(2.0, v, (1.4, 1.0), 0.2) <= 1e-4


def test_a_constant_values():
    assert geo.a_constant(2.0) == pytest.approx(math.pi / 2, rel=1e-13)
    assert geo.a_constant(1.0) == pytest.approx(math.pi, rel=1e-13)
    assert geo.a_constant(3.5) == pytest.approx(2 * math.sqrt(math.pi) / math.gamma(3.5), rel=1e-13)
    assert geo.a_constant(3.5) == pytest.approx(1.0666666666666667, rel=1e-12)
    with pytest.raises(DomainError):
        geo.a_constant(0.5)


def test_representation_kernel():
    assert geo.representation_kernel(2.0, 0.5, 1.0, 1.0) == pytest.approx(2.0, rel=1e-14)
    assert geo.kernel_normalization(2.0, 0.5, 1.0) == pytest.approx(math.pi / 2, abs=1e-8)
    with pytest.raises(DomainError):
        geo.representation_kernel(2.0, 0.0, 1.0, 1.0)


@given(st.floats(0.8, 4.0), st.floats(0.05, 10), st.floats(-5, 5), st.floats(-5, 5), st.floats(0.1, 10))
def test_representation_kernel_scaling(lam, x, t, s, c):
    k = geo.representation_kernel(lam, x, t, s)
    assert geo.representation_kernel(lam, c * x, c * t, c * s) == pytest.approx(k / c, rel=1e-10)


def test_weinstein_residual_exact_solution():
    x = np.linspace(0.5, 4.0, 33)
    t = np.linspace(0.5, 4.0, 33)
    X, T = np.meshgrid(x, t, indexing="ij")
    assert np.max(np.abs(geo.weinstein_residual(2.0, x, t, X ** 2))) <= 1e-8
    res = geo.weinstein_residual(2.0, x, t, X ** 3)
    # x^3 is not 2-harmonic: L u = 6x - 2 x = 4x
    assert np.allclose(res, 4 * X[1:-1, 1:-1], rtol=1e-8)


def test_weinstein_order_for_dual_power():
    res = geo.residual_convergence(2.5, lambda X, T: X ** -1.5, (0.5, 4.0), (0.5, 4.0), n0=17, levels=3)
    assert min(res["orders"]) >= 1.8
    assert res["max_residual"][-1] < res["max_residual"][0]


def test_weinstein_residual_on_field():
    f = get_entry("chi_12").function(2.0)
    fld = build_field(2.0, f, np.linspace(0.5, 4.0, 17), np.linspace(0.5, 4.0, 17))
    res = geo.weinstein_residual(2.0, fld.x_nodes, fld.t_nodes, fld.u)
    assert np.array_equal(res, geo.weinstein_residual(2.0, fld))
    assert res.shape == (15, 15)
    with pytest.raises(DomainError):
        geo.weinstein_residual(2.0, fld.x_nodes[:3], fld.t_nodes, fld.u[:3])


def test_subharmonic_constant_equality():
    disks = geo.random_disks(10, (0.5, 5), (0.5, 5), seed=3)
    res = geo.subharmonic_check(lambda X, T: np.full_like(X, 2.0), disks)
    assert all(abs(r["excess"]) <= 1e-10 for r in res["rows"])
    assert not res["violations"]


def test_subharmonic_power_small_disks():
    disks = [(x0, t0, t0 / 2) for x0 in (1.0, 2.0, 5.0) for t0 in (0.2, 0.6, 1.0)]
    res = geo.subharmonic_check(lambda X, T: X ** 2.0, disks)
    assert len(res["rows"]) == 9 and not res["violations"]


def test_subharmonic_poisson_field():
    u = geo.poisson_field_function(2.0, get_entry("chi_12").function(2.0))
    res = geo.subharmonic_check(u, geo.random_disks(20, (0.1, 10), (0.05, 5), seed=11))
    assert len(res["rows"]) == 20 and not res["violations"]


def test_subharmonic_skips_disks_outside_domain():
    res = geo.subharmonic_check(lambda X, T: X, [(1.0, 0.5, 0.6), (1.0, 1.0, 0.5)], domain=((0.1, 10), (0.1, 10)))
    assert res["skipped"] == [(1.0, 0.5, 0.6)]
    assert len(res["rows"]) == 1


def test_random_disks_deterministic():
    a = geo.random_disks(5, (0.1, 10), (0.1, 10), seed=7)
    assert a == geo.random_disks(5, (0.1, 10), (0.1, 10), seed=7)
    assert all(r < min(x, t) for x, t, r in a)


def test_calibration_table_csv():
    rows = geo.calibration_table([2.0], [1.0])
    assert rows[0]["delta"] < 1e-12
    lines = geo.calibration_csv(rows).splitlines()
    assert lines[0] == "lambda,r,N,pi_legendre,delta"
    assert lines[1].startswith("2,1,4.84")
