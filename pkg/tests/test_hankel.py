import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bessel_poisson_lab.field import poisson_integral
from bessel_poisson_lab.hankel import (MAX_OSCILLATION_PRODUCT, GridFunction, SpectralSemigroup, dlambda_spectral,
                                       gauss_grid, hankel_transform, poisson_spectral)
from bessel_poisson_lab.quadrature import ConvergenceError, TailPolicy
from bessel_poisson_lab.specfun import DomainError


def gaussian(lam, n=512, upper=14.0):
    y, w = gauss_grid(upper, n)
    return GridFunction.from_callable(lambda v: v ** lam * np.exp(-v * v / 2), y, w,
                                      tail=TailPolicy.exponential_decay(1.0), label="gauss")


@pytest.mark.parametrize("lam", [1.2, 2.0, 3.5])
def test_gaussian_is_self_dual(lam):
    F = gaussian(lam)
    H = hankel_transform(lam, F, F.nodes, F.weights)
    assert np.max(np.abs(H.values - F.values)) < 1e-12


def test_shifted_order_transform():
    # h_{lam+1}(y^(lam+1) e^(-y^2/2)) is again self-dual
    lam = 2.0
    y, w = gauss_grid(14.0, 512)
    F = GridFunction.from_callable(lambda v: v ** (lam + 1) * np.exp(-v * v / 2), y, w,
                                   tail=TailPolicy.exponential_decay(1.0))
    H = hankel_transform(lam, F, y, w, shift=1)
    assert np.max(np.abs(H.values - F.values)) < 1e-12


def test_isometry_and_involution():
    lam = 2.0
    y, w = gauss_grid(14.0, 512)
    F = GridFunction.from_callable(lambda v: v ** (lam + 2) * np.exp(-v * v), y, w,
                                   tail=TailPolicy.exponential_decay(1.0))
    H = hankel_transform(lam, F, y, w)
    assert H.l2_norm() / F.l2_norm() == pytest.approx(1.0, abs=1e-10)
    HH = hankel_transform(lam, H, y, w)
    assert np.max(np.abs(HH.values - F.values)) < 1e-10


def test_zero_input():
    y, w = gauss_grid(10.0, 64)
    Z = GridFunction.zeros(y, w)
    assert np.all(hankel_transform(2.0, Z, y, w).values == 0.0)


def test_oscillation_guard():
    y, w = gauss_grid(30.0, 64)
    F = GridFunction.from_callable(lambda v: np.exp(-v * v), y, w, tail=TailPolicy.exponential_decay(1.0))
    with pytest.raises(ConvergenceError, match="exceeds"):
        hankel_transform(2.0, F, [MAX_OSCILLATION_PRODUCT / 30.0 * 1.01])


def test_slow_tail_rejected():
    y, w = gauss_grid(10.0, 64)
    F = GridFunction.from_callable(lambda v: 1 / (1 + v * v), y, w, tail=TailPolicy.power_decay(2.0))
    with pytest.raises(ConvergenceError, match="tail"):
        hankel_transform(2.0, F, y)


@pytest.mark.parametrize("t", [0.2, 1.0, 3.0])
def test_spectral_semigroup_matches_direct(t):
    lam = 2.0
    F = gaussian(lam, n=1024)
    xo = np.array([0.3, 1.0, 2.5, 6.0])
    sg = SpectralSemigroup(lam, F, xo)
    d = poisson_integral(lam, F, xo, t, ("u", "dt", "dx"))
    assert np.allclose(sg.poisson(t), d["u"], rtol=1e-8, atol=0)
    assert np.allclose(sg.dt(t), d["dt"], rtol=1e-8, atol=1e-12)
    assert np.allclose(sg.dlambda(t), d["dx"], rtol=1e-8, atol=1e-12)


def test_spectral_wrappers():
    F = gaussian(2.0, n=256)
    xo = np.array([0.5, 1.0, 2.0])
    u = poisson_spectral(2.0, F, 0.5, xo)
    d = dlambda_spectral(2.0, F, 0.5, xo)
    sg = SpectralSemigroup(2.0, F, xo)
    assert np.array_equal(u.values, sg.poisson(0.5))
    assert np.array_equal(d.values, sg.dlambda(0.5))
    with pytest.raises(DomainError):
        poisson_spectral(2.0, F, 0.0, xo)


def test_gridfunction_validation():
    with pytest.raises(ValueError):
        GridFunction(np.array([1.0, 0.5]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        GridFunction(np.array([0.0, 1.0]), np.array([1.0, 2.0]))
    with pytest.raises(ValueError):
        GridFunction(np.array([1.0, 2.0]), np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        GridFunction(np.array([1.0, 2.0]), np.array([1.0]))


def test_gridfunction_interpolation_extrapolation():
    x = np.geomspace(0.1, 10, 200)
    g = GridFunction(x, x ** 2 / (1 + x), tail=TailPolicy.power_decay(-1.0), head_exponent=2.0)
    inside = np.array([0.5, 3.3])
    assert np.allclose(g(inside), inside ** 2 / (1 + inside), rtol=1e-5)
    # below the grid: y^2 scaling from the first node; above: y^1 growth from the last
    assert g(np.array([0.01]))[0] == pytest.approx(g.values[0] * 0.01, rel=1e-12)
    assert g(np.array([100.0]))[0] == pytest.approx(g.values[-1] * 10, rel=1e-12)


def test_trapezoid_weights_default():
    g = GridFunction(np.array([1.0, 2.0, 4.0]), np.ones(3))
    assert g.weighted_integral() == pytest.approx(3.0)
    assert g.weighted_integral(lambda y: y) == pytest.approx(7.5)


finite = st.floats(-1e6, 1e6, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.floats(1e-6, 1e6), finite), min_size=1, max_size=30),
       st.sampled_from([TailPolicy.power_decay(2.5), TailPolicy.exponential_decay(0.3),
                        TailPolicy.truncate_at(7.0)]))
def test_csv_roundtrip(pairs, tail):
    pairs = sorted(dict(pairs).items())
    nodes = np.array([p[0] for p in pairs])
    vals = np.array([p[1] for p in pairs])
    g = GridFunction(nodes, vals, tail=tail, breakpoints=(1.0, 2.0), support=(0.5, 9.0),
                     head_exponent=1.5, label="roundtrip")
    back = GridFunction.from_csv(g.to_csv())
    assert np.array_equal(back.nodes, g.nodes)
    assert np.array_equal(back.values, g.values)
    assert back.tail == g.tail
    assert (back.breakpoints, back.support, back.head_exponent, back.label) == \
        (g.breakpoints, g.support, g.head_exponent, g.label)


def test_csv_header_carries_metadata():
    g = GridFunction(np.array([1.0, 2.0]), np.array([3.0, 4.0]), tail=TailPolicy.power_decay(2.0))
    lines = g.to_csv().splitlines()
    assert lines[0].startswith("# ") and '"kind": "power"' in lines[0]
    assert lines[1] == "node,value"
    assert lines[2] == "1.0,3.0"
