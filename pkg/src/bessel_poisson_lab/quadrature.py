"""Adaptive one-dimensional quadrature.

Globally adaptive Gauss-Kronrod (7/15) bisection on finite intervals, a
truncation-doubling driver for half-lines, and fixed Gauss rules shared by the
vectorised kernel code.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy.special import roots_jacobi

__all__ = [
    "QuadratureSpec",
    "TailPolicy",
    "QuadratureResult",
    "ConvergenceError",
    "IntegrandError",
    "integrate",
    "integrate_semi_infinite",
    "gauss_legendre",
    "gauss_jacobi",
    "composite_gauss_legendre",
]


class ConvergenceError(RuntimeError):
    """Quadrature did not reach its tolerance; carries the best estimate."""

    def __init__(self, message: str, value: float = math.nan, error: float = math.inf):
        super().__init__(message)
        self.value = value
        self.error = error


class IntegrandError(ArithmeticError):
    """The integrand produced a non-finite value."""

    def __init__(self, message: str, location: float):
        super().__init__(message)
        self.location = location


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    max_subdivisions: int = 2000
    singularity_hints: tuple = ()

    def __post_init__(self):
        if not self.abs_tol > 0 or not self.rel_tol > 0:
            raise ValueError("abs_tol and rel_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        object.__setattr__(self, "singularity_hints", tuple(float(h) for h in self.singularity_hints))

    def with_hints(self, *hints: float) -> "QuadratureSpec":
        return QuadratureSpec(self.abs_tol, self.rel_tol, self.max_subdivisions,
                              tuple(self.singularity_hints) + tuple(hints))

    def scaled(self, factor: float) -> "QuadratureSpec":
        """Tolerances multiplied by ``factor`` (factor < 1 tightens)."""
        return QuadratureSpec(self.abs_tol * factor, self.rel_tol * factor,
                              self.max_subdivisions, self.singularity_hints)


@dataclass(frozen=True)
class TailPolicy:
    """How a function (or integrand) behaves as y -> infinity.

    kind is one of ``"power"`` (|f| ~ y**-exponent; a negative exponent means
    growth), ``"exponential"`` (|f| ~ exp(-rate*y)) or ``"truncate"`` (f == 0
    beyond ``point``).
    """

    kind: str = "power"
    exponent: float = 0.0
    rate: float = 0.0
    point: float = math.inf
    estimated_tail_bound: float = 0.0

    def __post_init__(self):
        if self.kind not in ("power", "exponential", "truncate"):
            raise ValueError(f"unknown tail kind {self.kind!r}")
        if self.kind == "exponential" and not self.rate > 0:
            raise ValueError("exponential tail needs rate > 0")
        if self.kind == "truncate" and not math.isfinite(self.point):
            raise ValueError("truncate tail needs a finite point")
        if self.estimated_tail_bound < 0:
            raise ValueError("estimated_tail_bound must be >= 0")

    @classmethod
    def power_decay(cls, exponent: float) -> "TailPolicy":
        return cls("power", exponent=float(exponent))

    @classmethod
    def exponential_decay(cls, rate: float) -> "TailPolicy":
        return cls("exponential", rate=float(rate))

    @classmethod
    def truncate_at(cls, point: float) -> "TailPolicy":
        return cls("truncate", point=float(point))

    def growth_exponent(self) -> float:
        """Exponent beta with |f(y)| = O(y**beta); -inf for faster-than-power decay."""
        if self.kind == "power":
            return -self.exponent
        return -math.inf

    def tail_bound(self, f_at_cut: float, cut: float) -> float:
        """Crude bound for the integral of |f| over (cut, inf) from the value at cut."""
        f_at_cut = abs(f_at_cut)
        if self.kind == "truncate":
            return 0.0 if cut >= self.point else math.inf
        if self.kind == "exponential":
            return f_at_cut / self.rate
        if self.exponent <= 1.0:
            return math.inf
        return f_at_cut * cut / (self.exponent - 1.0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "exponent": self.exponent, "rate": self.rate,
                "point": self.point, "estimated_tail_bound": self.estimated_tail_bound}


@dataclass
class QuadratureResult:
    value: float
    error: float
    n_intervals: int = 0
    tail_bound: float = 0.0

    def __iter__(self):
        yield self.value
        yield self.error


# Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
_KW = np.concatenate([_WGK[:-1], _WGK[::-1]])
# Gauss nodes are the odd-indexed Kronrod abscissae
_GW = np.zeros(15)
_GW[[1, 3, 5, 13, 11, 9]] = [_WG[0], _WG[1], _WG[2], _WG[0], _WG[1], _WG[2]]
_GW[7] = _WG[3]


def _gk15(f: Callable, a: float, b: float) -> tuple[float, float]:
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    x = c + h * _NODES
    y = np.asarray(f(x), dtype=float)
    if y.shape != x.shape:
        y = np.broadcast_to(y, x.shape)
    if not np.all(np.isfinite(y)):
        bad = x[~np.isfinite(y)][0]
        raise IntegrandError(f"integrand not finite at {bad!r}", float(bad))
    k = h * float(_KW @ y)
    g = h * float(_GW @ y)
    err = abs(k - g)
    # QUADPACK-style error rescaling
    resasc = h * float(_KW @ np.abs(y - k / (2 * h))) if h > 0 else 0.0
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return k, err


def _vectorize(f: Callable) -> Callable:
    def wrapped(x):
        try:
            out = f(x)
            out = np.asarray(out, dtype=float)
            if out.shape == np.shape(x) or out.ndim == 0:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(f(float(xi))) for xi in x])
    return wrapped


def integrate(f: Callable, a: float, b: float, spec: QuadratureSpec | None = None) -> QuadratureResult:
    """Adaptive Gauss-Kronrod integral of ``f`` over [a, b].

    ``f`` should accept a numpy array; scalar-only callables are tolerated.
    Interior singularity hints become initial breakpoints so bisection starts
    refining there. Raises :class:`ConvergenceError` with the best estimate
    when the subdivision budget runs out.
    """
    spec = spec or QuadratureSpec()
    a, b = float(a), float(b)
    if not a < b:
        if a == b:
            return QuadratureResult(0.0, 0.0, 0)
        raise ValueError(f"integrate requires a < b, got ({a}, {b})")
    fv = _vectorize(f)
    pts = sorted({a, b, *(h for h in spec.singularity_hints if a < h < b)})
    heap = []
    total = 0.0
    total_err = 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        v, e = _gk15(fv, lo, hi)
        heapq.heappush(heap, (-e, lo, hi, v))
        total += v
        total_err += e
    n = len(heap)
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n >= spec.max_subdivisions:
            raise ConvergenceError(
                f"max_subdivisions={spec.max_subdivisions} exhausted on [{a}, {b}]",
                total, total_err)
        neg_e, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            # interval can no longer be split in floating point
            raise ConvergenceError(f"interval collapsed near {lo!r}", total, total_err)
        v1, e1 = _gk15(fv, lo, mid)
        v2, e2 = _gk15(fv, mid, hi)
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_e
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        n += 1
    # re-sum to shed accumulated cancellation in the running total
    total = math.fsum(item[3] for item in heap)
    total_err = math.fsum(-item[0] for item in heap)
    return QuadratureResult(total, total_err, n)


def _initial_cut(a: float, tail: TailPolicy) -> float:
    if tail.kind == "truncate":
        return tail.point
    if tail.kind == "exponential":
        return a + 40.0 / tail.rate
    return max(2.0 * abs(a), abs(a) + 10.0)


def integrate_semi_infinite(f: Callable, a: float, tail: TailPolicy,
                            spec: QuadratureSpec | None = None,
                            max_doublings: int = 40) -> QuadratureResult:
    """Integral of ``f`` over (a, inf) by truncation with cutoff doubling.

    The cutoff is doubled (from a - or the tail policy's natural scale) until
    the slab (T, 2T) contributes at most 10 * abs_tol; the tail policy's bound
    for the remainder beyond the final cutoff is added to the error budget.
    """
    spec = spec or QuadratureSpec()
    a = float(a)
    if tail.kind == "truncate":
        if tail.point <= a:
            return QuadratureResult(0.0, 0.0, 0)
        res = integrate(f, a, tail.point, spec)
        return QuadratureResult(res.value, res.error, res.n_intervals, 0.0)
    cut = _initial_cut(a, tail)
    head = integrate(f, a, cut, spec)
    value, error, n = head.value, head.error, head.n_intervals
    for _ in range(max_doublings):
        new_cut = a + 2.0 * (cut - a)
        slab = integrate(f, cut, new_cut, spec)
        value += slab.value
        error += slab.error
        n += slab.n_intervals
        cut = new_cut
        if abs(slab.value) <= 10.0 * spec.abs_tol:
            fv = _vectorize(f)
            f_cut = float(np.asarray(fv(np.array([cut])))[0])
            tb = tail.tail_bound(f_cut, cut) + tail.estimated_tail_bound
            if math.isfinite(tb):
                return QuadratureResult(value, error + tb, n, tb)
    raise ConvergenceError(f"tail did not settle after {max_doublings} cutoff doublings "
                           f"(last cutoff {cut:g})", value, error)


@lru_cache(maxsize=64)
def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


@lru_cache(maxsize=64)
def gauss_jacobi(n: int, alpha: float, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for weight (1-x)**alpha (1+x)**beta on [-1, 1]."""
    x, w = roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def composite_gauss_legendre(edges: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite rule over panels given by ``edges`` along the last axis.

    ``edges`` has shape (..., P+1); returns nodes and weights of shape (..., P*n).
    """
    edges = np.asarray(edges, dtype=float)
    x, w = gauss_legendre(n)
    lo = edges[..., :-1, None]
    hi = edges[..., 1:, None]
    half = 0.5 * (hi - lo)
    nodes = (lo + hi) * 0.5 + half * x
    weights = half * w
    shape = edges.shape[:-1] + (-1,)
    return nodes.reshape(shape), weights.reshape(shape)


def hint_list(points: Sequence[float]) -> tuple:
    return tuple(float(p) for p in points if math.isfinite(p))
