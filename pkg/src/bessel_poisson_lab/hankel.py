"""Hankel transform h_lambda and the spectral form of the Bessel-Poisson semigroup.

    h_lam(F)(x) = int_0^inf sqrt(xy) J_{lam-1/2}(xy) F(y) dy

is evaluated by direct quadrature per output node (O(N^2)).  The semigroup
and its lambda-derivative follow from

    P_t(F)       =  h_lam(exp(-y t) h_lam(F))
    D_lam P_t(F) = -h_{lam+1}(y exp(-y t) h_lam(F)).
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import ConvergenceError, TailPolicy, gauss_legendre
from .specfun import BesselOrder, DomainError, bessel_j

__all__ = [
    "GridFunction",
    "gauss_grid",
    "hankel_transform",
    "SpectralSemigroup",
    "poisson_spectral",
    "dlambda_spectral",
    "MAX_OSCILLATION_PRODUCT",
]

# out_nodes * y_max beyond this is refused instead of returning degraded values
MAX_OSCILLATION_PRODUCT = 500.0


def _trapezoid_weights(nodes: np.ndarray) -> np.ndarray:
    w = np.zeros_like(nodes)
    if len(nodes) > 1:
        d = np.diff(nodes)
        w[:-1] += 0.5 * d
        w[1:] += 0.5 * d
    return w


@dataclass
class GridFunction:
    """Samples of a real function on a strictly increasing grid in (0, inf).

    ``func``, when present, is the exact callable the samples came from and is
    used for off-grid evaluation; otherwise a cubic spline in log(y) is used,
    with ``y**head_exponent`` extrapolation below the grid and the tail policy
    above it.  ``breakpoints`` lists jump locations, ``support`` the closed
    hull of the support.
    """

    nodes: np.ndarray
    values: np.ndarray
    weights: np.ndarray | None = None
    tail: TailPolicy = field(default_factory=lambda: TailPolicy.power_decay(0.0))
    func: Callable | None = None
    breakpoints: tuple = ()
    support: tuple = (0.0, math.inf)
    head_exponent: float = 0.0
    feature_window: tuple | None = None
    label: str = ""

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.nodes.ndim != 1 or self.nodes.shape != self.values.shape:
            raise ValueError("nodes and values must be 1-d arrays of equal length")
        if self.nodes.size == 0:
            raise ValueError("GridFunction needs at least one node")
        if np.any(self.nodes <= 0) or np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing and positive")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("values must be finite")
        if self.weights is None:
            self.weights = _trapezoid_weights(self.nodes)
        else:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.nodes.shape:
                raise ValueError("weights must match nodes")
        self.breakpoints = tuple(sorted(float(b) for b in self.breakpoints))
        self.support = (float(self.support[0]), float(self.support[1]))
        self._spline = None

    # -- construction -----------------------------------------------------
    @classmethod
    def from_callable(cls, func: Callable, nodes, weights=None, **kw) -> "GridFunction":
        nodes = np.asarray(nodes, dtype=float)
        return cls(nodes, np.asarray(func(nodes), dtype=float) * np.ones_like(nodes),
                   weights, func=func, **kw)

    @classmethod
    def zeros(cls, nodes, weights=None) -> "GridFunction":
        return cls.from_callable(lambda y: np.zeros_like(np.asarray(y, dtype=float)), nodes, weights,
                                 tail=TailPolicy.truncate_at(float(np.max(nodes))), label="zero")

    def with_values(self, values, label: str | None = None) -> "GridFunction":
        return replace(self, values=np.asarray(values, dtype=float), func=None,
                       label=self.label if label is None else label)

    # -- evaluation -------------------------------------------------------
    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(y), dtype=float) * np.ones_like(y)
        return self._interpolate(y)

    def _interpolate(self, y: np.ndarray) -> np.ndarray:
        nodes, vals = self.nodes, self.values
        if nodes.size == 1:
            return np.full_like(y, vals[0])
        if self._spline is None:
            self._spline = CubicSpline(np.log(nodes), vals)
        out = np.empty_like(y)
        lo = y < nodes[0]
        hi = y > nodes[-1]
        mid = ~(lo | hi)
        if mid.any():
            out[mid] = self._spline(np.log(y[mid]))
        if lo.any():
            out[lo] = vals[0] * (y[lo] / nodes[0]) ** self.head_exponent
        if hi.any():
            yy = y[hi]
            tail = self.tail
            if tail.kind == "truncate":
                out[hi] = np.where(yy <= tail.point, vals[-1], 0.0)
            elif tail.kind == "exponential":
                out[hi] = vals[-1] * np.exp(-tail.rate * (yy - nodes[-1]))
            else:
                out[hi] = vals[-1] * (yy / nodes[-1]) ** (-tail.exponent)
        return out

    # -- norms ------------------------------------------------------------
    def l2_norm(self) -> float:
        return math.sqrt(float(self.weights @ (self.values ** 2)))

    def weighted_integral(self, g: Callable | None = None) -> float:
        vals = self.values if g is None else self.values * g(self.nodes)
        return float(self.weights @ vals)

    # -- serialisation ----------------------------------------------------
    def to_csv(self) -> str:
        meta = {"label": self.label, "tail": self.tail.to_dict(),
                "support": list(self.support), "breakpoints": list(self.breakpoints),
                "head_exponent": self.head_exponent}
        buf = io.StringIO()
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["node", "value"])
        for n, v in zip(self.nodes, self.values):
            w.writerow([repr(float(n)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "GridFunction":
        lines = text.splitlines()
        meta = {}
        if lines and lines[0].startswith("#"):
            meta = json.loads(lines[0][1:])
            lines = lines[1:]
        rows = list(csv.reader(lines))
        body = rows[1:] if rows and rows[0] == ["node", "value"] else rows
        nodes = [float(r[0]) for r in body]
        vals = [float(r[1]) for r in body]
        tail = TailPolicy(**meta["tail"]) if "tail" in meta else TailPolicy.power_decay(0.0)
        return cls(np.array(nodes), np.array(vals), tail=tail,
                   support=tuple(meta.get("support", (0.0, math.inf))),
                   breakpoints=tuple(meta.get("breakpoints", ())),
                   head_exponent=meta.get("head_exponent", 0.0),
                   label=meta.get("label", ""))


def gauss_grid(upper: float, n: int, lower: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on (lower, upper)."""
    x, w = gauss_legendre(n)
    half = 0.5 * (upper - lower)
    return lower + half * (x + 1.0), half * w


def _kernel_matrix(nu: float, out_nodes: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    prod = np.multiply.outer(out_nodes, nodes)
    return np.sqrt(prod) * bessel_j(nu, prod)


def _check_tail(F: GridFunction) -> None:
    last = float(F.nodes[-1])
    if F.tail.kind == "truncate" and F.tail.point <= last:
        return
    scale = max(F.l2_norm(), 1e-300)
    bound = F.tail.tail_bound(float(F.values[-1]), last)
    # sqrt(xy) J(xy) is bounded by 1, so the dropped part is at most the L1 tail
    if not bound <= 1e-8 * scale:
        raise ConvergenceError(
            f"tail policy {F.tail.kind!r} leaves an estimated {bound:.3g} beyond y={last:g}; "
            "extend the grid or use a faster-decaying input")


def _check_oscillation(out_nodes: np.ndarray, nodes: np.ndarray) -> None:
    prod = float(np.max(out_nodes)) * float(np.max(nodes))
    if prod > MAX_OSCILLATION_PRODUCT:
        raise ConvergenceError(
            f"max(out_nodes) * max(nodes) = {prod:g} exceeds {MAX_OSCILLATION_PRODUCT:g}; "
            "direct quadrature of the oscillatory kernel is not trusted there")


def hankel_transform(order, F: GridFunction, out_nodes, out_weights=None, *,
                     shift: int = 0) -> GridFunction:
    """h_{lambda+shift}(F) sampled at ``out_nodes`` (shift=1 gives h_{lambda+1})."""
    lam = BesselOrder.coerce(order).lam + shift
    out_nodes = np.asarray(out_nodes, dtype=float)
    _check_tail(F)
    _check_oscillation(out_nodes, F.nodes)
    mat = _kernel_matrix(lam - 0.5, out_nodes, F.nodes)
    vals = mat @ (F.weights * F.values)
    tail = TailPolicy.truncate_at(float(out_nodes[-1]))
    return GridFunction(out_nodes, vals, out_weights, tail=tail, label=f"h_{lam:g}({F.label})")


class SpectralSemigroup:
    """Precomputed transforms for evaluating P_t(F) and D_lam P_t(F) at many t.

    The spectral variable is sampled on ``k_nodes``/``k_weights`` (by default
    F's own grid, which suits inputs whose transform decays like F).
    """

    def __init__(self, order, F: GridFunction, out_nodes, k_nodes=None, k_weights=None):
        self.order = BesselOrder.coerce(order)
        lam = self.order.lam
        self.out_nodes = np.asarray(out_nodes, dtype=float)
        if k_nodes is None:
            k_nodes, k_weights = F.nodes, F.weights
        self.k_nodes = np.asarray(k_nodes, dtype=float)
        self.k_weights = (np.asarray(k_weights, dtype=float) if k_weights is not None
                          else _trapezoid_weights(self.k_nodes))
        hat = hankel_transform(lam, F, self.k_nodes, self.k_weights)
        self.hat = hat.values
        _check_oscillation(self.out_nodes, self.k_nodes)
        self._m0 = _kernel_matrix(lam - 0.5, self.out_nodes, self.k_nodes) * self.k_weights
        self._m1 = None
        self.label = F.label

    def poisson(self, t: float) -> np.ndarray:
        return self._m0 @ (np.exp(-self.k_nodes * t) * self.hat)

    def dlambda(self, t: float) -> np.ndarray:
        if self._m1 is None:
            self._m1 = (_kernel_matrix(self.order.lam + 0.5, self.out_nodes, self.k_nodes)
                        * self.k_weights)
        return -(self._m1 @ (self.k_nodes * np.exp(-self.k_nodes * t) * self.hat))

    def dt(self, t: float) -> np.ndarray:
        return -(self._m0 @ (self.k_nodes * np.exp(-self.k_nodes * t) * self.hat))


def _check_t(t: float) -> float:
    t = float(t)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    return t


def poisson_spectral(order, f: GridFunction, t: float, out_nodes, out_weights=None) -> GridFunction:
    """P_t^lambda(f) at ``out_nodes`` via h_lam(exp(-yt) h_lam f)."""
    t = _check_t(t)
    sg = SpectralSemigroup(order, f, out_nodes)
    return GridFunction(sg.out_nodes, sg.poisson(t), out_weights,
                        tail=TailPolicy.truncate_at(float(sg.out_nodes[-1])),
                        label=f"P_{t:g}({f.label})")


def dlambda_spectral(order, f: GridFunction, t: float, out_nodes, out_weights=None) -> GridFunction:
    """D_{lambda,x} P_t^lambda(f) at ``out_nodes`` via -h_{lam+1}(y exp(-yt) h_lam f)."""
    t = _check_t(t)
    sg = SpectralSemigroup(order, f, out_nodes)
    return GridFunction(sg.out_nodes, sg.dlambda(t), out_weights,
                        tail=TailPolicy.truncate_at(float(sg.out_nodes[-1])),
                        label=f"D P_{t:g}({f.label})")
