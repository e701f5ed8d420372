"""Carleson norms of measures on the quadrant, BMO_o norms on (0, inf) and the
weighted-L1 admissibility checks.

Carleson boxes are I x (0, |I|) with I = (a, b).  The supremum over all
intervals is replaced by a dyadic family: a in {0} U {2^j}, |I| = 2^k.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .hankel import GridFunction
from .quadrature import gauss_legendre, integrate, QuadratureSpec
from .specfun import BesselOrder

__all__ = [
    "CarlesonBox",
    "BoxFamily",
    "GridDensity",
    "CarlesonResult",
    "carleson_norm",
    "box_mass",
    "bmo_o_norm",
    "interval_family",
    "size_averages",
    "power_fit",
    "weighted_l1_check",
    "interval_energy_functional",
    "carleson_report_csv",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CarlesonBox:
    a: float
    b: float
    mass: float = 0.0

    def __post_init__(self):
        if not (self.a >= 0 and self.b > self.a):
            raise ValueError(f"need 0 <= a < b, got ({self.a}, {self.b})")
        if self.mass < 0:
            raise ValueError("mass must be >= 0")

    @property
    def height(self) -> float:
        return self.b - self.a

    @property
    def ratio(self) -> float:
        return self.mass / self.height


@dataclass(frozen=True)
class BoxFamily:
    """Intervals (a, a + 2^k) with a in {0} U {2^j} (``per_octave`` points per factor 2)."""

    j_range: tuple = (-6, 6)
    k_range: tuple = (-6, 6)
    per_octave: int = 1

    def __post_init__(self):
        if self.j_range[0] > self.j_range[1] or self.k_range[0] > self.k_range[1]:
            raise ValueError("empty window")
        if self.per_octave < 1:
            raise ValueError("per_octave must be >= 1")

    def _powers(self, rng) -> np.ndarray:
        m = self.per_octave
        return 2.0 ** (np.arange(rng[0] * m, rng[1] * m + 1) / m)

    def intervals(self) -> list[tuple[float, float]]:
        starts = np.concatenate([[0.0], self._powers(self.j_range)])
        return [(float(a), float(a + L)) for a in starts for L in self._powers(self.k_range)]

    def boxes(self) -> list[CarlesonBox]:
        return [CarlesonBox(a, b) for a, b in self.intervals()]

    def refined(self) -> "BoxFamily":
        return BoxFamily(self.j_range, self.k_range, 2 * self.per_octave)

    def largest_length(self) -> float:
        return 2.0 ** self.k_range[1]


@dataclass
class GridDensity:
    """A density d(x, t) sampled on a product grid (rows are x).

    ``t0_model`` sets the contribution of (0, t_min): "linear" assumes d ~ t
    there (gradient measures of bounded smooth data), "constant" assumes d is
    flat, "none" drops it.
    """

    x_nodes: np.ndarray
    t_nodes: np.ndarray
    values: np.ndarray
    t0_model: str = "linear"

    def __post_init__(self):
        self.x_nodes = np.asarray(self.x_nodes, dtype=float)
        self.t_nodes = np.asarray(self.t_nodes, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.x_nodes), len(self.t_nodes)):
            raise ValueError("density shape does not match the grid")
        if np.any(self.values < 0):
            raise ValueError("density must be nonnegative")
        if self.t0_model not in ("linear", "constant", "none"):
            raise ValueError(f"unknown t0_model {self.t0_model!r}")

    def scaled(self, c: float) -> "GridDensity":
        return GridDensity(self.x_nodes, self.t_nodes, c * self.values, self.t0_model)


def _partial_trapezoid(nodes: np.ndarray, vals: np.ndarray, upper: float) -> np.ndarray:
    """Trapezoid integral over nodes[0]..upper along the last axis (linear interpolation at upper)."""
    k = int(np.searchsorted(nodes, upper, side="right"))
    total = np.zeros(vals.shape[:-1])
    if k >= 2:
        d = np.diff(nodes[:k])
        total = total + 0.5 * ((vals[..., : k - 1] + vals[..., 1:k]) * d).sum(axis=-1)
    if 1 <= k < len(nodes) and upper > nodes[k - 1]:
        x0, x1 = nodes[k - 1], nodes[k]
        w = (upper - x0) / (x1 - x0)
        v_up = vals[..., k - 1] * (1 - w) + vals[..., k] * w
        total = total + 0.5 * (vals[..., k - 1] + v_up) * (upper - x0)
    return total


def _t_column(dens: GridDensity, height: float) -> np.ndarray:
    t = dens.t_nodes
    body = _partial_trapezoid(t, dens.values, height)
    first = dens.values[:, 0]
    if dens.t0_model == "linear":
        body = body + 0.5 * first * t[0]
    elif dens.t0_model == "constant":
        body = body + first * t[0]
    return body


def _x_integral(x: np.ndarray, col: np.ndarray, a: float, b: float) -> float:
    total = 0.0
    if a < x[0]:
        # constant extrapolation towards x = 0
        total += col[0] * (min(b, x[0]) - a)
        a = x[0]
    if b > a:
        up = _partial_trapezoid(x, col, b)
        lo = _partial_trapezoid(x, col, a) if a > x[0] else 0.0
        total += float(up - lo)
    return total


def box_mass(density, a: float, b: float, n: int = 12) -> float:
    """mu((a, b) x (0, b - a)) for a GridDensity or a callable d(x, t)."""
    L = b - a
    if isinstance(density, GridDensity):
        col = _t_column(density, L)
        return _x_integral(density.x_nodes, col, a, b)
    xs, wx = _graded_nodes(a, b, n, graded=(a == 0))
    ts, wt = _graded_nodes(0.0, L, n, graded=True)
    X, T = np.meshgrid(xs, ts, indexing="ij")
    return float(wx @ np.asarray(density(X, T), dtype=float) @ wt)


def _graded_nodes(a: float, b: float, n: int, graded: bool, levels: int = 12) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre on (a, b), geometrically graded towards a when ``graded``."""
    if graded:
        edges = np.concatenate([[a], a + (b - a) * 0.25 ** np.arange(levels, -1, -1)])
    else:
        edges = np.linspace(a, b, 5)
    gx, gw = gauss_legendre(n)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    return ((left + right) / 2 + half * gx).ravel(), (half * gw).ravel()


@dataclass
class CarlesonResult:
    norm: float
    argmax: CarlesonBox | None
    boxes: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def to_json(self) -> dict:
        arg = None if self.argmax is None else [self.argmax.a, self.argmax.b]
        return {"norm": self.norm, "argmax_box": arg, "n_boxes": len(self.boxes),
                "n_skipped": len(self.skipped)}


def carleson_norm(density, family: BoxFamily | Iterable[tuple[float, float]]) -> CarlesonResult:
    """max over the family of mu(I x (0,|I|)) / |I|.

    Boxes that do not fit inside a GridDensity's grid are skipped, each with a
    logged warning.
    """
    intervals = family.intervals() if isinstance(family, BoxFamily) else list(family)
    boxes, skipped = [], []
    for a, b in intervals:
        if isinstance(density, GridDensity):
            if b > density.x_nodes[-1] * (1 + 1e-12) or b - a > density.t_nodes[-1] * (1 + 1e-12):
                log.warning("Carleson box (%g, %g) exceeds the grid; skipped", a, b)
                skipped.append((a, b))
                continue
        boxes.append(CarlesonBox(a, b, max(box_mass(density, a, b), 0.0)))
    if not boxes:
        return CarlesonResult(0.0, None, boxes, skipped)
    best = max(boxes, key=lambda bx: bx.ratio)
    return CarlesonResult(best.ratio, best, boxes, skipped)


def carleson_report_csv(result: CarlesonResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["a", "b", "mass", "ratio"])
    for bx in result.boxes:
        w.writerow([f"{bx.a:.12g}", f"{bx.b:.12g}", f"{bx.mass:.12g}", f"{bx.ratio:.12g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# BMO_o

def interval_family(j_range=(-6, 6), k_range=(-6, 6)) -> list[tuple[float, float]]:
    return BoxFamily(j_range, k_range).intervals()


def _interval_rule(f: GridFunction, a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss rule on (a, b) split at f's jumps, geometric towards the left end."""
    cuts = [a, b] + [p for p in f.breakpoints if a < p < b]
    cuts += [p for p in f.support if a < p < b]
    lo = max(a, b * 2.0 ** -50) if a == 0 else a
    if b / lo > 2:
        cuts += list(np.geomspace(lo, b, int(math.ceil(math.log2(b / lo))) + 1)[1:-1])
        if a == 0:
            cuts.append(lo)
    edges = np.unique(np.array(cuts, dtype=float))
    gx, gw = gauss_legendre(n)
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    return ((left + right) / 2 + half * gx).ravel(), (half * gw).ravel()


def _averages(f: GridFunction, a: float, b: float, n: int) -> tuple[float, float]:
    """(oscillation, size) with p = 2 on I = (a, b)."""
    y, w = _interval_rule(f, a, b, n)
    v = f(y)
    length = b - a
    mean = float(w @ v) / length
    osc = math.sqrt(max(float(w @ (v - mean) ** 2) / length, 0.0))
    size = math.sqrt(max(float(w @ v ** 2) / length, 0.0))
    return osc, size


def size_averages(f: GridFunction, bs, n: int = 16) -> np.ndarray:
    """(1/b int_0^b |f|^2)^(1/2) for each b."""
    return np.array([_averages(f, 0.0, float(b), n)[1] for b in bs])


def bmo_o_norm(f: GridFunction, intervals=None, *, n: int = 8, drift_limit: float = 0.10) -> dict:
    """sup of the oscillation averages over (a, b) and the size averages over (0, b).

    The estimate is repeated with twice the Gauss points per panel; a relative
    change beyond ``drift_limit`` flags the estimate unstable.
    """
    if intervals is None:
        intervals = interval_family()
    if isinstance(intervals, BoxFamily):
        intervals = intervals.intervals()
    best = {"osc": (0.0, None), "size": (0.0, None)}
    fine_best = 0.0
    for a, b in intervals:
        osc = _averages(f, a, b, n)[0]
        fine_best = max(fine_best, _averages(f, a, b, 2 * n)[0])
        if osc > best["osc"][0]:
            best["osc"] = (osc, (a, b))
    # the size condition uses (0, b) for every right end b of the family
    for b in sorted({b for _, b in intervals}):
        size = _averages(f, 0.0, b, n)[1]
        fine_best = max(fine_best, _averages(f, 0.0, b, 2 * n)[1])
        if size > best["size"][0]:
            best["size"] = (size, (0.0, b))
    norm = max(best["osc"][0], best["size"][0])
    drift = abs(fine_best - norm) / norm if norm > 0 else 0.0
    return {"norm": norm, "oscillation": best["osc"][0], "oscillation_interval": best["osc"][1],
            "size": best["size"][0], "size_interval": best["size"][1],
            "drift": drift, "unstable": drift > drift_limit}


def power_fit(x, y) -> tuple[float, float]:
    """Least-squares (exponent, prefactor) of y ~ c x^p."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    p, c = np.polyfit(lx, ly, 1)
    return float(p), float(math.exp(c))


# ---------------------------------------------------------------------------
# admissibility

def _doubling_integral(g: Callable, f: GridFunction, max_doublings: int = 80,
                       stop_rel: float = 1e-3) -> dict:
    spec = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-10)
    hints = [p for p in (*f.breakpoints, *f.support) if 0 < p < math.inf]

    def slab(lo, hi):
        inner = tuple(p for p in hints if lo < p < hi)
        return integrate(g, lo, hi, spec.with_hints(*inner)).value

    total = slab(0.0, 1.0)
    slabs = []
    lo = 1.0
    for _ in range(max_doublings):
        if lo >= f.support[1]:
            break
        d = slab(lo, 2 * lo)
        slabs.append(d)
        total += d
        lo *= 2
        if len(slabs) >= 3 and slabs[-1] <= 1e-15 * total:
            break
    passed = True
    if len(slabs) >= 2 and slabs[-1] > 0:
        r = slabs[-1] / slabs[-2] if slabs[-2] > 0 else math.inf
        tail = slabs[-1] * r / (1 - r) if r < 1 else math.inf
        passed = tail <= stop_rel * total
    return {"pass": bool(passed and math.isfinite(total)), "value": total, "cut": lo}


def weighted_l1_check(order, f: GridFunction) -> dict:
    """Integrability of x^lam (1+x^2)^(-lam-1) f and of (1+x^2)^(-1) f.

    Each integral is accumulated over dyadic slabs; it passes when the slab
    contributions decay fast enough that the extrapolated remainder is below
    1e-3 of the total.
    """
    lam = BesselOrder.coerce(order).lam

    def power_w(x):
        x = np.asarray(x, dtype=float)
        return np.exp(lam * np.log(x) - (lam + 1) * np.log1p(x * x)) * np.abs(f(x))

    def cauchy_w(x):
        x = np.asarray(x, dtype=float)
        return np.abs(f(x)) / (1 + x * x)

    return {"power_weight": _doubling_integral(power_w, f),
            "cauchy_weight": _doubling_integral(cauchy_w, f)}


# ---------------------------------------------------------------------------

def interval_energy_functional(order, intervals, *, n: int = 8) -> list[dict]:
    """(x_J + |J|)^2 / |J|^3 int_0^|J| int_J |t D_lam P_t(1)(x)|^2 dx dt / t per interval J."""
    from .field import poisson_integral
    from .quadrature import TailPolicy

    lam = BesselOrder.coerce(order).lam
    one = GridFunction.from_callable(lambda y: np.ones_like(y), np.array([1.0]),
                                     tail=TailPolicy.power_decay(0.0), label="1")
    rows = []
    for a, b in intervals:
        L = b - a
        xs, wx = _graded_nodes(a, b, n, graded=(a == 0))
        ts, wt = _graded_nodes(0.0, L, n, graded=True)
        X, T = np.meshgrid(xs, ts, indexing="ij")
        d = poisson_integral(lam, one, X, T, ("dx",))["dx"]
        integral = float(wx @ (T * d * d) @ wt)
        xj = 0.5 * (a + b)
        rows.append({"a": a, "b": b, "integral": integral,
                     "value": (xj + L) ** 2 / L ** 3 * integral})
    return rows


def dumps_summary(obj: dict) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=float)
