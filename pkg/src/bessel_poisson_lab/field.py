"""The solution field u = P_t(f) on a quadrant grid, its lambda-gradient and
the Littlewood-Paley g-function.

Direct evaluation integrates f against the kernels in the variable psi with
y = x + t sinh(psi).  In psi the Cauchy core of the kernel has width O(1)
whatever the ratio x/t, and power tails y**-k become exponentials.  The psi
line is cut at

* a uniform mesh of width ``psi_width``,
* the jumps and support ends of f,
* a geometric mesh over f's feature window (so that structure of f on
  scales much finer than t is resolved),
* a geometrically graded mesh towards y = 0, where the integrand carries an
  algebraic factor y**lam,

and each panel gets an n-point Gauss-Legendre rule.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .hankel import GridFunction, SpectralSemigroup, gauss_grid
from .kernels import kernel_arrays
from .quadrature import TailPolicy, gauss_legendre
from .specfun import BesselOrder, DomainError

__all__ = [
    "poisson_integral",
    "SolutionField",
    "build_field",
    "geometric_grid",
    "slice_function",
    "semigroup_check",
    "g_function",
    "g_norm_squared",
    "decay_probe",
    "finite_difference_orders",
]

log = logging.getLogger(__name__)

_LAYER_KEYS = {"u": "p", "dt": "dt", "dx": "dx"}
_TAIL_DECADES = 32.0  # exp(-32) ~ 1e-14 relative truncation of the psi tail
_MAX_CHUNK = 3_000_000


def geometric_grid(lo: float, hi: float, n: int) -> np.ndarray:
    if not (0 < lo < hi) or n < 2:
        raise ValueError("geometric grid needs 0 < lo < hi and n >= 2")
    return np.geomspace(lo, hi, n)


def _feature_edges(f: GridFunction, ratio: float) -> np.ndarray:
    window = f.feature_window
    if window is None and f.func is None:
        window = (f.nodes[0], f.nodes[-1])
    if window is None:
        return np.empty(0)
    lo, hi = window
    n = int(math.ceil(math.log(hi / lo) / math.log(ratio))) + 1
    return np.geomspace(lo, hi, max(n, 2))


def _upper_limit(lam: float, f: GridFunction, x: np.ndarray, t: np.ndarray) -> np.ndarray:
    lo, hi = f.support
    if math.isfinite(hi):
        return np.full_like(x, hi)
    if f.tail.kind == "truncate":
        return np.full_like(x, f.tail.point)
    beta = f.tail.growth_exponent()
    rate = lam + 1.0 - beta
    if not rate > 0:
        raise DomainError(
            f"f grows like y^{beta:g}; the Poisson integral needs growth below y^{lam + 1:g}")
    rate = min(rate, lam + 1.0)
    scale = np.maximum.reduce([x, t, np.full_like(x, 1.0),
                               np.full_like(x, max(f.breakpoints, default=0.0))])
    if f.feature_window is not None:
        scale = np.maximum(scale, f.feature_window[1])
    return scale * math.exp(_TAIL_DECADES / rate)


def _psi(y, x, t):
    return np.arcsinh((y - x) / t)


def poisson_integral(order, f: GridFunction, x, t, layers=("u",), *, n_gl: int = 10,
                     psi_width: float = 1.0, feature_ratio: float = 2 ** 0.25,
                     grading: int = 10) -> dict:
    """Direct quadrature of P_t(f), d/dt P_t(f) and D_lam P_t(f) at broadcast (x, t).

    ``layers`` selects among "u", "dt", "dx".  Returns a dict of arrays with
    the broadcast shape of x and t.
    """
    lam = BesselOrder.coerce(order).lam
    for key in layers:
        if key not in _LAYER_KEYS:
            raise ValueError(f"unknown layer {key!r}")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    shape = x.shape
    xf, tf = x.ravel(), t.ravel()
    if np.any(xf <= 0) or np.any(tf <= 0):
        raise DomainError("x and t must be positive")
    out = {k: np.empty(xf.size) for k in layers}
    if xf.size == 0:
        return {k: v.reshape(shape) for k, v in out.items()}

    lo = max(f.support[0], 0.0)
    inner = np.array([b for b in f.breakpoints if lo < b < f.support[1]])
    feats = _feature_edges(f, feature_ratio)
    fixed_y = np.concatenate([inner, feats])
    gx, gw = gauss_legendre(n_gl)
    which = tuple(_LAYER_KEYS[k] for k in layers)

    # rough panel count to size the chunks
    per_point = (fixed_y.size + grading + 80) * n_gl
    step = max(1, _MAX_CHUNK // per_point)
    for start in range(0, xf.size, step):
        sl = slice(start, start + step)
        xs, ts = xf[sl], tf[sl]
        hi = _upper_limit(lam, f, xs, ts)
        p_lo = _psi(lo, xs, ts)
        p_hi = _psi(hi, xs, ts)
        span = p_hi - p_lo
        n_uni = max(1, int(np.ceil(np.max(span) / psi_width)))
        frac = np.arange(n_uni + 1) / n_uni
        uni = p_lo[:, None] + span[:, None] * frac[None, :]
        parts = [uni]
        if fixed_y.size:
            parts.append(np.clip(_psi(fixed_y[None, :], xs[:, None], ts[:, None]),
                                 p_lo[:, None], p_hi[:, None]))
        if lo == 0.0 and grading > 0:
            first = span / n_uni
            parts.append(p_lo[:, None] + first[:, None] * 0.2 ** np.arange(1, grading + 1)[None, :])
        edges = np.sort(np.concatenate(parts, axis=1), axis=1)
        left, right = edges[:, :-1], edges[:, 1:]
        half = 0.5 * (right - left)
        psi = (0.5 * (left + right))[:, :, None] + half[:, :, None] * gx[None, None, :]
        xx = xs[:, None, None]
        tt = ts[:, None, None]
        y = xx + tt * np.sinh(psi)
        # y can round to <= 0 at the lower end of a support starting at 0
        y = np.maximum(y, np.finfo(float).tiny)
        jac = tt * np.cosh(psi) * half[:, :, None] * gw[None, None, :]
        fy = f(y) * jac
        ker = kernel_arrays(lam, xx, y, tt, which=which)
        for k in layers:
            out[k][sl] = np.einsum("ijk,ijk->i", ker[_LAYER_KEYS[k]], fy)
    return {k: v.reshape(shape) for k, v in out.items()}


@dataclass(frozen=True)
class SolutionField:
    """u, du/dt and D_lam u sampled on x_nodes x t_nodes (rows are x)."""

    lam: float
    x_nodes: np.ndarray
    t_nodes: np.ndarray
    u: np.ndarray
    du_dt: np.ndarray
    dlambda_u: np.ndarray
    source: dict = field(default_factory=dict)
    mode: str = "direct"
    f: GridFunction | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        shape = (len(self.x_nodes), len(self.t_nodes))
        for name in ("u", "du_dt", "dlambda_u"):
            if getattr(self, name).shape != shape:
                raise ValueError(f"{name} has shape {getattr(self, name).shape}, expected {shape}")
        for name in ("x_nodes", "t_nodes"):
            v = getattr(self, name)
            if np.any(v <= 0) or np.any(np.diff(v) <= 0):
                raise ValueError(f"{name} must be positive and strictly increasing")

    @property
    def order(self) -> BesselOrder:
        return BesselOrder(self.lam)

    def gradient_density(self) -> np.ndarray:
        """|t grad_lam u|^2 / t = t (|D_lam u|^2 + |du/dt|^2)."""
        return self.t_nodes[None, :] * (self.dlambda_u ** 2 + self.du_dt ** 2)

    def dt_density(self) -> np.ndarray:
        """|t du/dt|^2 / t."""
        return self.t_nodes[None, :] * self.du_dt ** 2

    # -- serialisation ----------------------------------------------------
    def _matrix_csv(self, m: np.ndarray) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x\\t"] + [repr(float(v)) for v in self.t_nodes])
        for xv, row in zip(self.x_nodes, m):
            w.writerow([repr(float(xv))] + [repr(float(v)) for v in row])
        return buf.getvalue()

    def save(self, directory, stem: str = "field") -> list[Path]:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = []
        for name in ("u", "du_dt", "dlambda_u"):
            p = d / f"{stem}_{name}.csv"
            p.write_text(self._matrix_csv(getattr(self, name)))
            paths.append(p)
        meta = {"lambda": self.lam, "mode": self.mode, "source": self.source,
                "x_nodes": [float(v) for v in self.x_nodes],
                "t_nodes": [float(v) for v in self.t_nodes]}
        p = d / f"{stem}.json"
        p.write_text(json.dumps(meta, indent=2, sort_keys=True))
        paths.append(p)
        return paths

    @classmethod
    def load(cls, directory, stem: str = "field") -> "SolutionField":
        d = Path(directory)
        meta = json.loads((d / f"{stem}.json").read_text())
        mats = {}
        for name in ("u", "du_dt", "dlambda_u"):
            rows = list(csv.reader((d / f"{stem}_{name}.csv").read_text().splitlines()))
            mats[name] = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
        return cls(meta["lambda"], np.array(meta["x_nodes"]), np.array(meta["t_nodes"]),
                   mats["u"], mats["du_dt"], mats["dlambda_u"], meta["source"], meta["mode"])


def build_field(order, f: GridFunction, x_nodes, t_nodes, mode: str = "direct", *,
                check: bool = True, **quad) -> SolutionField:
    """Fill u, du/dt and D_lam u on the product grid.

    ``mode="direct"`` integrates against the kernels; ``mode="spectral"`` uses
    the Hankel representation and needs f sampled on a Gauss grid.  With
    ``check`` the weighted-L1 admissibility of f is verified first.
    """
    order = BesselOrder.coerce(order)
    x_nodes = np.asarray(x_nodes, dtype=float)
    t_nodes = np.asarray(t_nodes, dtype=float)
    if check:
        from .carleson import weighted_l1_check

        res = weighted_l1_check(order, f)
        if not res["power_weight"]["pass"]:
            raise DomainError(
                "input rejected: x^lam (1+x^2)^(-lam-1) f is not integrable "
                f"(partial integral {res['power_weight']['value']:.4g})")
    if mode == "direct":
        X, T = np.meshgrid(x_nodes, t_nodes, indexing="ij")
        layers = poisson_integral(order, f, X, T, ("u", "dt", "dx"), **quad)
        u, du, dl = layers["u"], layers["dt"], layers["dx"]
    elif mode == "spectral":
        sg = SpectralSemigroup(order, f, x_nodes)
        u = np.column_stack([sg.poisson(t) for t in t_nodes])
        du = np.column_stack([sg.dt(t) for t in t_nodes])
        dl = np.column_stack([sg.dlambda(t) for t in t_nodes])
    else:
        raise ValueError(f"unknown mode {mode!r}")
    source = {"label": f.label, "lambda": order.lam}
    return SolutionField(order.lam, x_nodes, t_nodes, u, du, dl, source, mode, f)


def slice_function(fld: SolutionField, j: int) -> GridFunction:
    """u(., t_j) as a GridFunction, with power-law extrapolation read off the grid ends."""
    x = fld.x_nodes
    v = fld.u[:, j]
    head = fld.lam
    tail_exp = 0.0
    if v[-1] != 0 and v[-2] != 0 and np.sign(v[-1]) == np.sign(v[-2]):
        tail_exp = -math.log(abs(v[-1] / v[-2])) / math.log(x[-1] / x[-2])
    return GridFunction(x, v, tail=TailPolicy.power_decay(tail_exp), head_exponent=head,
                        label=f"u(.,{fld.t_nodes[j]:g})")


def semigroup_check(order, fld: SolutionField, s: float, *, probes_x=None,
                    t_indices=None, floor: float = 1e-3) -> dict:
    """Residual of P_s(u(., t)) = u(., t+s) at probe points.

    The right side is recomputed from the field's source when available.
    The residual is max |lhs - rhs| / max(|rhs|, floor * max|rhs|).
    """
    lam = BesselOrder.coerce(order).lam
    s = float(s)
    tn = fld.t_nodes
    if t_indices is None:
        t_indices = [j for j in range(len(tn)) if tn[j] + s <= tn[-1]][::16]
    if not t_indices or not s > 0:
        raise DomainError("no probe time with t and t+s inside the t-grid")
    for j in t_indices:
        if not (tn[0] <= tn[j] + s <= tn[-1]):
            raise DomainError(f"t+s = {tn[j] + s:g} outside the t-grid")
    if probes_x is None:
        probes_x = fld.x_nodes[8:-8:16]
    probes_x = np.asarray(probes_x, dtype=float)
    rows = []
    worst = 0.0
    for j in t_indices:
        g = slice_function(fld, j)
        lhs = poisson_integral(lam, g, probes_x, s)["u"]
        if fld.f is not None:
            rhs = poisson_integral(lam, fld.f, probes_x, tn[j] + s)["u"]
        else:
            from scipy.interpolate import CubicSpline

            cs = CubicSpline(np.log(tn), fld.u, axis=1)
            xi = np.searchsorted(fld.x_nodes, probes_x)
            rhs = cs(math.log(tn[j] + s))[np.clip(xi, 0, len(fld.x_nodes) - 1)]
        scale = float(np.max(np.abs(rhs))) if rhs.size else 0.0
        if scale == 0.0:
            res = float(np.max(np.abs(lhs))) if lhs.size else 0.0
        else:
            res = float(np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), floor * scale)))
        worst = max(worst, res)
        rows.append({"t": float(tn[j]), "s": s, "residual": res})
    return {"residual": worst, "rows": rows}


def _g_spectral(lam: float, F: GridFunction, x: np.ndarray, k_upper: float, n: int):
    k, w = gauss_grid(k_upper, n)
    from .hankel import _kernel_matrix, hankel_transform

    hat = hankel_transform(lam, F, k, w).values
    # D_lam P_t F(x) = -sum_k w_k sqrt(xk) J_{lam+1/2}(xk) k e^{-kt} hat_k, and
    # int_0^inf t e^{-(k+k')t} dt = (k+k')^-2 gives the t-integral in closed form
    a = _kernel_matrix(lam + 0.5, x, k) * (w * k * hat)[None, :]
    m = 1.0 / np.add.outer(k, k) ** 2
    return np.einsum("ij,ij->i", a @ m, a)


def g_function(order, F: GridFunction, x, *, k_upper: float | None = None, n: int = 1024):
    """g_lam(F)(x) = (int_0^inf |t D_lam P_t F(x)|^2 dt/t)^(1/2).

    F is transformed onto a Gauss grid in the spectral variable; the t
    integral is then exact for each pair of spectral nodes.
    """
    lam = BesselOrder.coerce(order).lam
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(xa <= 0):
        raise DomainError("g_function needs x > 0")
    if k_upper is None:
        k_upper = float(F.nodes[-1])
    g2 = _g_spectral(lam, F, xa, k_upper, n)
    g = np.sqrt(np.maximum(g2, 0.0))
    return float(g[0]) if np.ndim(x) == 0 else g


def g_norm_squared(order, F: GridFunction, *, x_upper: float | None = None, n_x: int = 512,
                   n_k: int = 1024) -> dict:
    """int_0^inf g_lam(F)(x)^2 dx, with the power tail x^(-2 lam - 2) added analytically."""
    lam = BesselOrder.coerce(order).lam
    k_upper = float(F.nodes[-1])
    if x_upper is None:
        x_upper = 480.0 / k_upper
    xs, wx = gauss_grid(x_upper, n_x)
    g2 = _g_spectral(lam, F, xs, k_upper, n_k)
    body = float(wx @ g2)
    # tail: g^2 ~ c x^(-2 lam - 2); take c from the last node
    p = 2.0 * lam + 2.0
    end = _g_spectral(lam, F, np.array([x_upper]), k_upper, n_k)[0]
    tail = end * x_upper / (p - 1.0)
    return {"value": body + tail, "body": body, "tail": tail, "x_upper": x_upper}


def decay_probe(fld: SolutionField) -> list[dict]:
    """sup over x of t |du/dt(x, t)| for every t-slice."""
    vals = np.max(np.abs(fld.du_dt), axis=0) * fld.t_nodes
    return [{"t": float(t), "sup_t_dt_u": float(v)} for t, v in zip(fld.t_nodes, vals)]


def finite_difference_orders(order, f: GridFunction, x0: float, t0: float, hs=(0.02, 0.01, 0.005)) -> dict:
    """Observed order of central differences against the differentiated-kernel layers.

    Returns the errors per step and the observed orders for du/dt and for
    D_lam u = x^lam d/dx (x^-lam u).
    """
    lam = BesselOrder.coerce(order).lam
    exact = poisson_integral(lam, f, x0, t0, ("dt", "dx"))
    err_t, err_x = [], []
    for h in hs:
        ut = poisson_integral(lam, f, x0, np.array([t0 - h, t0 + h]))["u"]
        err_t.append(abs((ut[1] - ut[0]) / (2 * h) - exact["dt"]))
        xs = np.array([x0 - h, x0 + h])
        ux = poisson_integral(lam, f, xs, t0)["u"] * xs ** (-lam)
        err_x.append(abs(x0 ** lam * (ux[1] - ux[0]) / (2 * h) - exact["dx"]))
    def orders(errs):
        return [math.log(errs[i] / errs[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(len(errs) - 1)]
    return {"dt_errors": err_t, "dx_errors": err_x, "dt_orders": orders(err_t), "dx_orders": orders(err_x)}
