"""The Bessel-Poisson kernel P_t(x, y), its t-derivative and its D_lambda derivative.

Two evaluation routes are provided:

* pointwise functions (``poisson_kernel`` and friends) integrate the theta
  representation adaptively, with the transition angle passed as a
  singularity hint;
* ``kernel_arrays`` evaluates all three kernels on broadcast arrays.  The
  theta integral is rewritten with u = sin(theta/2)**2 and a logarithmic map
  so that it depends on a single parameter eps = s**2 / (4 x y),
  s**2 = (x-y)**2 + t**2.  The resulting factors are tabulated in log(eps)
  with Gauss-Jacobi quadrature and interpolated by cubic splines.

With F1, F2, F3 the tabulated factors:

    P      = lam t / (pi s^2) * F1
    dP/dt  = lam / (pi s^2) * (F1 - 2 (lam+1) t^2 / s^2 * F2)
    D_lam P = -2 lam (lam+1) t / (pi s^2) * ((x-y)/s^2 * F2 + F3 / (2x))
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .quadrature import QuadratureSpec, gauss_jacobi, integrate
from .specfun import BesselOrder, DomainError, gamma_fn

__all__ = [
    "KernelPoint",
    "poisson_kernel",
    "dt_poisson_kernel",
    "dx_lambda_poisson_kernel",
    "dx_lambda_split",
    "kernel_arrays",
    "poisson_kernel_array",
    "BOUND_RATIOS",
    "kernel_bound_report",
    "bound_report_to_csv",
]

log = logging.getLogger(__name__)

_KERNEL_SPEC = QuadratureSpec(abs_tol=1e-300, rel_tol=1e-13, max_subdivisions=4000)


@dataclass(frozen=True)
class KernelPoint:
    x: float
    y: float
    t: float

    def __post_init__(self):
        for name in ("x", "y", "t"):
            v = float(getattr(self, name))
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"KernelPoint.{name} must be positive, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def s2(self) -> float:
        return (self.x - self.y) ** 2 + self.t ** 2


def _as_point(p) -> KernelPoint:
    return p if isinstance(p, KernelPoint) else KernelPoint(*p)


def _theta_spec(lam: float, p: KernelPoint, spec: QuadratureSpec | None) -> QuadratureSpec:
    spec = spec or _KERNEL_SPEC
    theta_star = min(math.sqrt(p.s2 / (p.x * p.y)), math.pi)
    hints = [theta_star]
    # graded breakpoints from theta* up to pi
    th = theta_star * 4.0
    while th < math.pi:
        hints.append(th)
        th *= 4.0
    if lam < 1.0:
        # endpoint weight (sin th)^(2 lam - 1) is not smooth at 0
        th = min(theta_star, 1.0) / 4.0
        for _ in range(12):
            hints.append(th)
            th /= 4.0
    return spec.with_hints(*hints)


def _theta_integral(lam: float, p: KernelPoint, power: float, numerator=None,
                    lo: float = 0.0, hi: float = math.pi,
                    spec: QuadratureSpec | None = None) -> float:
    x, y = p.x, p.y
    s2 = p.s2
    a = 2.0 * lam - 1.0

    def f(th):
        q = s2 + 2.0 * x * y * (1.0 - np.cos(th))
        val = np.sin(th) ** a * q ** (-power)
        if numerator is not None:
            val = val * numerator(th)
        return val

    return integrate(f, lo, hi, _theta_spec(lam, p, spec)).value


def poisson_kernel(order, p, spec: QuadratureSpec | None = None) -> float:
    """P_t^lambda(x, y) by adaptive quadrature over theta in (0, pi)."""
    lam = BesselOrder.coerce(order).lam
    p = _as_point(p)
    integral = _theta_integral(lam, p, lam + 1.0, spec=spec)
    return 2.0 * lam * (p.x * p.y) ** lam * p.t / math.pi * integral


def dt_poisson_kernel(order, p, spec: QuadratureSpec | None = None) -> float:
    """d/dt P_t^lambda(x, y) from the two-term theta representation."""
    lam = BesselOrder.coerce(order).lam
    p = _as_point(p)
    i1 = _theta_integral(lam, p, lam + 1.0, spec=spec)
    i2 = _theta_integral(lam, p, lam + 2.0, spec=spec)
    return 2.0 * lam / math.pi * (p.x * p.y) ** lam * (i1 - 2.0 * (lam + 1.0) * p.t ** 2 * i2)


def dx_lambda_split(order, p, spec: QuadratureSpec | None = None) -> tuple[float, float]:
    """The two halves (theta in (0, pi/2) and (pi/2, pi)) of D_{lambda,x} P_t(x, y)."""
    lam = BesselOrder.coerce(order).lam
    p = _as_point(p)
    pref = -4.0 * lam * (lam + 1.0) / math.pi * (p.x * p.y) ** lam * p.t

    def num(th):
        return p.x - p.y * np.cos(th)

    first = _theta_integral(lam, p, lam + 2.0, num, 0.0, 0.5 * math.pi, spec)
    second = _theta_integral(lam, p, lam + 2.0, num, 0.5 * math.pi, math.pi, spec)
    return pref * first, pref * second


def dx_lambda_poisson_kernel(order, p, spec: QuadratureSpec | None = None) -> float:
    """D_{lambda,x} P_t^lambda(x, y) = x^lam d/dx (x^-lam P_t^lambda(x, y))."""
    lam = BesselOrder.coerce(order).lam
    p = _as_point(p)
    pref = -4.0 * lam * (lam + 1.0) / math.pi * (p.x * p.y) ** lam * p.t
    integral = _theta_integral(lam, p, lam + 2.0, lambda th: p.x - p.y * np.cos(th), spec=spec)
    return pref * integral


# ---------------------------------------------------------------------------
# tabulated route

_Z_MIN, _Z_MAX, _Z_STEP = -36.0, 36.0, 0.005
_JACOBI_NODES = 96


def _g_factors(lam: float, eps: np.ndarray, n: int = _JACOBI_NODES) -> np.ndarray:
    """(1+eps)^(lam-1) times the three reduced theta integrals, shape (3, len(eps))."""
    eps = np.asarray(eps, dtype=float)
    xj, wj = gauss_jacobi(n, lam - 1.0, lam - 1.0)
    big_t = np.log1p(1.0 / eps)[:, None]
    tau = 0.5 * big_t * (1.0 + xj)
    rest = big_t - tau
    # weight tau^(lam-1) (T-tau)^(lam-1) dtau is carried by the Jacobi rule
    scale = (0.5 * big_t) ** (2.0 * lam - 1.0)
    smooth_a = -np.expm1(-tau) / tau
    smooth_b = -np.expm1(-rest) / rest
    base = (smooth_a * smooth_b) ** (lam - 1.0)
    e1 = np.exp(-tau)
    g1 = scale[:, 0] * ((base * e1) @ wj)
    g2 = scale[:, 0] * ((base * e1 * e1) @ wj)
    g3 = scale[:, 0] * ((base * e1 * -np.expm1(-tau)) @ wj)
    lead = (1.0 + eps) ** (lam - 1.0)
    return np.vstack([lead * g1, lead * g2, lead * g3])


class _UniformSpline:
    """Cubic spline on a uniform grid, evaluated without a bisection search."""

    def __init__(self, z: np.ndarray, values: np.ndarray):
        cs = CubicSpline(z, values, bc_type="not-a-knot")
        self.z0 = float(z[0])
        self.h = float(z[1] - z[0])
        self.c = np.ascontiguousarray(cs.c)  # (4, n-1)
        self.n = len(z) - 1

    def __call__(self, z: np.ndarray) -> np.ndarray:
        u = (z - self.z0) / self.h
        idx = np.clip(np.floor(u).astype(np.intp), 0, self.n - 1)
        d = (u - idx) * self.h
        c = self.c
        return ((c[0, idx] * d + c[1, idx]) * d + c[2, idx]) * d + c[3, idx]


class KernelTable:
    """log F_i(eps) tabulated in z = log(eps) for one lambda."""

    def __init__(self, lam: float):
        self.lam = lam
        z = np.arange(_Z_MIN, _Z_MAX + 0.5 * _Z_STEP, _Z_STEP)
        f = _g_factors(lam, np.exp(z))
        self.splines = [_UniformSpline(z, np.log(fi)) for fi in f]
        # eps -> 0 limits and eps -> inf leading terms
        self.small = np.array([1.0 / lam, 1.0 / (lam * (lam + 1.0)), 1.0 / (lam + 1.0)])
        b_ll = gamma_fn(lam) ** 2 / gamma_fn(2.0 * lam)
        b_l1 = gamma_fn(lam + 1.0) * gamma_fn(lam) / gamma_fn(2.0 * lam + 1.0)
        self.large_coef = np.array([b_ll, b_ll, b_l1])
        self.large_pow = np.array([lam, lam, lam + 1.0])

    def factors(self, log_eps: np.ndarray) -> list[np.ndarray]:
        z = np.asarray(log_eps, dtype=float)
        lo = z < _Z_MIN
        hi = z > _Z_MAX
        out = []
        for i, spl in enumerate(self.splines):
            v = np.exp(spl(np.clip(z, _Z_MIN, _Z_MAX)))
            if lo.any():
                v = np.where(lo, self.small[i], v)
            if hi.any():
                v = np.where(hi, self.large_coef[i] * np.exp(-self.large_pow[i] * z), v)
            out.append(v)
        return out


@lru_cache(maxsize=32)
def kernel_table(lam: float) -> KernelTable:
    return KernelTable(float(lam))


def kernel_arrays(order, x, y, t, which: tuple = ("p", "dt", "dx")) -> dict:
    """Broadcast evaluation of P, dP/dt and D_{lambda,x} P (keys "p", "dt", "dx")."""
    lam = BesselOrder.coerce(order).lam
    x, y, t = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (x, y, t)))
    diff = x - y
    s2 = diff * diff + t * t
    log_eps = np.log(s2) - np.log(4.0 * x * y)
    f1, f2, f3 = kernel_table(lam).factors(log_eps)
    out = {}
    base = lam / (math.pi * s2)
    if "p" in which:
        out["p"] = base * t * f1
    if "dt" in which:
        out["dt"] = base * (f1 - 2.0 * (lam + 1.0) * (t * t / s2) * f2)
    if "dx" in which:
        out["dx"] = -2.0 * (lam + 1.0) * base * t * (diff / s2 * f2 + f3 / (2.0 * x))
    return out


def poisson_kernel_array(order, x, y, t) -> np.ndarray:
    return kernel_arrays(order, x, y, t, which=("p",))["p"]


# ---------------------------------------------------------------------------
# bound probes

BOUND_RATIOS = ("dx_lambda_cauchy", "dt_cauchy", "dt_weighted")


def _ratio_arrays(lam: float, x, y, t) -> dict:
    k = kernel_arrays(lam, x, y, t)
    s2 = (x - y) ** 2 + t ** 2
    return {
        # |D P| ((x-y)^2 + t^2)
        "dx_lambda_cauchy": np.abs(k["dx"]) * s2,
        # |dP/dt| ((x-y)^2 + t^2)
        "dt_cauchy": np.abs(k["dt"]) * s2,
        # |dP/dt| ((x-y)^2 + t^2)^(lam+1) / (xy)^lam, in logs to avoid overflow
        "dt_weighted": np.abs(k["dt"]) * np.exp((lam + 1.0) * np.log(s2) - lam * np.log(x * y)),
    }


def kernel_bound_report(order, xs, ys, ts) -> list[dict]:
    """Empirical suprema of the three kernel bound ratios over a product grid.

    Returns one row per ratio with the supremum and where it is attained;
    an empty grid gives an empty table.
    """
    lam = BesselOrder.coerce(order).lam
    xs, ys, ts = (np.asarray(v, dtype=float).ravel() for v in (xs, ys, ts))
    if xs.size == 0 or ys.size == 0 or ts.size == 0:
        return []
    if min(xs.min(), ys.min(), ts.min()) <= 0:
        raise DomainError("kernel grid must be strictly positive")
    best = {name: (-1.0, None) for name in BOUND_RATIOS}
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    for t in ts:
        ratios = _ratio_arrays(lam, X, Y, t)
        for name, r in ratios.items():
            if not np.all(np.isfinite(r)):
                raise FloatingPointError(f"non-finite {name} ratio at t={t}")
            i = int(np.argmax(r))
            if r.flat[i] > best[name][0]:
                best[name] = (float(r.flat[i]), (float(X.flat[i]), float(Y.flat[i]), float(t)))
    return [
        {"lambda": lam, "ratio_name": name, "sup": val,
         "argmax_x": arg[0], "argmax_y": arg[1], "argmax_t": arg[2]}
        for name, (val, arg) in best.items()
    ]


def bound_report_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = ["lambda", "ratio_name", "sup", "argmax_x", "argmax_y", "argmax_t"]
    w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (f"{r[k]:.12g}" if isinstance(r[k], float) else r[k]) for k in cols})
    return buf.getvalue()
