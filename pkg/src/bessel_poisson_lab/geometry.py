"""lambda-harmonicity, subharmonicity of u^2 and the hyperbolic mean-value property.

Points of the half-plane are written (b1, b2) with b1 > 0 the Bessel
variable and b2 the harmonic one; the Weinstein operator is

    L_lam u = d^2u/db2^2 + d^2u/db1^2 - lam (lam - 1) u / b1^2.

The mean value of a lambda-harmonic v over the hyperbolic circle of radius r,
weighted by dtau / b1, is 2 sinh(r) N(lam, r) v(a).  N is calibrated from
v = b1^lam; it coincides with pi P_{lam-1}(cosh r).
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .hankel import GridFunction
from .quadrature import (ConvergenceError, IntegrandError, QuadratureSpec, TailPolicy,
                         gauss_legendre, integrate_semi_infinite)
from .specfun import BesselOrder, DomainError, gamma_fn, legendre_p

__all__ = [
    "HyperbolicBall",
    "sigma",
    "point_at_distance",
    "second_difference",
    "weinstein_residual",
    "residual_convergence",
    "subharmonic_check",
    "random_disks",
    "circle_integral",
    "calibrate_normalization",
    "calibration_table",
    "calibration_csv",
    "mean_value_check",
    "poisson_field_function",
    "a_constant",
    "representation_kernel",
    "kernel_normalization",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HyperbolicBall:
    a1: float
    a2: float
    r: float
    euclid_center: tuple = field(init=False)
    euclid_radius: float = field(init=False)

    def __post_init__(self):
        if not (self.a1 > 0 and self.r > 0):
            raise DomainError("hyperbolic ball needs a1 > 0 and r > 0")
        object.__setattr__(self, "euclid_center", (self.a1 * math.cosh(self.r), float(self.a2)))
        object.__setattr__(self, "euclid_radius", self.a1 * math.sinh(self.r))

    @property
    def center(self) -> tuple:
        return (self.a1, self.a2)

    def lowest_b2(self) -> float:
        return self.a2 - self.euclid_radius

    def circle_points(self, theta) -> tuple[np.ndarray, np.ndarray]:
        c1, c2 = self.euclid_center
        R = self.euclid_radius
        return c1 + R * np.cos(theta), c2 + R * np.sin(theta)


def sigma(a, b) -> float:
    """cosh of the hyperbolic distance between a and b."""
    (a1, a2), (b1, b2) = a, b
    return ((a1 - b1) ** 2 + (a2 - b2) ** 2 + 2 * a1 * b1) / (2 * a1 * b1)


def point_at_distance(a, r: float, direction: float) -> tuple[float, float]:
    """The point at hyperbolic distance r from a along the geodesic leaving a at angle ``direction``.

    Uses the unit-speed geodesic through i in the upper half-plane model,
    mapped by the isometry z -> a1 z + a2 (i.e. b1 = imaginary part).
    """
    a1, a2 = a
    c, s = math.cos(direction / 2), math.sin(direction / 2)
    # elliptic rotation about i applied to the geodesic point i e^r
    w = 1j * math.exp(r)
    z = (c * w + s) / (-s * w + c)
    return a1 * z.imag, a2 + a1 * z.real


# ---------------------------------------------------------------------------
# finite differences

def second_difference(nodes: np.ndarray, u: np.ndarray, axis: int) -> np.ndarray:
    """Three-point second derivative on a nonuniform grid, interior nodes only."""
    h1 = np.diff(nodes)[:-1]
    h2 = np.diff(nodes)[1:]
    c_m = 2.0 / (h1 * (h1 + h2))
    c_0 = -2.0 / (h1 * h2)
    c_p = 2.0 / (h2 * (h1 + h2))
    u = np.moveaxis(u, axis, -1)
    d2 = c_m * u[..., :-2] + c_0 * u[..., 1:-1] + c_p * u[..., 2:]
    return np.moveaxis(d2, -1, axis)


def weinstein_residual(order, x_nodes, t_nodes=None, u=None) -> np.ndarray:
    """L_lam u by central differences on the interior of the (x, t) grid.

    Accepts a SolutionField in place of the three arrays (pass it as x_nodes).
    """
    lam = BesselOrder.coerce(order).lam
    if hasattr(x_nodes, "u") and t_nodes is None and u is None:
        fld = x_nodes
        x_nodes, t_nodes, u = fld.x_nodes, fld.t_nodes, fld.u
    x = np.asarray(x_nodes, dtype=float)
    t = np.asarray(t_nodes, dtype=float)
    u = np.asarray(u, dtype=float)
    if len(x) < 5 or len(t) < 5:
        raise DomainError("weinstein_residual needs at least 3 interior nodes per direction")
    uxx = second_difference(x, u, 0)[:, 1:-1]
    utt = second_difference(t, u, 1)[1:-1, :]
    xi = x[1:-1, None]
    return uxx + utt - lam * (lam - 1.0) * u[1:-1, 1:-1] / xi ** 2


def residual_convergence(order, u: Callable, x_range, t_range, n0: int = 9, levels: int = 3) -> dict:
    """Max |L_lam u| at the coarse interior nodes on successively halved geometric grids.

    Each refinement inserts the geometric midpoints, so the coarse nodes are
    kept and the residual is compared at the same physical points.
    """
    lam = BesselOrder.coerce(order).lam
    maxima = []
    for lev in range(levels):
        n = (n0 - 1) * 2 ** lev + 1
        x = np.geomspace(*x_range, n)
        t = np.geomspace(*t_range, n)
        X, T = np.meshgrid(x, t, indexing="ij")
        res = weinstein_residual(lam, x, t, u(X, T))
        step = 2 ** lev
        coarse = res[step - 1::step, step - 1::step]
        maxima.append(float(np.max(np.abs(coarse))))
    orders = [math.log2(maxima[i] / maxima[i + 1]) if maxima[i + 1] > 0 else math.inf
              for i in range(levels - 1)]
    return {"max_residual": maxima, "orders": orders}


# ---------------------------------------------------------------------------
# subharmonicity

def _disk_rule(n_r: int = 12, n_theta: int = 48):
    gr, wr = gauss_legendre(n_r)
    rho = 0.5 * (gr + 1.0)
    w_rho = 0.5 * wr * rho
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    return rho, w_rho, theta


def subharmonic_check(u: Callable, disks, *, tol: float = 1e-6, domain=None) -> dict:
    """Compare u(center)^2 with the average of u^2 over each Euclidean disk.

    ``disks`` is a sequence of (x0, t0, r).  Disks with r >= t0, r >= x0 or
    leaving ``domain`` ((x_lo, x_hi), (t_lo, t_hi)) are skipped with a warning.
    """
    rho, w_rho, theta = _disk_rule()
    rows, skipped = [], []
    for x0, t0, r in disks:
        ok = r < t0 and r < x0
        if ok and domain is not None:
            (xl, xh), (tl, th) = domain
            ok = xl <= x0 - r and x0 + r <= xh and tl <= t0 - r and t0 + r <= th
        if not ok:
            log.warning("disk (%g, %g, %g) outside the domain; skipped", x0, t0, r)
            skipped.append((x0, t0, r))
            continue
        X = x0 + r * np.outer(rho, np.cos(theta))
        T = t0 + r * np.outer(rho, np.sin(theta))
        vals = np.asarray(u(X, T), dtype=float) ** 2
        avg = float(w_rho @ vals.mean(axis=1)) * 2.0
        center = float(np.asarray(u(np.array([x0], dtype=float), np.array([t0], dtype=float)), dtype=float).ravel()[0]) ** 2
        rows.append({"x0": x0, "t0": t0, "r": r, "center_sq": center, "disk_avg_sq": avg,
                     "excess": center - avg})
    violations = [row for row in rows if row["excess"] > tol]
    return {"rows": rows, "violations": violations, "skipped": skipped}


def random_disks(n: int, x_range, t_range, seed: int = 0, max_frac: float = 0.9):
    """n disks with centers uniform in log-space and radius below min(x0, t0)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        x0 = math.exp(rng.uniform(math.log(x_range[0]), math.log(x_range[1])))
        t0 = math.exp(rng.uniform(math.log(t_range[0]), math.log(t_range[1])))
        r = rng.uniform(0.05, max_frac) * min(x0, t0)
        out.append((x0, t0, r))
    return out


# ---------------------------------------------------------------------------
# hyperbolic mean value

def circle_integral(v: Callable, ball: HyperbolicBall, w: float = 1.0, *, rtol: float = 1e-13,
                    n0: int = 32, n_max: int = 1 << 14) -> float:
    """int over the Euclidean circle of ``ball`` of v(b1, b2) b1^-w d(arc length).

    Periodic trapezoid rule, doubling the node count until successive values
    agree to ``rtol``.
    """
    R = ball.euclid_radius
    prev = None
    n = n0
    while n <= n_max:
        theta = 2 * math.pi * np.arange(n) / n
        b1, b2 = ball.circle_points(theta)
        vals = np.asarray(v(b1, b2), dtype=float) * np.ones_like(b1)
        bad = ~np.isfinite(vals)
        if bad.any():
            th = float(theta[np.argmax(bad)])
            raise IntegrandError(f"integrand not finite at angle {th:.6g}", th)
        val = float(np.sum(vals * b1 ** (-w)) * R * 2 * math.pi / n)
        if prev is not None and abs(val - prev) <= rtol * max(abs(val), 1e-300):
            return val
        prev = val
        n *= 2
    raise ConvergenceError("circle integral did not settle", value=prev)


def calibrate_normalization(order, r: float, center=(1.0, 0.0)) -> float:
    """N(lam, r) from the lambda-harmonic function b1^lam."""
    lam = BesselOrder.coerce(order).lam
    if not r > 0:
        raise DomainError("r must be positive")
    ball = HyperbolicBall(center[0], center[1], r)
    val = circle_integral(lambda b1, b2: b1 ** lam, ball, 1.0)
    return val / (2.0 * math.sinh(r) * center[0] ** lam)


def calibration_table(lams, rs) -> list[dict]:
    rows = []
    for lam in lams:
        for r in rs:
            n = calibrate_normalization(lam, r)
            leg = math.pi * legendre_p(lam - 1.0, math.cosh(r))
            rows.append({"lambda": lam, "r": r, "N": n, "pi_legendre": leg,
                         "delta": abs(n - leg) / leg})
    return rows


def calibration_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "r", "N", "pi_legendre", "delta"])
    for row in rows:
        w.writerow([f"{row['lambda']:g}", f"{row['r']:g}", f"{row['N']:.15g}",
                    f"{row['pi_legendre']:.15g}", f"{row['delta']:.3e}"])
    return buf.getvalue()


def mean_value_check(order, v: Callable, a, r: float, normalization: float | None = None) -> float:
    """|v(a) - mean of v over the hyperbolic circle| / |v(a)|."""
    lam = BesselOrder.coerce(order).lam
    n = calibrate_normalization(lam, r) if normalization is None else normalization
    ball = HyperbolicBall(a[0], a[1], r)
    mean = circle_integral(v, ball, 1.0) / (2.0 * math.sinh(r) * n)
    va = float(np.asarray(v(np.array([a[0]], dtype=float), np.array([a[1]], dtype=float)), dtype=float).ravel()[0])
    return abs(va - mean) / abs(va)


def poisson_field_function(order, f: GridFunction, shift: float = 0.0) -> Callable:
    """(b1, b2) -> P_{b2 + shift}(f)(b1), lambda-harmonic where b2 + shift > 0."""
    from .field import poisson_integral

    def v(b1, b2):
        return poisson_integral(order, f, b1, np.asarray(b2, dtype=float) + shift)["u"]

    return v


# ---------------------------------------------------------------------------
# the constant A and the kernel K_x

def a_constant(order, *, check_tol: float = 1e-8) -> float:
    """A = int_R (s^2 + 1)^-lam ds = sqrt(pi) Gamma(lam - 1/2) / Gamma(lam).

    The Gamma formula is returned after cross-checking it against quadrature.
    """
    lam = BesselOrder.coerce(order).lam
    if lam <= 0.5:
        raise DomainError(f"the integral defining A diverges for lambda = {lam} <= 1/2")
    closed = math.sqrt(math.pi) * gamma_fn(lam - 0.5) / gamma_fn(lam)
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)
    half = integrate_semi_infinite(lambda s: (s * s + 1.0) ** (-lam), 0.0,
                                   TailPolicy.power_decay(2.0 * lam), spec).value
    quad = 2.0 * half
    if abs(quad - closed) > check_tol * closed:
        raise ConvergenceError(f"A: quadrature {quad!r} disagrees with {closed!r}", value=quad)
    return closed


def representation_kernel(order, x, t, s):
    """K_x(t, s) = x^(2 lam - 1) / ((t - s)^2 + x^2)^lam."""
    lam = BesselOrder.coerce(order).lam
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("representation_kernel needs x > 0")
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    out = x ** (2 * lam - 1) / ((t - s) ** 2 + x * x) ** lam
    return float(out) if out.ndim == 0 else out


def kernel_normalization(order, x: float, t: float) -> float:
    """int_R K_x(t, s) ds by quadrature (split at s = t)."""
    lam = BesselOrder.coerce(order).lam
    spec = QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)
    tail = TailPolicy.power_decay(2.0 * lam)
    right = integrate_semi_infinite(lambda u: representation_kernel(lam, x, t, t + u), 0.0, tail, spec)
    left = integrate_semi_infinite(lambda u: representation_kernel(lam, x, t, t - u), 0.0, tail, spec)
    return right.value + left.value
