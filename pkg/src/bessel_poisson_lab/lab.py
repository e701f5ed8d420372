"""Experiment runner and invariant suites behind the ``bpl`` command."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import carleson as cb
from . import geometry as geo
from .catalog import BOUNDED_IDS, get_entry
from .config import ExperimentConfig
from .field import (build_field, g_norm_squared, geometric_grid, poisson_integral,
                    semigroup_check)
from .hankel import GridFunction, gauss_grid, hankel_transform, SpectralSemigroup
from .kernels import (bound_report_to_csv, kernel_arrays, kernel_bound_report,
                      poisson_kernel, dt_poisson_kernel, dx_lambda_poisson_kernel)
from .quadrature import TailPolicy
from .specfun import legendre_p

__all__ = [
    "Check",
    "SUITES",
    "EXPECTED_TIGHT_FAILURES",
    "thread_limit",
    "run",
    "verify",
    "kernel_probe",
    "meanvalue",
    "report",
]

log = logging.getLogger(__name__)

LAMBDAS = (1.2, 2.0, 3.5)


def thread_limit() -> int:
    raw = os.environ.get("BPL_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer BPL_THREADS=%r", raw)
    return os.cpu_count() or 1


def _pmap(fn, items):
    items = list(items)
    workers = min(thread_limit(), max(1, len(items)))
    if workers == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def _refined(n: int, factor: int) -> int:
    return (n - 1) * factor + 1


# ---------------------------------------------------------------------------
# checks

@dataclass
class Check:
    suite: str
    name: str
    value: float
    tol: float
    relation: str = "le"  # "le": value <= tol (tightenable); "ge": value >= tol
    detail: str = ""
    tightenable: bool = True  # False for resource budgets such as wall time

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.value):
            return False
        return bool(self.value <= self.tol if self.relation == "le" else self.value >= self.tol)

    def tightened(self, factor: float) -> "Check":
        if self.relation != "le" or factor == 1 or not self.tightenable:
            return self
        return replace(self, tol=self.tol / factor)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["value"] = float(self.value)
        d["passed"] = self.passed
        return d


def gaussian_catalog(lam: float, upper: float = 14.0, n: int = 1024) -> list[GridFunction]:
    """Three Hankel-friendly inputs sampled on a Gauss grid."""
    y, w = gauss_grid(upper, n)
    tail = TailPolicy.exponential_decay(1.0)
    specs = [
        ("gauss", lambda v: v ** lam * np.exp(-v * v / 2)),
        ("gauss_y2", lambda v: v ** (lam + 2) * np.exp(-v * v / 2)),
        ("gauss_narrow", lambda v: v ** lam * np.exp(-v * v)),
    ]
    return [GridFunction.from_callable(fn, y, w, tail=tail, feature_window=(0.1, 10.0), label=name)
            for name, fn in specs]


def _chi():
    return get_entry("chi_12").function(2.0)


@lru_cache(maxsize=16)
def _catalog_field(lam: float, fid: str, nx: int, nt: int):
    f = get_entry(fid).function(lam)
    return build_field(lam, f, geometric_grid(1e-2, 1e2, nx), geometric_grid(1e-2, 20.0, nt))


# -- hankel ------------------------------------------------------------------

def check_hankel_isometry(lams=LAMBDAS) -> list[Check]:
    out = []
    for lam in lams:
        for F in gaussian_catalog(lam):
            t0 = time.perf_counter()
            H = hankel_transform(lam, F, F.nodes, F.weights)
            dt = time.perf_counter() - t0
            out.append(Check("hankel", f"isometry lam={lam:g} {F.label}",
                             abs(H.l2_norm() / F.l2_norm() - 1.0), 1e-6, detail=f"{dt:.2f}s"))
    return out


def check_hankel_runtime(lams=LAMBDAS) -> list[Check]:
    out = []
    for lam in lams:
        F = gaussian_catalog(lam)[0]
        t0 = time.perf_counter()
        hankel_transform(lam, F, F.nodes, F.weights)
        out.append(Check("hankel", f"runtime N=1024 lam={lam:g} (s)", time.perf_counter() - t0, 10.0,
                         tightenable=False))
    return out


def check_hankel_involution(lams=LAMBDAS) -> list[Check]:
    out = []
    for lam in lams:
        F = gaussian_catalog(lam)[0]
        H = hankel_transform(lam, F, F.nodes, F.weights)
        HH = hankel_transform(lam, H, F.nodes, F.weights)
        err = math.sqrt(float(F.weights @ (HH.values - F.values) ** 2)) / F.l2_norm()
        out.append(Check("hankel", f"involution lam={lam:g}", err, 1e-5))
    return out


def check_spectral_direct(lams=LAMBDAS, ts=(0.1, 1.0)) -> list[Check]:
    out = []
    xo = np.array([0.2, 0.5, 1.0, 2.0, 4.0, 8.0])
    for lam in lams:
        F = gaussian_catalog(lam)[0]
        sg = SpectralSemigroup(lam, F, xo)
        for t in ts:
            d = poisson_integral(lam, F, xo, t, ("u", "dx"))
            err_u = float(np.max(np.abs(sg.poisson(t) / d["u"] - 1.0)))
            err_d = float(np.max(np.abs(sg.dlambda(t) - d["dx"])) / np.max(np.abs(d["dx"])))
            out.append(Check("hankel", f"spectral/direct P_t lam={lam:g} t={t:g}", err_u, 1e-5))
            out.append(Check("hankel", f"spectral/direct D P_t lam={lam:g} t={t:g}", err_d, 1e-5))
    return out


# -- g-function --------------------------------------------------------------

def check_littlewood_paley(lams=LAMBDAS) -> list[Check]:
    out = []
    for lam in lams:
        F = gaussian_catalog(lam)[0]
        r = g_norm_squared(lam, F)
        ratio = r["value"] / F.l2_norm() ** 2
        out.append(Check("gfunction", f"|g F|^2/|F|^2 lam={lam:g}", abs(ratio / 0.25 - 1.0), 1e-3,
                         detail=f"ratio={ratio:.10f}"))
    return out


# -- kernels -----------------------------------------------------------------

def _moment_adaptive(lam: float, x: float, t: float) -> float:
    """int_0^inf x^-lam y^lam P_t(x, y) dy by adaptive Gauss-Kronrod in y."""
    from .quadrature import QuadratureSpec, integrate, integrate_semi_infinite

    spec = QuadratureSpec(abs_tol=1e-13, rel_tol=1e-11, max_subdivisions=4000)

    def g(y):
        y = np.asarray(y, dtype=float)
        return (y / x) ** lam * kernel_arrays(lam, x, y, t, which=("p",))["p"]

    cut = x + 4.0 * t
    body = integrate(g, 0.0, cut, spec.with_hints(max(x - t, 0.0) or cut / 2, x, min(x + t, cut))).value
    tail = integrate_semi_infinite(g, cut, TailPolicy.power_decay(2.0), spec).value
    return body + tail


def check_moments(lams=LAMBDAS, xs=(0.3, 1.0, 5.0), ts=(0.1, 1.0, 10.0)) -> list[Check]:
    out = []
    for lam in lams:
        f = get_entry("power_lambda").function(lam)
        X, T = np.meshgrid(xs, ts, indexing="ij")
        u = poisson_integral(lam, f, X, T)["u"]
        e1 = float(np.max(np.abs(u / X ** lam - 1.0)))
        # second identity through an independent quadrature path
        e2 = max(abs(_moment_adaptive(lam, x, t) - 1.0) for x in xs for t in ts)
        out.append(Check("kernels", f"int P y^lam dy = x^lam, lam={lam:g}", e1, 1e-6))
        out.append(Check("kernels", f"int x^-lam y^lam P dy = 1, lam={lam:g}", e2, 1e-6))
    return out


def bound_grids(n: int):
    xs = np.geomspace(1e-2, 1e2, n)
    ts = np.geomspace(1e-2, 1e2, max(5, n // 2))
    return xs, xs, ts


def check_kernel_bounds(lams=LAMBDAS, n: int = 64, refine: int = 2) -> list[Check]:
    out = []
    for lam in lams:
        base = kernel_bound_report(lam, *bound_grids(n))
        fine = kernel_bound_report(lam, *bound_grids(_refined(n, refine)))
        for b, f in zip(base, fine):
            drift = abs(f["sup"] - b["sup"]) / b["sup"]
            out.append(Check("kernels", f"bound {b['ratio_name']} lam={lam:g} drift", drift, 0.05,
                             detail=f"sup={f['sup']:.6g}"))
    return out


def check_kernel_routes(lams=LAMBDAS, seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    out = []
    for lam in lams:
        worst = 0.0
        for _ in range(20):
            x, y, t = np.exp(rng.uniform(-4, 4, 3))
            tab = kernel_arrays(lam, x, y, t)
            for key, fn in (("p", poisson_kernel), ("dt", dt_poisson_kernel),
                            ("dx", dx_lambda_poisson_kernel)):
                ref = fn(lam, (x, y, t))
                scale = abs(poisson_kernel(lam, (x, y, t))) / min(x, t) if key != "p" else abs(ref)
                worst = max(worst, abs(float(tab[key]) - ref) / max(abs(ref), 1e-3 * scale))
        out.append(Check("kernels", f"tabulated vs adaptive kernels lam={lam:g}", worst, 1e-9))
    return out


# -- carleson ----------------------------------------------------------------

def _family(cfg: ExperimentConfig) -> cb.BoxFamily:
    return cb.BoxFamily((cfg.j_min, cfg.j_max), (cfg.k_min, cfg.k_max))


def _field_norms(fld, family):
    mu = cb.carleson_norm(cb.GridDensity(fld.x_nodes, fld.t_nodes, fld.gradient_density()), family)
    ga = cb.carleson_norm(cb.GridDensity(fld.x_nodes, fld.t_nodes, fld.dt_density()), family)
    return mu, ga


def equivalence_rows(lam: float = 2.0, ids=BOUNDED_IDS, cfg: ExperimentConfig | None = None) -> list[dict]:
    cfg = cfg or ExperimentConfig()
    fam = _family(cfg)
    rows = []
    for fid in ids:
        f = get_entry(fid).function(lam)
        bmo = cb.bmo_o_norm(f, fam)
        base = _catalog_field(lam, fid, cfg.nx, cfg.nt)
        fine = _catalog_field(lam, fid, _refined(cfg.nx, cfg.refine), _refined(cfg.nt, cfg.refine))
        mu0, ga0 = _field_norms(base, fam)
        mu1, ga1 = _field_norms(fine, fam)
        b2 = bmo["norm"] ** 2
        rows.append({"function": fid, "bmo_o": bmo["norm"], "mu": mu0.norm, "gamma": ga0.norm,
                     "mu_refined": mu1.norm, "gamma_refined": ga1.norm,
                     "mu_ratio": mu0.norm / b2, "gamma_ratio": ga0.norm / b2,
                     "mu_ratio_refined": mu1.norm / b2, "gamma_ratio_refined": ga1.norm / b2,
                     "mu_drift": abs(mu1.norm - mu0.norm) / mu0.norm,
                     "gamma_drift": abs(ga1.norm - ga0.norm) / ga0.norm,
                     "gamma_minus_mu": max(ga0.norm - mu0.norm, ga1.norm - mu1.norm)})
    return rows


GOLDEN_BAND_PATH = Path(__file__).with_name("golden") / "equivalence_band.json"


def load_golden_band() -> dict:
    return json.loads(GOLDEN_BAND_PATH.read_text())


def write_golden_band(rows=None, margin: float = 0.15) -> dict:
    """Record the measured ratios and the band [min (1 - margin), max (1 + margin)]."""
    rows = rows if rows is not None else equivalence_rows()
    golden = {"lambda": 2.0, "margin": margin,
              "ratios": {r["function"]: {"mu": r["mu_ratio"], "gamma": r["gamma_ratio"]} for r in rows},
              "band": {}}
    for key in ("mu", "gamma"):
        vals = [r[f"{key}_ratio"] for r in rows]
        golden["band"][key] = [min(vals) * (1 - margin), max(vals) * (1 + margin)]
    GOLDEN_BAND_PATH.parent.mkdir(parents=True, exist_ok=True)
    GOLDEN_BAND_PATH.write_text(json.dumps(golden, indent=2, sort_keys=True) + "\n")
    return golden


def check_equivalence(rows=None) -> list[Check]:
    rows = rows if rows is not None else equivalence_rows()
    golden = load_golden_band()
    out = []
    for r in rows:
        fid = r["function"]
        g = golden["ratios"][fid]
        for key in ("mu", "gamma"):
            ratio = r[f"{key}_ratio"]
            out.append(Check("carleson", f"{key} ratio {fid} positive", ratio, 1e-12, "ge"))
            lo, hi = golden["band"][key]
            dev = max(lo - ratio, ratio - hi, 0.0)
            out.append(Check("carleson", f"{key} ratio {fid} inside golden band", dev, 0.0,
                             detail=f"{ratio:.6g} in [{lo:.6g}, {hi:.6g}]"))
            out.append(Check("carleson", f"{key} ratio {fid} regression vs golden",
                             abs(ratio - g[key]) / g[key], 0.05))
            out.append(Check("carleson", f"{key} norm {fid} refinement drift", r[f"{key}_drift"], 0.15))
        out.append(Check("carleson", f"gamma <= mu {fid}", r["gamma_minus_mu"], 1e-10))
    return out


def lebesgue_slope(k_lo: int = -4, k_hi: int = 6) -> tuple[float, list]:
    one = lambda X, T: np.ones_like(X)
    ls, norms = [], []
    for k in range(k_lo + 2, k_hi + 1):
        res = cb.carleson_norm(one, cb.BoxFamily((-3, 3), (k_lo, k)))
        ls.append(2.0 ** k)
        norms.append(res.norm)
    slope, _ = cb.power_fit(ls, norms)
    return slope, list(zip(ls, norms))


def log_growth_fit(k_lo: int = 16, k_hi: int = 60) -> tuple[float, np.ndarray]:
    f = get_entry("log_growth").function(2.0)
    bs = 2.0 ** np.arange(k_lo, k_hi + 1)
    avg = cb.size_averages(f, bs)
    p, _ = cb.power_fit(np.log(bs), avg)
    return p, avg


def check_negative_controls() -> list[Check]:
    slope, _ = lebesgue_slope()
    p, avg = log_growth_fit()
    return [
        Check("carleson", "Lebesgue density slope |s - 1|", abs(slope - 1.0), 0.05, detail=f"slope={slope:.6f}"),
        Check("carleson", "log(e+x) size-average exponent |p - 1|", abs(p - 1.0), 0.10, detail=f"p={p:.4f}"),
        Check("carleson", "log(e+x) size averages increasing", float(np.min(np.diff(avg))), 0.0, "ge"),
    ]


SEMIGROUP_TIMES = (0.1, 0.3, 1.0, 5.0)


def check_semigroup(lam: float = 2.0, ids=BOUNDED_IDS, s: float = 0.4, cfg=None) -> list[Check]:
    cfg = cfg or ExperimentConfig()
    out = []
    for fid in ids:
        fld = _catalog_field(lam, fid, cfg.nx, cfg.nt)
        # slices with t below ~3 x-grid spacings are not resolved by the spline
        idx = [int(np.argmin(np.abs(fld.t_nodes - t))) for t in SEMIGROUP_TIMES]
        res = semigroup_check(lam, fld, s, t_indices=idx)
        out.append(Check("carleson", f"semigroup P_s u(t) = u(t+s) {fid}", res["residual"], 1e-4))
    return out


def check_bmo_homogeneity() -> list[Check]:
    out = []
    fam = cb.BoxFamily((-4, 4), (-4, 4))
    for fid in BOUNDED_IDS:
        f = get_entry(fid).function(2.0)
        g = GridFunction.from_callable(lambda y, f=f: -2.5 * f(y), f.nodes, breakpoints=f.breakpoints,
                                       support=f.support, tail=f.tail)
        a, b = cb.bmo_o_norm(f, fam)["norm"], cb.bmo_o_norm(g, fam)["norm"]
        out.append(Check("carleson", f"bmo homogeneity {fid}", abs(b - 2.5 * a) / (2.5 * a), 1e-12))
    return out


# -- geometry ----------------------------------------------------------------

def check_a_constant() -> list[Check]:
    from .quadrature import QuadratureSpec, integrate_semi_infinite

    out = []
    for lam in (1.0, 2.0, 3.5):
        closed = geo.a_constant(lam)
        half = integrate_semi_infinite(lambda s: (s * s + 1.0) ** (-lam), 0.0,
                                       TailPolicy.power_decay(2 * lam),
                                       QuadratureSpec(abs_tol=1e-14, rel_tol=1e-12)).value
        out.append(Check("geometry", f"A quadrature vs Gamma lam={lam:g}", abs(2 * half - closed) / closed, 1e-8))
    for lam, x, t in ((2.0, 0.5, 1.0), (1.2, 2.0, -1.0), (3.5, 0.1, 3.0)):
        a = geo.a_constant(lam)
        out.append(Check("geometry", f"int K_x ds = A lam={lam:g} x={x:g} t={t:g}",
                         abs(geo.kernel_normalization(lam, x, t) - a) / a, 1e-8))
    return out


WEINSTEIN_BOX = ((0.5, 4.0), (0.5, 4.0))


def check_weinstein() -> list[Check]:
    out = []
    xr, tr = WEINSTEIN_BOX
    cases = []
    for lam in (1.2, 3.5):
        cases.append((lam, f"x^lam lam={lam:g}", lambda X, T, lam=lam: X ** lam))
        cases.append((lam, f"x^(1-lam) lam={lam:g}", lambda X, T, lam=lam: X ** (1 - lam)))
    cases.append((2.0, "P_t(chi_12) lam=2", geo.poisson_field_function(2.0, _chi())))
    for lam, name, u in cases:
        res = geo.residual_convergence(lam, u, xr, tr, n0=17, levels=3)
        out.append(Check("geometry", f"weinstein order {name}", min(res["orders"]), 1.8, "ge",
                         detail=" ".join(f"{m:.3e}" for m in res["max_residual"])))
    res = geo.residual_convergence(2.0, lambda X, T: X ** 2, xr, tr, n0=17, levels=1)
    out.append(Check("geometry", "weinstein residual x^2 lam=2", res["max_residual"][0], 1e-8))
    return out


def check_subharmonic(seed: int = 0, n: int = 20) -> list[Check]:
    out = []
    fields = [("P_t(chi_12) lam=2", geo.poisson_field_function(2.0, _chi())),
              ("x^lam lam=2", lambda X, T: X ** 2.0),
              ("P_t(rational_odd) lam=3.5",
               geo.poisson_field_function(3.5, get_entry("rational_odd").function(3.5)))]
    for name, u in fields:
        disks = geo.random_disks(n, (0.1, 10.0), (0.05, 5.0), seed=seed)
        res = geo.subharmonic_check(u, disks, tol=1e-6)
        worst = max((r["excess"] for r in res["rows"]), default=-math.inf)
        out.append(Check("geometry", f"subharmonic violations {name}", len(res["violations"]), 0,
                         detail=f"{len(res['rows'])} disks, max excess {worst:.3e}"))
        out.append(Check("geometry", f"subharmonic disks sampled {name}", len(res["rows"]), n, "ge"))
    return out


MEAN_CENTERS = ((0.8, 1.0), (1.0, 0.0), (2.5, -1.0))
MEAN_RADII = (0.2, 0.7, 1.0)


def mean_value_rows(lams=LAMBDAS) -> list[dict]:
    rows = []
    chi = _chi()
    for lam in lams:
        for r in MEAN_RADII:
            n = geo.calibrate_normalization(lam, r)
            leg = math.pi * legendre_p(lam - 1.0, math.cosh(r))
            for c in MEAN_CENTERS:
                ball = geo.HyperbolicBall(c[0], c[1], r)
                # shift the harmonic variable so that the ball sits in t > 0.5
                shift = max(0.0, 0.5 - ball.lowest_b2())
                rows.append({
                    "lambda": lam, "r": r, "a1": c[0], "a2": c[1], "N": n,
                    "legendre_delta": abs(n - leg) / leg,
                    "center_delta": abs(geo.calibrate_normalization(lam, r, c) - n) / n,
                    "power": geo.mean_value_check(lam, lambda b1, b2: b1 ** lam, c, r, n),
                    "dual_power": geo.mean_value_check(lam, lambda b1, b2: b1 ** (1 - lam), c, r, n),
                    "poisson_slice": geo.mean_value_check(lam, geo.poisson_field_function(lam, chi, shift), c, r, n),
                    "shift": shift,
                })
    return rows


def check_mean_value(rows=None) -> list[Check]:
    rows = rows if rows is not None else mean_value_rows()
    worst = {k: max(r[k] for r in rows) for k in
             ("legendre_delta", "center_delta", "power", "dual_power", "poisson_slice")}
    return [
        Check("geometry", "N(lam,r) vs pi P_(lam-1)(cosh r)", worst["legendre_delta"], 1e-8),
        Check("geometry", "N(lam,r) center independence", worst["center_delta"], 1e-10),
        Check("geometry", "mean value x^lam", worst["power"], 1e-10),
        Check("geometry", "mean value x^(1-lam)", worst["dual_power"], 1e-8),
        Check("geometry", "mean value Poisson slices", worst["poisson_slice"], 1e-4),
    ]


def check_ball_geometry(seed: int = 0) -> list[Check]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        a = (math.exp(rng.uniform(-2, 2)), rng.uniform(-3, 3))
        r = rng.uniform(0.05, 2.0)
        ball = geo.HyperbolicBall(a[0], a[1], r)
        p = geo.point_at_distance(a, r, rng.uniform(0, 2 * math.pi))
        c = ball.euclid_center
        worst = max(worst, abs(math.hypot(p[0] - c[0], p[1] - c[1]) - ball.euclid_radius) / ball.euclid_radius,
                    abs(geo.sigma(a, p) - math.cosh(r)) / math.cosh(r))
    return [Check("geometry", "hyperbolic circle = Euclidean circle", worst, 1e-12)]


SUITES = {
    "kernels": (check_kernel_routes, check_moments, check_kernel_bounds),
    "hankel": (check_hankel_isometry, check_hankel_runtime, check_hankel_involution, check_spectral_direct),
    "gfunction": (check_littlewood_paley,),
    "carleson": (check_equivalence, check_semigroup, check_negative_controls, check_bmo_homogeneity),
    "geometry": (check_a_constant, check_ball_geometry, check_weinstein, check_subharmonic, check_mean_value),
}

# checks known to fail when every tolerance is divided by 10: the log-growth
# fit exponent is 1.046, and the chi_12 semigroup residual (~1.1e-5) sits at
# the resolution limit of the default x-grid
EXPECTED_TIGHT_FAILURES = (
    "log(e+x) size-average exponent |p - 1|",
    "semigroup P_s u(t) = u(t+s) chi_12",
)


def verify(suite: str = "all", *, tighten: float = 1.0, policy: str = "strict", out=None) -> dict:
    """Run invariant suites.  ``policy="expected"`` tolerates the documented tight failures."""
    names = list(SUITES) if suite == "all" else [suite]
    for name in names:
        if name not in SUITES:
            raise KeyError(f"unknown suite {name!r}; known: all, {', '.join(SUITES)}")
    if policy not in ("strict", "expected"):
        raise ValueError("policy must be 'strict' or 'expected'")
    t0 = time.perf_counter()
    checks: list[Check] = []
    for name in names:
        for fn in SUITES[name]:
            checks.extend(c.tightened(tighten) for c in fn())
    failed = [c for c in checks if not c.passed]
    unexpected = [c for c in failed if not (tighten > 1 and c.name in EXPECTED_TIGHT_FAILURES)]
    ok = not failed if policy == "strict" else not unexpected
    summary = {"suite": suite, "tighten": tighten, "policy": policy, "passed": ok,
               "n_checks": len(checks), "n_failed": len(failed),
               "failed": [c.name for c in failed],
               "expected_failures": [c.name for c in failed if c not in unexpected],
               "seconds": round(time.perf_counter() - t0, 1),
               "checks": [c.to_dict() for c in checks]}
    if out is not None:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "verify.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
        (d / "verify.csv").write_text(_checks_csv(checks))
        if "geometry" in names:
            (d / "calibration.csv").write_text(geo.calibration_csv(geo.calibration_table(LAMBDAS, MEAN_RADII)))
    return summary


def _checks_csv(checks) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "name", "value", "relation", "tol", "passed", "detail"])
    for c in checks:
        w.writerow([c.suite, c.name, f"{c.value:.6e}", c.relation, f"{c.tol:.3e}", c.passed, c.detail])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# run

def _run_density(cfg: ExperimentConfig, lam: float, entry) -> dict:
    slope, pairs = lebesgue_slope(cfg.k_min + 2, cfg.k_max)
    confirmed = abs(slope - 1.0) <= 0.05
    return {"lambda": lam, "function": entry.id, "kind": "density",
            "carleson_norm": pairs[-1][1], "carleson_growth_slope": slope,
            "expected_bmo_o": entry.expected_bmo_o, "expected_carleson": entry.expected_carleson,
            "carleson_confirmed": confirmed, "passed": confirmed}


def _run_function(cfg: ExperimentConfig, lam: float, entry, out_dir: Path | None) -> dict:
    f = entry.function(lam)
    fam = _family(cfg)
    adm = cb.weighted_l1_check(lam, f)
    bmo = cb.bmo_o_norm(f, fam, drift_limit=cfg.bmo_drift)
    b_family = 2.0 ** cfg.j_max + 2.0 ** cfg.k_max
    far = cb.size_averages(f, [b_family, 2.0 ** 60])
    divergent = bool(far[1] > 1.5 * far[0])
    row = {"lambda": lam, "function": entry.id, "kind": "function",
           "power_weight_pass": adm["power_weight"]["pass"],
           "cauchy_weight_pass": adm["cauchy_weight"]["pass"],
           "bmo_o_norm": bmo["norm"], "bmo_unstable": bmo["unstable"], "bmo_divergent": divergent,
           "expected_bmo_o": entry.expected_bmo_o, "expected_carleson": entry.expected_carleson}
    if not adm["power_weight"]["pass"]:
        row.update(passed=False, note="rejected by the weighted-L1 check")
        return row
    grids = [(cfg.nx, cfg.nt), (_refined(cfg.nx, cfg.refine), _refined(cfg.nt, cfg.refine))]
    norms = []
    for k, (nx, nt) in enumerate(grids):
        fld = build_field(lam, f, geometric_grid(cfg.x_min, cfg.x_max, nx),
                          geometric_grid(cfg.t_min, cfg.t_max, nt), cfg.mode, check=False)
        mu, ga = _field_norms(fld, fam)
        norms.append((mu, ga))
        if k == 0 and out_dir is not None:
            stem = f"{entry.id}_lam{lam:g}"
            (out_dir / f"{stem}_mu_boxes.csv").write_text(cb.carleson_report_csv(mu))
            _write_plot_data(out_dir / f"{stem}_u.dat", fld)
    (mu0, ga0), (mu1, ga1) = norms
    drift = abs(mu1.norm - mu0.norm) / mu0.norm if mu0.norm > 0 else 0.0
    b2 = bmo["norm"] ** 2
    bmo_finite = not (divergent or bmo["unstable"])
    row.update({
        "mu_norm": mu0.norm, "gamma_norm": ga0.norm, "mu_norm_refined": mu1.norm,
        "gamma_norm_refined": ga1.norm, "mu_drift": drift,
        "mu_argmax": [mu0.argmax.a, mu0.argmax.b] if mu0.argmax else None,
        "mu_ratio": mu0.norm / b2 if bmo_finite else None,
        "gamma_ratio": ga0.norm / b2 if bmo_finite else None,
        "gamma_le_mu": ga0.norm <= mu0.norm + 1e-10,
        "boxes_skipped": len(mu0.skipped),
    })
    bmo_ok = bmo_finite == entry.expected_bmo_o
    carleson_ok = (drift <= cfg.refine_drift) if entry.expected_carleson else True
    row["bmo_confirmed"] = bmo_ok
    row["passed"] = bool(bmo_ok and carleson_ok and row["gamma_le_mu"])
    return row


def _write_plot_data(path: Path, fld) -> None:
    # gnuplot splot format: x t u, blank line between x rows
    lines = []
    for i, x in enumerate(fld.x_nodes):
        for j, t in enumerate(fld.t_nodes):
            lines.append(f"{x:.10g} {t:.10g} {fld.u[i, j]:.12g}")
        lines.append("")
    path.write_text("\n".join(lines) + "\n")


SUMMARY_COLUMNS = ("lambda", "function", "kind", "bmo_o_norm", "bmo_divergent", "mu_norm", "gamma_norm",
                   "mu_ratio", "gamma_ratio", "mu_drift", "carleson_growth_slope", "power_weight_pass",
                   "cauchy_weight_pass", "expected_bmo_o", "expected_carleson", "passed")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run(cfg: ExperimentConfig, out=None) -> dict:
    """Run every (lambda, function) pair of the configuration."""
    out_dir = Path(out if out is not None else cfg.output)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise OSError(f"output directory {out_dir} is not writable: {exc}") from exc
    entries = [(lam, get_entry(fid)) for lam in cfg.lambdas for fid in cfg.functions]

    def one(item):
        lam, entry = item
        if entry.kind == "density":
            return _run_density(cfg, lam, entry)
        return _run_function(cfg, lam, entry, out_dir)

    rows = _pmap(one, entries)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in SUMMARY_COLUMNS])
    (out_dir / "summary.csv").write_text(buf.getvalue())
    with open(out_dir / "ratios.dat", "w") as fh:
        fh.write("# lambda mu_ratio gamma_ratio function\n")
        for r in rows:
            if r.get("mu_ratio") is not None:
                fh.write(f"{r['lambda']:g} {r['mu_ratio']:.10g} {r['gamma_ratio']:.10g} {r['function']}\n")
    summary = {"config": cfg.to_dict(), "results": rows, "passed": all(r["passed"] for r in rows)}
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return summary


# ---------------------------------------------------------------------------
# probes and reports

def kernel_probe(lams=LAMBDAS, n: int = 64, refine: int = 2, out=None) -> list[dict]:
    rows = []
    for lam in lams:
        base = kernel_bound_report(lam, *bound_grids(n))
        fine = kernel_bound_report(lam, *bound_grids(_refined(n, refine)))
        for b, f in zip(base, fine):
            f = dict(f)
            f["sup_base"] = b["sup"]
            f["drift"] = abs(f["sup"] - b["sup"]) / b["sup"]
            rows.append(f)
    if out is not None:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "kernel_bounds.csv").write_text(bound_report_to_csv(rows))
        (d / "kernel_bounds.json").write_text(json.dumps(rows, indent=2, sort_keys=True))
    return rows


def meanvalue(lams=LAMBDAS, seed: int = 0, out=None) -> dict:
    rows = mean_value_rows(lams)
    calib = geo.calibration_table(lams, MEAN_RADII)
    disks = geo.random_disks(20, (0.1, 10.0), (0.05, 5.0), seed=seed)
    sub = geo.subharmonic_check(geo.poisson_field_function(2.0, _chi()), disks)
    result = {"mean_value": rows, "calibration": calib,
              "subharmonic_violations": len(sub["violations"]), "disks": len(sub["rows"])}
    if out is not None:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / "calibration.csv").write_text(geo.calibration_csv(calib))
        cols = list(rows[0]) if rows else []
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) for k, v in r.items()})
        (d / "mean_value.csv").write_text(buf.getvalue())
        (d / "meanvalue.json").write_text(json.dumps(result, indent=2, sort_keys=True))
    return result


def report(out) -> str:
    """Plain-text equivalence table from a finished run directory."""
    data = json.loads((Path(out) / "summary.json").read_text())
    lines = [f"{'lambda':>6} {'function':<18} {'bmo_o':>10} {'|mu|_C':>10} {'|gamma|_C':>10} "
             f"{'mu/bmo^2':>10} {'expect':>8} {'passed':>6}"]

    def num(v):
        return f"{v:10.4g}" if isinstance(v, (int, float)) and not isinstance(v, bool) else f"{'-':>10}"

    for r in data["results"]:
        expect = f"{'y' if r['expected_bmo_o'] else 'n'}/{'y' if r['expected_carleson'] else 'n'}"
        norm = r.get("mu_norm", r.get("carleson_norm"))
        lines.append(f"{r['lambda']:6g} {r['function']:<18} {num(r.get('bmo_o_norm'))} {num(norm)} "
                     f"{num(r.get('gamma_norm'))} {num(r.get('mu_ratio'))} {expect:>8} {str(r['passed']):>6}")
    lines.append(f"overall: {'PASS' if data['passed'] else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    (Path(out) / "report.txt").write_text(text)
    return text
