"""The ten acceptance criteria, each asserted at its stated tolerance.

One ``verify(all)`` run (tolerances tightened 10x under the "expected"
policy) supplies most measured values; the check values themselves do not
depend on the tightening, so every criterion below re-asserts its own
tolerance on the raw numbers.
"""

import math
import time

import numpy as np
import pytest

from bessel_poisson_lab import lab

LAMBDAS = {1.2, 2.0, 3.5}


class Suite:
    def __init__(self, summary, seconds):
        self.summary = summary
        self.seconds = seconds
        self.checks = summary["checks"]

    def values(self, prefix, suite=None):
        out = [c["value"] for c in self.checks
               if c["name"].startswith(prefix) and (suite is None or c["suite"] == suite)]
        assert out, f"no check named {prefix!r}"
        return out


@pytest.fixture(scope="module")
def suite():
    t0 = time.perf_counter()
    summary = lab.verify("all", tighten=10.0, policy="expected")
    return Suite(summary, time.perf_counter() - t0)


@pytest.fixture(scope="module")
def equivalence(suite):
    # reuses the fields cached by the verify run
    return lab.equivalence_rows()


def test_c1_hankel_isometry(suite, acceptance_line):
    dev = suite.values("isometry lam=")
    runtime = suite.values("runtime N=1024")
    ok = len(dev) == 9 and max(dev) <= 1e-6 and len(runtime) == 3 and max(runtime) < 10.0
    acceptance_line(1, "Hankel isometry", ok,
                    f"max |ratio-1| {max(dev):.2e} (tol 1e-6), max runtime {max(runtime):.2f}s (< 10s)")
    assert ok


def test_c2_littlewood_paley(suite, acceptance_line):
    dev = suite.values("|g F|^2/|F|^2")
    ok = len(dev) == 3 and max(dev) <= 1e-3
    acceptance_line(2, "Littlewood-Paley identity", ok, f"max rel dev from 1/4 {max(dev):.2e} (tol 1e-3)")
    assert ok


def test_c3_moments(suite, acceptance_line):
    m1 = suite.values("int P y^lam dy = x^lam")
    m2 = suite.values("int x^-lam y^lam P dy = 1")
    ok = len(m1) == len(m2) == 3 and max(m1 + m2) <= 1e-6
    acceptance_line(3, "moment identities", ok,
                    f"max rel err {max(m1):.2e} / {max(m2):.2e} over 3x3x3 (tol 1e-6)")
    assert ok


def test_c4_spectral_and_semigroup(suite, acceptance_line):
    spec = suite.values("spectral/direct")
    semi = suite.values("semigroup P_s u(t) = u(t+s)")
    ok = max(spec) <= 1e-5 and len(semi) == 3 and max(semi) <= 1e-4
    acceptance_line(4, "spectral/direct and semigroup", ok,
                    f"spectral {max(spec):.2e} (tol 1e-5), semigroup {max(semi):.2e} (tol 1e-4)")
    assert ok


def test_c5_kernel_bounds(acceptance_line):
    rows = lab.kernel_probe()
    sups = [r["sup"] for r in rows]
    drift = [r["drift"] for r in rows]
    ok = len(rows) == 9 and all(math.isfinite(s) and s > 0 for s in sups) and max(drift) <= 0.05
    acceptance_line(5, "kernel bounds", ok, f"all sups finite, max drift {max(drift):.2%} (tol 5%)")
    assert ok


def test_c6_a_constant(suite, acceptance_line):
    a = suite.values("A quadrature vs Gamma")
    k = suite.values("int K_x ds = A")
    ok = len(a) == 3 and len(k) == 3 and max(a + k) <= 1e-8
    acceptance_line(6, "A-constant and K_x normalization", ok,
                    f"A {max(a):.2e}, K_x {max(k):.2e} (tol 1e-8)")
    assert ok


def test_c7_weinstein(suite, acceptance_line):
    orders = {name: suite.values(f"weinstein order {name}") for name in ("x^lam", "x^(1-lam)", "P_t(chi_12)")}
    worst = min(min(v) for v in orders.values())
    ok = worst >= 1.8
    acceptance_line(7, "lambda-harmonicity", ok,
                    ", ".join(f"{k} {min(v):.2f}" for k, v in orders.items()) + " (>= 1.8)")
    assert ok


def test_c8_subharmonic(suite, acceptance_line):
    violations = suite.values("subharmonic violations")
    disks = suite.values("subharmonic disks sampled")
    ok = max(violations) == 0 and min(disks) >= 20
    acceptance_line(8, "subharmonicity of u^2", ok,
                    f"{int(sum(violations))} violations over {len(disks)} fields x >= {int(min(disks))} disks")
    assert ok


def test_c9_mean_value(suite, acceptance_line):
    leg = suite.values("N(lam,r) vs pi P_(lam-1)(cosh r)")[0]
    power = suite.values("mean value x^lam")[0]
    dual = suite.values("mean value x^(1-lam)")[0]
    slices = suite.values("mean value Poisson slices")[0]
    ok = leg <= 1e-8 and power <= 1e-10 and dual <= 1e-8 and slices <= 1e-4
    acceptance_line(9, "mean-value calibration", ok,
                    f"Legendre {leg:.1e}, x^lam {power:.1e}, x^(1-lam) {dual:.1e} (1e-8), "
                    f"slices {slices:.1e} (1e-4)")
    assert ok


def test_c10_equivalence(suite, equivalence, acceptance_line):
    band = lab.load_golden_band()["band"]
    problems = []
    for r in equivalence:
        for key in ("mu", "gamma"):
            ratio = r[f"{key}_ratio"]
            lo, hi = band[key]
            if not (math.isfinite(ratio) and ratio > 0 and lo <= ratio <= hi):
                problems.append(f"{r['function']} {key} ratio {ratio:.4g} outside [{lo:.4g}, {hi:.4g}]")
            if r[f"{key}_drift"] > 0.15:
                problems.append(f"{r['function']} {key} drift {r[f'{key}_drift']:.2%}")
        if r["gamma_minus_mu"] > 1e-10:
            problems.append(f"{r['function']} gamma exceeds mu")
    slope, _ = lab.lebesgue_slope()
    p, _ = lab.log_growth_fit()
    if abs(slope - 1) > 0.05:
        problems.append(f"Lebesgue slope {slope:.4f}")
    if abs(p - 1) > 0.10:
        problems.append(f"log(e+x) exponent {p:.4f}")
    if suite.seconds >= 15 * 60:
        problems.append(f"verify(all) took {suite.seconds:.0f}s")
    # the tightened run must fail only in the documented places
    if not suite.summary["passed"] or set(suite.summary["failed"]) - set(lab.EXPECTED_TIGHT_FAILURES):
        problems.append(f"unexpected tight failures {suite.summary['failed']}")
    ok = not problems and {r["function"] for r in equivalence} == {"chi_12", "bump", "rational_odd"}
    drift = max(max(r["mu_drift"], r["gamma_drift"]) for r in equivalence)
    acceptance_line(10, "Carleson / BMO_o equivalence", ok,
                    f"ratios in golden band, max drift {drift:.2%} (15%), Lebesgue slope {slope:.4f}, "
                    f"log fit p {p:.3f}, verify(all) {suite.seconds:.0f}s"
                    + ("" if ok else "; " + "; ".join(problems)))
    assert ok
