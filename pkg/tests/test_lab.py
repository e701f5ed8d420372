import json

import numpy as np
import pytest

from bessel_poisson_lab import lab


def test_check_relations_and_tightening():
    c = lab.Check("s", "n", 0.5, 1.0)
    assert c.passed and not c.tightened(10).passed
    assert lab.Check("s", "n", 2.0, 1.0, "ge").passed
    assert lab.Check("s", "n", 2.0, 1.0, "ge").tightened(10).tol == 1.0
    assert lab.Check("s", "t", 3.0, 10.0, tightenable=False).tightened(10).passed
    assert not lab.Check("s", "n", float("nan"), 1.0).passed


def test_check_json_with_numpy_values():
    d = lab.Check("s", "n", np.float64(0.1), 1.0).to_dict()
    assert json.loads(json.dumps(d))["passed"] is True


def test_thread_limit(monkeypatch):
    monkeypatch.setenv("BPL_THREADS", "3")
    assert lab.thread_limit() == 3
    monkeypatch.setenv("BPL_THREADS", "0")
    assert lab.thread_limit() == 1
    monkeypatch.setenv("BPL_THREADS", "many")
    assert lab.thread_limit() >= 1


def test_pmap_preserves_order(monkeypatch):
    monkeypatch.setenv("BPL_THREADS", "4")
    assert lab._pmap(lambda v: v * v, range(10)) == [v * v for v in range(10)]


def test_gaussian_catalog():
    cat = lab.gaussian_catalog(2.0, n=64)
    assert [F.label for F in cat] == ["gauss", "gauss_y2", "gauss_narrow"]
    assert all(F.nodes.size == 64 for F in cat)


def test_verify_rejects_unknown():
    with pytest.raises(KeyError):
        lab.verify("nope")
    with pytest.raises(ValueError):
        lab.verify("gfunction", policy="lenient")


def test_golden_band_is_consistent():
    g = lab.load_golden_band()
    for fid, ratios in g["ratios"].items():
        for key in ("mu", "gamma"):
            lo, hi = g["band"][key]
            assert lo < ratios[key] < hi
    assert g["lambda"] == 2.0 and g["margin"] == 0.15
