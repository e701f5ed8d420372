"""Built-in test functions, each tagged with whether it is expected to be in
BMO_o and whether its gradient measure is expected to be Carleson."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .hankel import GridFunction
from .quadrature import TailPolicy

__all__ = ["CatalogEntry", "CATALOG", "get_entry", "BOUNDED_IDS"]

_NODES = np.geomspace(1e-2, 1e2, 256)


def _chi_12(lam: float) -> GridFunction:
    return GridFunction.from_callable(
        lambda y: ((y > 1) & (y < 2)).astype(float), _NODES, breakpoints=(1.0, 2.0),
        support=(1.0, 2.0), tail=TailPolicy.truncate_at(2.0), label="chi_12")


def _bump_values(y):
    y = np.asarray(y, dtype=float)
    s = (y - 1.5) / 0.5
    inside = np.abs(s) < 1
    out = np.zeros_like(y)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def _bump(lam: float) -> GridFunction:
    return GridFunction.from_callable(_bump_values, _NODES, support=(1.0, 2.0),
                                      tail=TailPolicy.truncate_at(2.0),
                                      feature_window=(1.0, 2.0), label="bump")


def _rational_odd(lam: float) -> GridFunction:
    return GridFunction.from_callable(lambda y: y / (1.0 + y * y), _NODES,
                                      tail=TailPolicy.power_decay(1.0),
                                      feature_window=(0.05, 20.0), head_exponent=1.0,
                                      label="rational_odd")


def _power_lambda(lam: float) -> GridFunction:
    return GridFunction.from_callable(lambda y: np.asarray(y, dtype=float) ** lam, _NODES,
                                      tail=TailPolicy.power_decay(-lam), head_exponent=lam,
                                      label="power_lambda")


def _log_growth(lam: float) -> GridFunction:
    # log grows slower than any power; -0.05 is a safe growth exponent for the tail cut
    return GridFunction.from_callable(lambda y: np.log(math.e + np.asarray(y, dtype=float)), _NODES,
                                      tail=TailPolicy.power_decay(-0.05),
                                      feature_window=(0.1, 10.0), label="log_growth")


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    description: str
    expected_bmo_o: bool
    expected_carleson: bool
    kind: str  # "function" or "density"
    bounded: bool
    build: Callable | None = None

    def function(self, lam: float) -> GridFunction:
        if self.build is None:
            raise TypeError(f"{self.id} is a density-level entry and has no boundary function")
        return self.build(lam)


CATALOG = {
    e.id: e for e in (
        CatalogEntry("chi_12", "indicator of (1, 2)", True, True, "function", True, _chi_12),
        CatalogEntry("bump", "smooth bump supported in [1, 2]", True, True, "function", True, _bump),
        CatalogEntry("rational_odd", "x / (1 + x^2)", True, True, "function", True, _rational_odd),
        # P_t(y^lam) = x^lam is annihilated by both components of the lambda-gradient
        CatalogEntry("power_lambda", "y^lam (null solution of the gradient)", False, True,
                     "function", False, _power_lambda),
        CatalogEntry("log_growth", "log(e + x), negative control", False, False,
                     "function", False, _log_growth),
        CatalogEntry("lebesgue_density", "dx dt, density-level negative control", False, False,
                     "density", False, None),
    )
}

BOUNDED_IDS = tuple(k for k, e in CATALOG.items() if e.bounded)


def get_entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown test function id {name!r}; known: {', '.join(CATALOG)}") from None
