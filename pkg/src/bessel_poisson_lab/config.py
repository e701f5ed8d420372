"""Experiment configuration read from TOML.

Grammar (every table and key is optional; defaults shown)::

    [experiment]
    lambdas   = [2.0]                 # each > 0; Carleson experiments want > 1
    functions = ["chi_12", "bump", "rational_odd", "log_growth", "lebesgue_density"]
    mode      = "direct"              # "direct" or "spectral"
    seed      = 0                     # only used for random disk sampling
    refine    = 2                     # grid refinement factor for drift checks

    [grid]
    x_min = 0.01
    x_max = 100.0
    nx    = 256
    t_min = 0.01
    t_max = 20.0
    nt    = 128

    [family]                          # dyadic Carleson boxes / BMO intervals
    j_min = -6
    j_max = 6
    k_min = -6
    k_max = 6

    [tolerances]
    refine_drift = 0.15               # allowed relative change under refinement
    bmo_drift    = 0.10

    [output]
    directory = "bpl-out"
"""

from __future__ import annotations

import logging
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .catalog import CATALOG

__all__ = ["ExperimentConfig", "load_config", "ConfigError"]

log = logging.getLogger(__name__)


class ConfigError(ValueError):
    pass


_DEFAULT_FUNCTIONS = ("chi_12", "bump", "rational_odd", "log_growth", "lebesgue_density")


@dataclass(frozen=True)
class ExperimentConfig:
    lambdas: tuple = (2.0,)
    functions: tuple = _DEFAULT_FUNCTIONS
    mode: str = "direct"
    seed: int = 0
    refine: int = 2
    x_min: float = 1e-2
    x_max: float = 1e2
    nx: int = 256
    t_min: float = 1e-2
    t_max: float = 20.0
    nt: int = 128
    j_min: int = -6
    j_max: int = 6
    k_min: int = -6
    k_max: int = 6
    refine_drift: float = 0.15
    bmo_drift: float = 0.10
    output: str = "bpl-out"

    def __post_init__(self):
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "functions", tuple(self.functions))
        for lam in self.lambdas:
            if not lam > 0:
                raise ConfigError(f"lambda must be > 0, got {lam}")
            if lam <= 1:
                log.warning("lambda = %g <= 1: the Carleson characterisation assumes lambda > 1", lam)
        for name in self.functions:
            if name not in CATALOG:
                raise ConfigError(f"unknown test function id {name!r}")
        if self.mode not in ("direct", "spectral"):
            raise ConfigError(f"mode must be 'direct' or 'spectral', got {self.mode!r}")
        if not (0 < self.x_min < self.x_max and 0 < self.t_min < self.t_max):
            raise ConfigError("grid ranges must satisfy 0 < min < max")
        if self.nx < 5 or self.nt < 5:
            raise ConfigError("need at least 5 nodes per direction")
        if self.refine < 1:
            raise ConfigError("refine must be >= 1")
        if self.j_min > self.j_max or self.k_min > self.k_max:
            raise ConfigError("empty box-family window")

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "experiment": {"lambdas", "functions", "mode", "seed", "refine"},
    "grid": {"x_min", "x_max", "nx", "t_min", "t_max", "nt"},
    "family": {"j_min", "j_max", "k_min", "k_max"},
    "tolerances": {"refine_drift", "bmo_drift"},
    "output": {"directory"},
}


def parse_config(data: dict) -> ExperimentConfig:
    kw = {}
    for section, body in data.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
        if not isinstance(body, dict):
            raise ConfigError(f"[{section}] must be a table")
        for key, value in body.items():
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}]")
            kw["output" if key == "directory" else key] = value
    known = {f.name for f in fields(ExperimentConfig)}
    assert set(kw) <= known
    return ExperimentConfig(**kw)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text()
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data)
