"""Lab configuration: INI sections scenario / gauge / schedules / suites.

Example::

    [scenario]
    name = s1-linear
    target = lp(2,inf)          ; optional space descriptor (linear scenarios)

    [gauge]
    k = 32

    [schedules]
    h0_fraction = 16
    halvings = 8
    tol = 1e-6

    [suites]
    run = md-consistency, norm-identity
    seed = 0
    points = 5

    [dual]
    set = coordinate, fan:32    ; named catalogs and explicit:r1 r2|r3 r4 rows

Command-line flags override file values.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError
from .suites import SuiteParams

__all__ = ["LabConfig", "load_config"]


@dataclass
class LabConfig:
    scenario: str = None
    target: str = None
    suites: list = field(default_factory=list)
    k: int = 32
    seed: int = 0
    points: int = 5
    tol: float = None
    halvings: int = None
    h0_fraction: float = 16.0
    out: str = "out"
    dual_set: str = None

    def suite_params(self) -> SuiteParams:
        return SuiteParams(
            k=self.k,
            seed=self.seed,
            points=self.points,
            tol=self.tol,
            halvings=self.halvings,
            h0_fraction=self.h0_fraction,
            dual_spec=self.dual_set,
        )


def _get(cp, section, key, cast, default):
    if cp.has_option(section, key):
        raw = cp.get(section, key)
        try:
            return cast(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for [{section}] {key}: {raw!r}") from exc
    return default


def load_config(path) -> LabConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config file not found: {p}")
    cp = configparser.ConfigParser()
    try:
        cp.read(p, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"unparseable config {p}: {exc}") from exc
    cfg = LabConfig()
    cfg.scenario = _get(cp, "scenario", "name", str, None)
    cfg.target = _get(cp, "scenario", "target", str, None)
    cfg.dual_set = _get(cp, "dual", "set", str, None)
    cfg.k = _get(cp, "gauge", "k", int, cfg.k)
    cfg.h0_fraction = _get(cp, "schedules", "h0_fraction", float, cfg.h0_fraction)
    cfg.halvings = _get(cp, "schedules", "halvings", int, cfg.halvings)
    cfg.tol = _get(cp, "schedules", "tol", float, cfg.tol)
    run = _get(cp, "suites", "run", str, "")
    cfg.suites = [s.strip() for s in run.split(",") if s.strip()]
    cfg.seed = _get(cp, "suites", "seed", int, cfg.seed)
    cfg.points = _get(cp, "suites", "points", int, cfg.points)
    cfg.out = _get(cp, "suites", "out", str, cfg.out)
    return cfg
