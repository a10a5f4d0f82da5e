"""Batch CLI for the lab: deterministic reports from scenarios and suites.

Exit status: 0 all assertions passed, 1 ran with failing assertions,
2 configuration or usage error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .. import kernel_backend
from ..derivatives import local_image_gauge, metric_directional_derivative, step_schedule
from ..errors import ConfigError, InputError
from ..seminorm import direction_fan, fit_metric_differential
from .config import LabConfig, load_config
from .reports import write_report
from .scenarios import catalog, get_scenario
from .suites import SuiteParams, run_suite, suite_names

EXIT_OK = 0
EXIT_FAILURES = 1
EXIT_CONFIG = 2


def _add_common(sp):
    sp.add_argument("--config", help="INI config path")
    sp.add_argument("--out", help="output directory (default: out)")
    sp.add_argument("--seed", type=int, help="random seed override")
    sp.add_argument("--k", type=int, help="gauge truncation length override")
    sp.add_argument("--tol", type=float, help="finite-difference tolerance override")
    sp.add_argument("--scenario", help="scenario name override")


def _build_parser():
    p = argparse.ArgumentParser(prog="metricdiff-lab",
                                description="metric differential verification lab")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("list-scenarios", help="print the scenario catalog")
    _add_common(sp)

    sp = sub.add_parser("run", help="run the suites named by the config")
    _add_common(sp)
    sp.add_argument("--suite", action="append", default=None,
                    help="suite name (repeatable; overrides config)")

    sp = sub.add_parser("md-at-point", help="metric differential at one point")
    _add_common(sp)
    sp.add_argument("--point", required=True, help="comma-separated coordinates")
    sp.add_argument("--direction", help="comma-separated direction (default e1)")

    for name, suite in (("gauge-audit", "gauge-audit"),
                        ("sobolev-report", "sobolev-restriction"),
                        ("w1p-check", "w1p-diff")):
        sp = sub.add_parser(name, help=f"run the {suite} suite")
        _add_common(sp)
        sp.set_defaults(fixed_suite=suite)

    sp = sub.add_parser("verify-all", help="run every scenario's declared suites")
    _add_common(sp)
    return p


def _merge_config(args) -> LabConfig:
    cfg = load_config(args.config) if args.config else LabConfig()
    if args.scenario:
        cfg.scenario = args.scenario
    if args.out:
        cfg.out = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.k is not None:
        cfg.k = args.k
    if args.tol is not None:
        cfg.tol = args.tol
    if getattr(args, "suite", None):
        cfg.suites = list(args.suite)
    if getattr(args, "fixed_suite", None):
        cfg.suites = [args.fixed_suite]
    return cfg


def _run_reports(cfg: LabConfig, scenario_names, suites_for) -> int:
    params = cfg.suite_params()
    any_fail = False
    for name in scenario_names:
        scn = get_scenario(name)
        for suite in suites_for(scn):
            rep = run_suite(scn, suite, params)
            out_dir = write_report(rep, cfg.out)
            status = "pass" if rep.passed else "FAIL"
            any_fail = any_fail or not rep.passed
            print(f"[{status}] {scn.name} :: {suite} -> {out_dir}")
            for a in rep.assertions:
                cmp = {"le": "<=", "ge": ">=", "eq": "=="}[a.direction]
                mark = "ok" if a.passed else "FAIL"
                print(f"    {mark:4s} {a.name}: {a.measured:.6g} {cmp} {a.tolerance:.6g}")
    return EXIT_FAILURES if any_fail else EXIT_OK


def cmd_list_scenarios(cfg: LabConfig) -> int:
    for s in catalog():
        print(f"{s.name:20s} {s.description}")
        print(f"{'':20s} suites: {', '.join(s.suites)}")
    print(f"\nkernel backend: {kernel_backend}")
    return EXIT_OK


def cmd_run(cfg: LabConfig) -> int:
    if not cfg.scenario:
        raise ConfigError("run needs a scenario (config [scenario] name or --scenario)")
    if not cfg.suites:
        raise ConfigError(f"run needs suites; available: {', '.join(suite_names())}")
    for s in cfg.suites:
        if s not in suite_names():
            raise ConfigError(f"unknown suite {s!r}; available: {', '.join(suite_names())}")
    return _run_reports(cfg, [cfg.scenario], lambda scn: cfg.suites)


def cmd_md_at_point(cfg: LabConfig, point: str, direction: str | None) -> int:
    if not cfg.scenario:
        raise ConfigError("md-at-point needs --scenario or a config")
    scn = get_scenario(cfg.scenario)
    f = scn.oracle()
    x = np.array([float(v) for v in point.split(",")])
    if direction:
        nu = np.array([float(v) for v in direction.split(",")])
        dirs = nu[None, :]
    else:
        dirs = direction_fan(f.domain.ndim)
    tol = cfg.tol if cfg.tol is not None else scn.fd_tol
    halvings = cfg.halvings if cfg.halvings is not None else scn.halvings
    steps = step_schedule(f.domain.clearance(x), 1.0, cfg.h0_fraction, halvings)
    g = local_image_gauge(f, x, cfg.k)
    sigma = fit_metric_differential(f, g, x, steps, tol)
    out = {
        "scenario": scn.name,
        "point": [float(v) for v in x],
        "k": cfg.k,
        "directions": [],
    }
    for nu in dirs:
        est = metric_directional_derivative(f, x, nu, steps, tol)
        entry = {
            "direction": [float(v) for v in nu],
            "metric_quotient": est.value,
            "converged": est.converged,
            "seminorm": float(sigma(nu)),
        }
        if scn.analytic_md is not None:
            entry["analytic"] = float(scn.analytic_md(x, nu))
        out["directions"].append(entry)
    print(json.dumps(out, sort_keys=True, indent=2))
    return EXIT_OK


def cmd_verify_all(cfg: LabConfig) -> int:
    return _run_reports(cfg, [s.name for s in catalog()], lambda scn: scn.suites)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "list-scenarios":
            return cmd_list_scenarios(cfg)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "md-at-point":
            return cmd_md_at_point(cfg, args.point, args.direction)
        if args.command in ("gauge-audit", "sobolev-report", "w1p-check"):
            if not cfg.scenario:
                raise ConfigError(f"{args.command} needs --scenario or a config")
            return _run_reports(cfg, [cfg.scenario], lambda scn: cfg.suites)
        if args.command == "verify-all":
            return cmd_verify_all(cfg)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, InputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
