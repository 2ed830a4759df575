"""Command line entry point.

Exit codes: 0 success or feasible, 1 infeasible or failed, 2 usage error,
3 internal error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .formulation import build_relaxation
from .harness import ExperimentConfig, run_experiment
from .lpcore import BACKENDS, export_mps
from .model import (GeneratorParams, InstanceFormatError, dump_instance, generate_instance,
                    instance_to_dict, load_instance, validate_instance)
from .oracle import OracleLimits
from .routing import RefinementConfig
from .solution import METHODS, run_method
from .validate import validate_solution

OK, FAILED, USAGE, INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _write(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load(path: str):
    try:
        inst = load_instance(path)
    except (OSError, InstanceFormatError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read instance {path}: {exc}") from exc
    problems = validate_instance(inst)
    if problems:
        raise UsageError("invalid instance: " + "; ".join(f"{v.code} ({v.detail})" for v in problems))
    return inst


def cmd_generate(args) -> int:
    params = GeneratorParams()
    if args.params:
        params = GeneratorParams.from_dict(json.loads(Path(args.params).read_text()))
    overrides = {"node_count": args.nodes, "link_count": args.links, "cloud_count": args.clouds,
                 "service_count": args.services, "sfc_length": args.sfc_length, "seed": args.seed}
    params = replace(params, **{k: v for k, v in overrides.items() if v is not None})
    inst = generate_instance(params)
    _write(json.dumps(instance_to_dict(inst), indent=1) + "\n", args.output)
    return OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    if args.sigma is not None:
        inst = replace(inst, sigma=args.sigma)
    if args.paths is not None:
        inst = replace(inst, path_budget=args.paths)
    config = RefinementConfig(rho=args.rho, iter_max=args.iter_max)
    sol = run_method(inst, args.method, config, args.backend,
                     OracleLimits(time_cap=args.time_cap))
    _write(sol.dumps(inst), args.output)
    if not sol.feasible:
        print(f"{args.method}: {sol.status}" + (f" ({sol.note})" if sol.note else ""),
              file=sys.stderr)
    return OK if sol.feasible else FAILED


def cmd_validate(args) -> int:
    inst = _load(args.instance)
    try:
        doc = json.loads(Path(args.solution).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read solution {args.solution}: {exc}") from exc
    rep = validate_solution(inst, doc)
    print(json.dumps(rep.to_dict(), indent=1))
    return OK if rep.feasible else FAILED


def cmd_experiment(args) -> int:
    try:
        config = ExperimentConfig.load(args.config)
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        raise UsageError(f"bad experiment config: {exc}") from exc
    if args.output_dir:
        config = replace(config, output_dir=args.output_dir)
    result = run_experiment(config)
    sys.stdout.write(result.metrics_csv())
    if result.budget_violations:
        print("LP solve budget exceeded: " + ", ".join(result.budget_violations), file=sys.stderr)
        return INTERNAL
    return OK


def cmd_export_mps(args) -> int:
    inst = _load(args.instance)
    model, _ = build_relaxation(inst)
    exp = export_mps(model)
    _write(exp.text, args.output)
    if args.map:
        Path(args.map).write_text(exp.mangling_table())
    return OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netslice", description="NFV network slicing by LP rounding and refinement")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random instance as JSON")
    g.add_argument("--params", help="JSON file with generator parameters")
    g.add_argument("--nodes", type=int)
    g.add_argument("--links", type=int, help="directed link count (even)")
    g.add_argument("--clouds", type=int)
    g.add_argument("--services", type=int)
    g.add_argument("--sfc-length", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("instance")
    s.add_argument("--method", choices=METHODS, default="lprr")
    s.add_argument("--sigma", type=float)
    s.add_argument("--paths", type=int, help="path budget per segment")
    s.add_argument("--rho", type=float, default=2.0)
    s.add_argument("--iter-max", type=int, default=5)
    s.add_argument("--seed", type=int, default=0,
                   help="accepted for uniformity; all solvers are deterministic")
    s.add_argument("--backend", choices=BACKENDS, default="simplex")
    s.add_argument("--time-cap", type=float, default=60.0, help="oracle time cap in seconds")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_solve)

    v = sub.add_parser("validate", help="check a solution against an instance")
    v.add_argument("instance")
    v.add_argument("solution")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("experiment", help="run a sweep from a JSON config")
    e.add_argument("config")
    e.add_argument("--output-dir")
    e.set_defaults(func=cmd_experiment)

    m = sub.add_parser("export-mps", help="write the LP relaxation in fixed MPS format")
    m.add_argument("instance")
    m.add_argument("-o", "--output")
    m.add_argument("--map", help="where to write the name mangling table")
    m.set_defaults(func=cmd_export_mps)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE
    except ValueError as exc:
        if args.command in ("generate", "solve"):
            print(f"error: {exc}", file=sys.stderr)
            return USAGE
        raise
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return INTERNAL
