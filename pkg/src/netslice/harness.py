"""Experiment runner: instance families, method runs, validation and metrics."""
from __future__ import annotations

import csv
import io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any

from .model import GeneratorParams, generate_instance
from .oracle import OracleLimits
from .routing import RefinementConfig
from .solution import METHODS, run_method
from .validate import validate_solution

METRICS_HEADER = ["method", "k", "feasible_count", "mean_activated", "mean_wall_ms", "time_ratio"]
TIMING_HEADER = ["method", "k", "mean_wall_ms", "time_ratio"]
BASELINE = "lpr_baseline"


@dataclass(frozen=True)
class ExperimentConfig:
    generator: GeneratorParams = field(default_factory=GeneratorParams)
    service_counts: tuple[int, ...] = (1, 2, 3, 4, 5, 6)
    seeds: int = 20
    base_seed: int = 0
    methods: tuple[str, ...] = ("lprr", "lpr_baseline")
    output_dir: str | None = "experiment-out"
    sigma: float = 0.001
    path_budget: int = 2
    rho: float = 2.0
    iter_max: int = 5
    backend: str = "simplex"
    oracle_limits: OracleLimits = field(default_factory=OracleLimits)
    workers: int = 1

    def __post_init__(self) -> None:
        if not self.service_counts:
            raise ValueError("service_counts must not be empty")
        if self.seeds < 1:
            raise ValueError("seeds must be >= 1")
        bad = set(self.methods) - set(METHODS)
        if bad or not self.methods:
            raise ValueError(f"methods must be a non-empty subset of {METHODS}")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        data = dict(data)
        if "generator" in data:
            data["generator"] = GeneratorParams.from_dict(data["generator"])
        if "oracle_limits" in data:
            data["oracle_limits"] = OracleLimits(**data["oracle_limits"])
        for key in ("service_counts", "methods"):
            if key in data:
                data[key] = tuple(data[key])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown experiment settings: {sorted(unknown)}")
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def instance_seed(self, k: int, index: int) -> int:
        return self.base_seed * 1_000_000 + k * 1000 + index


@dataclass
class ExperimentResult:
    records: list[dict[str, Any]]
    metrics: list[dict[str, Any]]
    timings: list[dict[str, Any]]
    budget_violations: list[str]

    def metrics_csv(self) -> str:
        return _csv(METRICS_HEADER, self.metrics)

    def timings_csv(self) -> str:
        return _csv(TIMING_HEADER, self.timings)


def _csv(header: list[str], rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def _fmt(val: float | None) -> str:
    return "" if val is None else f"{val:.6f}"


def run_instance(config: ExperimentConfig, k: int, index: int) -> tuple[dict[str, Any], dict[str, float]]:
    """Generate one instance and run every method on it.

    Returns the deterministic record and, separately, wall-clock milliseconds
    per method.
    """
    params = replace(config.generator, service_count=k, seed=config.instance_seed(k, index),
                     sigma=config.sigma, path_budget=config.path_budget)
    inst = generate_instance(params)
    refine = RefinementConfig(config.rho, config.iter_max)
    n_clouds = len(inst.network.cloud_nodes)
    placement_cap = 1 + n_clouds * sum(s.length for s in inst.services)
    record: dict[str, Any] = {
        "k": k, "index": index, "seed": params.seed,
        "nodes": len(inst.network.nodes), "links": len(inst.network.delay),
        "methods": {},
    }
    wall: dict[str, float] = {}
    for method in config.methods:
        entry: dict[str, Any] = {}
        t0 = time.perf_counter()
        try:
            sol = run_method(inst, method, refine, config.backend, config.oracle_limits)
        except Exception as exc:  # recorded, not fatal
            wall[method] = (time.perf_counter() - t0) * 1e3
            entry.update(status="error", error=f"{type(exc).__name__}: {exc}", validated=False,
                         objective=None, activated=None, lp_solves={}, work=0)
            record["methods"][method] = entry
            continue
        wall[method] = (time.perf_counter() - t0) * 1e3
        entry["status"] = sol.status
        entry["lp_solves"] = sol.lp_solves
        entry["work"] = sol.lp_iterations
        budget_ok = True
        if method != "oracle":
            budget_ok = (sol.lp_solves.get("placement", 0) <= placement_cap
                         and sol.lp_solves.get("routing", 0) <= config.iter_max)
        entry["budget_ok"] = budget_ok
        if sol.feasible:
            rep = validate_solution(inst, sol.to_dict(inst))
            entry["validated"] = rep.feasible
            entry["violations"] = rep.codes()
            entry["warnings"] = [w.code for w in rep.warnings]
            entry["objective"] = rep.objective if rep.feasible else None
            entry["activated"] = len(sol.placement.activated) if rep.feasible else None
        else:
            entry.update(validated=False, objective=None, activated=None)
            if sol.note:
                entry["note"] = sol.note
        record["methods"][method] = entry
    return record, wall


def aggregate(records: list[dict[str, Any]], methods: tuple[str, ...],
              service_counts: tuple[int, ...], key: str = "work") -> list[dict[str, Any]]:
    """Per (method, k) metrics; a pure function of the records."""
    rows = []
    for k in service_counts:
        recs = [r for r in records if r["k"] == k]
        common = [r for r in recs if all(r["methods"][m]["validated"] for m in methods)]
        means: dict[str, float | None] = {}
        for m in methods:
            vals = [r["methods"][m][key] for r in recs]
            means[m] = sum(vals) / len(vals) if vals else None
        for m in methods:
            feas = sum(1 for r in recs if r["methods"][m]["validated"])
            act = [r["methods"][m]["activated"] for r in common]
            base = means.get(BASELINE)
            ratio = None
            if base and means[m] is not None:
                ratio = means[m] / base
            elif BASELINE in means and base == 0 and means[m] == 0:
                ratio = 1.0
            rows.append({"method": m, "k": k, "feasible_count": feas,
                         "mean_activated": _fmt(sum(act) / len(act) if act else None),
                         "mean_wall_ms": _fmt(means[m]), "time_ratio": _fmt(ratio)})
    return rows


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    jobs = [(k, i) for k in config.service_counts for i in range(config.seeds)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            outs = list(pool.map(run_instance, [config] * len(jobs), *zip(*jobs)))
    else:
        outs = [run_instance(config, k, i) for k, i in jobs]
    records = [rec for rec, _ in outs]
    walls = [dict(wall, k=rec["k"]) for rec, wall in outs]

    metrics = aggregate(records, config.methods, config.service_counts)
    timing_records = [{"k": w["k"], "methods": {m: {"wall": w[m]} for m in config.methods}}
                      for w in walls]
    timings = [{key: row[key] for key in TIMING_HEADER}
               for row in aggregate_wall(timing_records, config.methods, config.service_counts)]
    violations = [f"k={r['k']} index={r['index']} {m}" for r in records
                  for m, e in r["methods"].items() if e.get("budget_ok") is False]
    result = ExperimentResult(records, metrics, timings, violations)
    if config.output_dir:
        write_outputs(result, Path(config.output_dir))
    return result


def aggregate_wall(records, methods, service_counts) -> list[dict[str, Any]]:
    rows = []
    for k in service_counts:
        recs = [r for r in records if r["k"] == k]
        means = {m: sum(r["methods"][m]["wall"] for r in recs) / len(recs) for m in methods}
        for m in methods:
            base = means.get(BASELINE)
            rows.append({"method": m, "k": k, "mean_wall_ms": _fmt(means[m]),
                         "time_ratio": _fmt(means[m] / base if base else None)})
    return rows


def write_outputs(result: ExperimentResult, out: Path) -> None:
    rec_dir = out / "records"
    rec_dir.mkdir(parents=True, exist_ok=True)
    for rec in result.records:
        path = rec_dir / f"k{rec['k']}-i{rec['index']:03d}.json"
        path.write_text(json.dumps(rec, indent=1, sort_keys=True) + "\n")
    (out / "metrics.csv").write_text(result.metrics_csv())
    (out / "timings.csv").write_text(result.timings_csv())


def config_to_dict(config: ExperimentConfig) -> dict[str, Any]:
    data = asdict(config)
    return json.loads(json.dumps(data))
