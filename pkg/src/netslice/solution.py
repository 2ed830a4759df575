"""End-to-end solution records and the solve pipelines behind each method."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any

from .formulation import build_relaxation
from .model import FORMAT_VERSION, Instance
from .placement import PlacementResult, PlacementSolution, baseline_round, round_placement
from .routing import (FixedPlacementInfeasible, RefinementConfig, RoutingResult,
                      RoutingSolution, DecompositionFailure, refine_routing)

METHODS = ("lprr", "lpr_baseline", "oracle")


@dataclass
class SliceSolution:
    method: str
    status: str                      # feasible | failed | infeasible | limit
    placement: PlacementSolution | None = None
    routing: RoutingSolution | None = None
    objective: float | None = None
    lp_solves: dict[str, int] = field(default_factory=dict)
    lp_iterations: int = 0
    trail: list = field(default_factory=list)
    note: str = ""

    @property
    def feasible(self) -> bool:
        return self.status in ("feasible", "optimal")

    def to_dict(self, instance: Instance) -> dict[str, Any]:
        out: dict[str, Any] = {"format": FORMAT_VERSION, "method": self.method,
                               "status": self.status, "objective": self.objective}
        if self.note:
            out["note"] = self.note
        if self.placement is not None:
            out["activated"] = list(self.placement.activated)
            out["assign"] = [{"service": k, "position": s, "node": v}
                             for (k, s), v in self.placement.assign.items()]
        if self.routing is not None:
            r = self.routing
            out["segments"] = [
                {"service": k, "segment": s, "theta": r.theta.get((k, s)),
                 "paths": [{"nodes": list(p), "fraction": f} for p, f in plist]}
                for (k, s), plist in r.paths.items()
            ]
            out["services"] = [{"service": svc.id, "delay": r.delays.get(svc.id),
                                "budget": svc.delay_budget} for svc in instance.services]
            out["weights"] = r.weights
            out["iterations"] = r.iterations_used
            if r.cycles:
                out["cycles"] = [{"service": k, "segment": s,
                                  "cycles": [{"nodes": list(c), "fraction": f} for c, f in cl]}
                                 for (k, s), cl in r.cycles.items()]
        out["lp_solve_count"] = self.lp_solves
        if self.trail:
            out["trail"] = [t.to_dict() for t in self.trail]
        return out

    def dumps(self, instance: Instance) -> str:
        return json.dumps(self.to_dict(instance), indent=1) + "\n"


def objective_value(instance: Instance, placement: PlacementSolution,
                    delays: dict[str, float]) -> float:
    """Objective of the integer problem: active nodes plus sigma times total delay."""
    return len(placement.activated) + instance.sigma * sum(delays.values())


def _two_stage(instance: Instance, method: str, config: RefinementConfig,
               backend: str) -> SliceSolution:
    relax = build_relaxation(instance)
    if method == "lprr":
        pres: PlacementResult = round_placement(instance, backend, relaxation=relax)
    else:
        pres = baseline_round(instance, backend, relaxation=relax)
    out = SliceSolution(method, "failed", lp_solves={"placement": pres.lp_solve_count, "routing": 0},
                        lp_iterations=pres.lp_iterations, trail=pres.trail)
    if not pres.feasible:
        out.note = "numerical failure in placement" if pres.numerical_failure else "placement failed"
        return out
    out.placement = pres.solution
    try:
        rres: RoutingResult = refine_routing(instance, pres.solution, config, backend, relax)
    except FixedPlacementInfeasible as exc:
        out.lp_solves["routing"] = 1
        out.note = str(exc)
        return out
    except DecompositionFailure as exc:
        out.note = f"decomposition failure: {exc}"
        return out
    out.lp_solves["routing"] = rres.lp_solve_count
    out.lp_iterations += rres.lp_iterations
    out.routing = rres.solution
    if rres.numerical_failure:
        out.note = "numerical failure in routing"
    if rres.feasible:
        out.status = "feasible"
        out.objective = objective_value(instance, pres.solution, rres.solution.delays)
    elif not out.note:
        out.note = "delay budgets still violated after refinement"
    return out


def run_method(instance: Instance, method: str, config: RefinementConfig = RefinementConfig(),
               backend: str = "simplex", oracle_limits=None) -> SliceSolution:
    if method in ("lprr", "lpr_baseline"):
        return _two_stage(instance, method, config, backend)
    if method == "oracle":
        from .oracle import OracleLimits, exact_solve

        return exact_solve(instance, oracle_limits or OracleLimits(), backend=backend).to_solution(instance)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")
