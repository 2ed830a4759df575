"""VNF placement: iterative LP rounding and the one-shot rounding baseline."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .formulation import (FixingSet, SegKey, VarIndex, XKey, apply_fixings, build_relaxation)
from .lpcore import LPModel, LPSolution, NumericalFailure, Status, solve_lp
from .model import Instance

EPS_INT = 1e-6


@dataclass(frozen=True)
class PlacementSolution:
    assign: dict[SegKey, str]          # (k, s) -> cloud node
    activated: tuple[str, ...]         # in cloud declaration order


@dataclass(frozen=True)
class TrailEntry:
    var: XKey
    direction: int     # value the variable ended up fixed to
    status: str        # status of the LP solved with the trial fixing x = 1

    def to_dict(self) -> dict:
        v, s, k = self.var
        return {"var": f"x[{v},{s},{k}]", "direction": self.direction, "status": self.status}


@dataclass
class PlacementResult:
    solution: PlacementSolution | None
    lp_solve_count: int
    trail: list[TrailEntry] = field(default_factory=list)
    numerical_failure: bool = False
    lp_iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.solution is not None


def select_candidate(x_values: Mapping[XKey, float], fixings: FixingSet | None = None,
                     eps: float = EPS_INT) -> XKey | None:
    """Unfixed variable with the largest strictly fractional value.

    Ties go to the variable met first in ``x_values``'s iteration order, which
    for a :class:`VarIndex` is (service, position, cloud node).
    """
    best, best_val = None, -1.0
    for key, val in x_values.items():
        if fixings is not None and key in fixings:
            continue
        if eps < val < 1 - eps and val > best_val:
            best, best_val = key, val
    return best


def _extract(instance: Instance, x_values: Mapping[XKey, float],
             eps: float = EPS_INT) -> PlacementSolution | None:
    """Binary placement from x, or None if x is not binary or breaks (1)-(3)."""
    assign: dict[SegKey, str] = {}
    for (v, s, k), val in x_values.items():
        if eps < val < 1 - eps:
            return None
        if val >= 0.5:
            if (k, s) in assign:
                return None
            assign[(k, s)] = v
    load = {v: 0.0 for v in instance.network.cloud_nodes}
    for svc in instance.services:
        for s in svc.positions:
            if (svc.id, s) not in assign:
                return None
            load[assign[(svc.id, s)]] += svc.rates[s]
    for v, mu in instance.network.cloud_nodes.items():
        if load[v] > mu + 1e-9:
            return None
    used = set(assign.values())
    return PlacementSolution(assign, tuple(v for v in instance.network.clouds if v in used))


def _solve(model: LPModel, backend: str, warm) -> LPSolution:
    return solve_lp(model, backend, warm_start=warm if backend == "simplex" else None)


def round_placement(instance: Instance, backend: str = "simplex", eps: float = EPS_INT,
                    relaxation: tuple[LPModel, VarIndex] | None = None) -> PlacementResult:
    """Iterative LP rounding: fix one fractional x at a time, keeping the LP feasible."""
    model, idx = relaxation or build_relaxation(instance)
    result = PlacementResult(None, 0)
    fixings = FixingSet()
    try:
        sol = _solve(model, backend, None)
        result.lp_solve_count += 1
        result.lp_iterations += sol.iterations
        if not sol.optimal:
            return result
        xv = idx.x_values(sol.values)
        basis = sol.basis
        while any(eps < val < 1 - eps for val in xv.values()):
            for key, val in xv.items():
                if val >= 1 - eps and key not in fixings:
                    fixings.add(key, 1)
            cand = select_candidate(xv, fixings, eps)
            if cand is None:
                break
            fixings.add(cand, 1)
            trial = _solve(apply_fixings(model, idx, fixings), backend, basis)
            result.lp_solve_count += 1
            result.lp_iterations += trial.iterations
            if trial.optimal:
                xv = idx.x_values(trial.values)
                basis = trial.basis
                result.trail.append(TrailEntry(cand, 1, trial.status.value))
            else:
                fixings.replace(cand, 0)
                xv[cand] = 0.0
                result.trail.append(TrailEntry(cand, 0, trial.status.value))
    except NumericalFailure:
        result.numerical_failure = True
        return result
    result.solution = _extract(instance, xv, eps)
    return result


def baseline_round(instance: Instance, backend: str = "simplex",
                   relaxation: tuple[LPModel, VarIndex] | None = None) -> PlacementResult:
    """Solve the relaxation once and send every function to its argmax node."""
    model, idx = relaxation or build_relaxation(instance)
    result = PlacementResult(None, 1)
    try:
        sol = solve_lp(model, backend)
    except NumericalFailure:
        result.numerical_failure = True
        return result
    result.lp_iterations = sol.iterations
    if sol.status is not Status.OPTIMAL:
        return result
    xv = idx.x_values(sol.values)
    best: dict[SegKey, tuple[float, str]] = {}
    for (v, s, k), val in xv.items():
        if (k, s) not in best or val > best[(k, s)][0]:
            best[(k, s)] = (val, v)
    rounded = {(v, s, k): 1.0 if best[(k, s)][1] == v else 0.0 for (v, s, k) in xv}
    result.solution = _extract(instance, rounded)
    return result
