"""Traffic routing under a fixed placement: iterative LP refinement.

Segment delays are recomputed from an exact path decomposition of the LP
flow; the delay of a segment is the largest delay among the paths it uses.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Mapping

from .formulation import (SegKey, VarIndex, build_relaxation, fix_placement,
                          set_refinement_objective)
from .lpcore import LPModel, NumericalFailure, solve_lp
from .model import Instance, Link, Node, Service
from .placement import PlacementSolution

Path = tuple[Node, ...]
ARC_TOL = 1e-12


class DecompositionFailure(RuntimeError):
    """The arc flow does not carry one unit from origin to target."""


class FixedPlacementInfeasible(RuntimeError):
    """The placement admits no routing that satisfies the LP constraints."""


@dataclass(frozen=True)
class RefinementConfig:
    rho: float = 2.0
    iter_max: int = 5
    prune_threshold: float = 0.01

    def __post_init__(self) -> None:
        if not self.rho > 1:
            raise ValueError("rho must exceed 1")
        if self.iter_max < 1:
            raise ValueError("iter_max must be positive")


@dataclass
class Decomposition:
    paths: list[tuple[Path, float]]
    cycles: list[tuple[Path, float]]

    def arc_flow(self, include_cycles: bool = True) -> dict[Link, float]:
        flow: dict[Link, float] = {}
        items = self.paths + (self.cycles if include_cycles else [])
        for nodes, frac in items:
            for arc in zip(nodes, nodes[1:]):
                flow[arc] = flow.get(arc, 0.0) + frac
        return flow


def _cheapest_path(residual: Mapping[Link, float], origin: Node, target: Node,
                   delay: Mapping[Link, float]) -> Path | None:
    adj: dict[Node, list[Node]] = {}
    for (i, j), val in residual.items():
        if val > ARC_TOL:
            adj.setdefault(i, []).append(j)
    for succ in adj.values():
        succ.sort()
    dist = {origin: 0.0}
    prev: dict[Node, Node] = {}
    heap = [(0.0, origin)]
    while heap:
        d, u = heapq.heappop(heap)
        if u == target:
            break
        if d > dist[u]:
            continue
        for w in adj.get(u, ()):
            nd = d + delay.get((u, w), 1.0)
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                prev[w] = u
                heapq.heappush(heap, (nd, w))
    if target not in dist:
        return None
    path = [target]
    while path[-1] != origin:
        path.append(prev[path[-1]])
    return tuple(reversed(path))


def _find_cycle(residual: Mapping[Link, float]) -> Path | None:
    adj: dict[Node, list[Node]] = {}
    for (i, j), val in sorted(residual.items()):
        if val > ARC_TOL:
            adj.setdefault(i, []).append(j)
    for start in sorted(adj):
        stack = [start]
        pos = {start: 0}
        node = start
        while True:
            nxt = next(iter(adj.get(node, ())), None)
            if nxt is None:
                break
            if nxt in pos:
                cyc = stack[pos[nxt]:] + [nxt]
                return tuple(cyc)
            pos[nxt] = len(stack)
            stack.append(nxt)
            node = nxt
    return None


def decompose_flow(z: Mapping[Link, float], origin: Node, target: Node,
                   delay: Mapping[Link, float] | None = None, tol: float = 1e-7) -> Decomposition:
    """Split a unit origin-target arc flow into paths plus leftover cycles.

    Paths are peeled off cheapest-first (by ``delay``, hop count if absent),
    each carrying its bottleneck share. Whatever remains once no origin-target
    path is left must be circulation, which is returned as cycles.
    """
    delay = delay or {}
    residual = {arc: float(v) for arc, v in z.items() if v > ARC_TOL}
    paths: list[tuple[Path, float]] = []
    if origin == target:
        paths.append(((origin,), 1.0))
    else:
        while True:
            path = _cheapest_path(residual, origin, target, delay)
            if path is None:
                break
            arcs = list(zip(path, path[1:]))
            share = min(residual[a] for a in arcs)
            for a in arcs:
                residual[a] -= share
                if residual[a] <= ARC_TOL:
                    del residual[a]
            paths.append((path, share))
    total = sum(f for _, f in paths)
    if abs(total - 1.0) > tol:
        raise DecompositionFailure(f"{origin}->{target}: decomposed flow {total!r} != 1")
    cycles: list[tuple[Path, float]] = []
    while True:
        cyc = _find_cycle(residual)
        if cyc is None:
            break
        arcs = list(zip(cyc, cyc[1:]))
        share = min(residual[a] for a in arcs)
        for a in arcs:
            residual[a] -= share
            if residual[a] <= ARC_TOL:
                del residual[a]
        cycles.append((cyc, share))
    return Decomposition(paths, cycles)


def path_delay(path: Path, delay: Mapping[Link, float]) -> float:
    return sum(delay[a] for a in zip(path, path[1:]))


def segment_endpoints(svc: Service, assign: Mapping[SegKey, str], s: int) -> tuple[Node, Node]:
    origin = svc.source if s == 0 else assign[(svc.id, s)]
    target = svc.destination if s == svc.length else assign[(svc.id, s + 1)]
    return origin, target


def recompute_delay(instance: Instance, service: Service, placement: PlacementSolution,
                    segment_paths: Mapping[int, list[tuple[Path, float]]]) -> float:
    """End-to-end delay: worst used path per segment plus NFV delays on the hosts."""
    delay = instance.network.delay
    comm = sum(max((path_delay(p, delay) for p, _ in segment_paths[s]), default=0)
               for s in service.segments)
    nfv = sum(service.nfv_delay[(placement.assign[(service.id, s)], s)]
              for s in service.positions)
    return comm + nfv


@dataclass
class RoutingSolution:
    paths: dict[SegKey, list[tuple[Path, float]]]
    theta: dict[SegKey, float]
    delays: dict[str, float]
    weights: dict[str, float]
    iterations_used: int
    cycles: dict[SegKey, list[tuple[Path, float]]] = field(default_factory=dict)

    def over_budget(self, budget: int) -> list[SegKey]:
        return [seg for seg, p in self.paths.items() if len(p) > budget]


@dataclass
class RoutingResult:
    solution: RoutingSolution | None
    feasible: bool
    lp_solve_count: int
    lp_iterations: int = 0
    weight_history: list[dict[str, float]] = field(default_factory=list)
    numerical_failure: bool = False


def _link_loads(instance: Instance, paths: Mapping[SegKey, list[tuple[Path, float]]]) -> dict[Link, float]:
    load = {arc: 0.0 for arc in instance.network.delay}
    for svc in instance.services:
        for s in svc.segments:
            for nodes, frac in paths[(svc.id, s)]:
                for arc in zip(nodes, nodes[1:]):
                    load[arc] += svc.rates[s] * frac
    return load


def _capacity_ok(instance: Instance, paths) -> bool:
    cap = instance.network.capacity
    return all(val <= cap[a] + 1e-7 for a, val in _link_loads(instance, paths).items())


def prune_paths(instance: Instance, paths: dict[SegKey, list[tuple[Path, float]]],
                threshold: float) -> dict[SegKey, list[tuple[Path, float]]]:
    """Drop paths below ``threshold`` segment by segment; keep a prune only if capacities still hold."""
    out = dict(paths)
    for seg, plist in paths.items():
        kept = [(p, f) for p, f in plist if f >= threshold]
        if not kept or len(kept) == len(plist):
            continue
        total = sum(f for _, f in kept)
        trial = dict(out)
        trial[seg] = [(p, f / total) for p, f in kept]
        if _capacity_ok(instance, trial):
            out = trial
    return out


def refine_routing(instance: Instance, placement: PlacementSolution,
                   config: RefinementConfig = RefinementConfig(), backend: str = "simplex",
                   relaxation: tuple[LPModel, VarIndex] | None = None) -> RoutingResult:
    model, idx = relaxation or build_relaxation(instance)
    fixed = fix_placement(model, idx, placement.assign, placement.activated)
    delay = instance.network.delay
    weights = {svc.id: 1.0 for svc in instance.services}
    result = RoutingResult(None, False, 0)
    basis = None
    for it in range(config.iter_max):
        result.weight_history.append(dict(weights))
        lp = set_refinement_objective(fixed, idx, weights)
        try:
            sol = solve_lp(lp, backend, warm_start=basis if backend == "simplex" else None)
        except NumericalFailure:
            result.numerical_failure = True
            return result
        result.lp_solve_count += 1
        result.lp_iterations += sol.iterations
        if not sol.optimal:
            if it == 0:
                raise FixedPlacementInfeasible(f"fixed-placement LP is {sol.status.value}")
            result.numerical_failure = True
            return result
        basis = sol.basis

        paths: dict[SegKey, list[tuple[Path, float]]] = {}
        cycles: dict[SegKey, list[tuple[Path, float]]] = {}
        for svc in instance.services:
            for s in svc.segments:
                origin, target = segment_endpoints(svc, placement.assign, s)
                dec = decompose_flow(idx.segment_flow(sol.values, svc.id, s), origin, target, delay)
                paths[(svc.id, s)] = dec.paths
                if dec.cycles:
                    cycles[(svc.id, s)] = dec.cycles
        if config.prune_threshold > 0:
            paths = prune_paths(instance, paths, config.prune_threshold)
        delays = {svc.id: recompute_delay(instance, svc, placement,
                                          {s: paths[(svc.id, s)] for s in svc.segments})
                  for svc in instance.services}
        theta = {seg: float(sol.values[c]) for seg, c in idx.theta.items()}
        result.solution = RoutingSolution(paths, theta, delays, dict(weights), it + 1, cycles)
        violated = [svc.id for svc in instance.services if delays[svc.id] > svc.delay_budget]
        if not violated:
            result.feasible = True
            return result
        for k in violated:
            weights[k] *= config.rho
    return result
