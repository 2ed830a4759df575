"""Exact solver for tiny instances, by enumeration.

Every placement satisfying the assignment and node-capacity constraints is
enumerated (cheapest lower bound first). For each one the routing problem is
solved exactly over explicit simple paths: at most ``P`` paths per segment,
segment delay = longest used path, link capacities and delay budgets
enforced. That subproblem is solved by depth-first branch and bound over LP
relaxations, branching on segment delay thresholds and on path-use
indicators.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .lpcore import Basis, LPBuilder, LPModel, Relation, solve_lp
from .model import Instance, Node
from .placement import PlacementSolution
from .routing import Path, RoutingSolution, path_delay

INT_TOL = 1e-6


class LimitExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleLimits:
    max_placements: int = 100_000
    max_paths: int = 200
    time_cap: float = 60.0

    def __post_init__(self) -> None:
        if min(self.max_placements, self.max_paths) < 1 or not self.time_cap > 0:
            raise ValueError("oracle limits must be positive")


@dataclass
class OracleResult:
    status: str                       # optimal | infeasible | limit
    objective: float | None = None
    placement: PlacementSolution | None = None
    routing: RoutingSolution | None = None
    placements_explored: int = 0
    lp_solves: int = 0
    lp_iterations: int = 0
    detail: str = ""

    def to_solution(self, instance: Instance):
        from .solution import SliceSolution

        return SliceSolution("oracle", self.status, self.placement, self.routing, self.objective,
                             {"oracle": self.lp_solves}, self.lp_iterations, note=self.detail)


def simple_paths(adj: dict[Node, list[Node]], origin: Node, target: Node, cap: int) -> list[Path]:
    """All simple origin-target paths, depth first in adjacency order."""
    if origin == target:
        return [(origin,)]
    out: list[Path] = []
    stack: list[Node] = [origin]
    on_path = {origin}

    def dfs(u: Node) -> None:
        for w in adj.get(u, ()):
            if w in on_path:
                continue
            if w == target:
                out.append(tuple(stack) + (w,))
                if len(out) > cap:
                    raise LimitExceeded(f"more than {cap} simple paths {origin}->{target}")
                continue
            stack.append(w)
            on_path.add(w)
            dfs(w)
            stack.pop()
            on_path.discard(w)

    dfs(origin)
    return out


@dataclass
class _RoutingProblem:
    model: LPModel
    segments: list[tuple[str, int]]
    paths: dict[tuple[str, int], list[Path]]
    delays: dict[tuple[str, int], list[float]]
    r_col: dict[tuple[tuple[str, int], int], int]
    u_col: dict[tuple[tuple[str, int], int], int]
    theta_col: dict[tuple[str, int], int]


def _routing_model(instance: Instance, placement: dict[tuple[str, int], str],
                   paths_for) -> _RoutingProblem | None:
    """Path-flow LP for one placement.

    Columns per segment: path shares r_p, path-use indicators u_p (r_p <= u_p,
    sum u_p <= P) and the segment delay th >= sum_p d_p r_p. That last row only
    bounds the delay by the average; "th >= every used path" is imposed by
    branching.
    """
    net = instance.network
    lp = LPBuilder()
    segs, seg_paths, seg_delays, r_col, u_col, th = [], {}, {}, {}, {}, {}
    link_rows: dict[tuple[str, str], dict[int, float]] = {a: {} for a in net.delay}
    for svc in instance.services:
        hosts = [svc.source] + [placement[(svc.id, s)] for s in svc.positions] + [svc.destination]
        for s in svc.segments:
            seg = (svc.id, s)
            plist = paths_for(hosts[s], hosts[s + 1])
            if not plist:
                return None
            segs.append(seg)
            seg_paths[seg] = plist
            seg_delays[seg] = [path_delay(p, net.delay) for p in plist]
            th[seg] = lp.add_var(f"th{seg}", min(seg_delays[seg]), np.inf, 1.0)
            for p, nodes in enumerate(plist):
                col = r_col[(seg, p)] = lp.add_var(f"r{seg}{p}", 0, 1)
                u_col[(seg, p)] = lp.add_var(f"u{seg}{p}", 0, 1)
                for arc in zip(nodes, nodes[1:]):
                    link_rows[arc][col] = link_rows[arc].get(col, 0) + svc.rates[s]
    for seg in segs:
        n = len(seg_paths[seg])
        lp.add_row({r_col[(seg, p)]: 1.0 for p in range(n)}, Relation.EQ, 1)
        lp.add_row({u_col[(seg, p)]: 1.0 for p in range(n)}, Relation.LE, instance.path_budget)
        for p in range(n):
            lp.add_row({r_col[(seg, p)]: 1.0, u_col[(seg, p)]: -1.0}, Relation.LE, 0)
        row = {th[seg]: 1.0}
        for p, d in enumerate(seg_delays[seg]):
            row[r_col[(seg, p)]] = -d
        lp.add_row(row, Relation.GE, 0)
    for arc, row in link_rows.items():
        if row:
            lp.add_row(row, Relation.LE, net.capacity[arc])
    for svc in instance.services:
        nfv = sum(svc.nfv_delay[(placement[(svc.id, s)], s)] for s in svc.positions)
        lp.add_row({th[(svc.id, s)]: 1.0 for s in svc.segments}, Relation.LE,
                   svc.delay_budget - nfv)
    return _RoutingProblem(lp.build(), segs, seg_paths, seg_delays, r_col, u_col, th)


def _branch(prob: _RoutingProblem, x: np.ndarray, lo: np.ndarray, hi: np.ndarray,
            budget: int) -> list[tuple[np.ndarray, np.ndarray]] | None:
    """Child bound sets excluding ``x``, or None when ``x`` is a valid routing."""
    for seg in prob.segments:
        n = len(prob.paths[seg])
        used = [p for p in range(n) if x[prob.r_col[(seg, p)]] > 1e-9]
        theta = x[prob.theta_col[seg]]
        worst = max(prob.delays[seg][p] for p in used)
        if theta < worst - 1e-9:
            # either no used path is longer than theta, or theta reaches the next longer delay
            tc = prob.theta_col[seg]
            a_lo, a_hi = lo.copy(), hi.copy()
            for p in range(n):
                if prob.delays[seg][p] > theta + 1e-9:
                    a_hi[prob.r_col[(seg, p)]] = 0.0
                    a_hi[prob.u_col[(seg, p)]] = 0.0
            b_lo, b_hi = lo.copy(), hi.copy()
            b_lo[tc] = min(d for d in prob.delays[seg] if d > theta + 1e-9)
            return [(b_lo, b_hi), (a_lo, a_hi)]
        if len(used) > budget:
            frac = [p for p in used if x[prob.u_col[(seg, p)]] < 1 - INT_TOL]
            uc = prob.u_col[(seg, frac[0])]
            one_lo, one_hi = lo.copy(), hi.copy()
            one_lo[uc] = 1.0
            zero_lo, zero_hi = lo.copy(), hi.copy()
            zero_hi[uc] = 0.0
            zero_hi[prob.r_col[(seg, frac[0])]] = 0.0
            return [(one_lo, one_hi), (zero_lo, zero_hi)]
    return None


def _branch_and_bound(prob: _RoutingProblem, cutoff: float, budget: int, backend: str,
                      stats: dict, deadline: float) -> tuple[float, np.ndarray] | None:
    """Minimise total segment delay; None if nothing beats ``cutoff``."""
    model = prob.model
    best_val, best_x = cutoff, None
    stack: list[tuple[np.ndarray, np.ndarray, Basis | None]] = [(model.lower, model.upper, None)]
    while stack:
        if time.monotonic() > deadline:
            raise LimitExceeded("time cap reached")
        lo, hi, warm = stack.pop()
        sol = solve_lp(model.with_bounds(lo, hi), backend,
                       warm_start=warm if backend == "simplex" else None)
        stats["lp_solves"] += 1
        stats["lp_iterations"] += sol.iterations
        if not sol.optimal or sol.objective >= best_val - 1e-9:
            continue
        children = _branch(prob, sol.values, lo, hi, budget)
        if children is None:
            true_val = sum(max(prob.delays[seg][p] for p in range(len(prob.paths[seg]))
                               if sol.values[prob.r_col[(seg, p)]] > 1e-9)
                           for seg in prob.segments)
            if true_val < best_val - 1e-9:
                best_val, best_x = true_val, sol.values
            continue
        for clo, chi in children:
            stack.append((clo, chi, sol.basis))
    return None if best_x is None else (best_val, best_x)


def exact_solve(instance: Instance, limits: OracleLimits = OracleLimits(),
                backend: str = "simplex") -> OracleResult:
    start = time.monotonic()
    deadline = start + limits.time_cap
    net = instance.network
    clouds = net.clouds
    slots = [(svc.id, s) for svc in instance.services for s in svc.positions]
    total = len(clouds) ** len(slots)
    if total > limits.max_placements:
        return OracleResult("limit", detail=f"{total} placements exceed the limit {limits.max_placements}")
    adj = net.out_links()
    path_cache: dict[tuple[Node, Node], list[Path]] = {}

    def paths_for(a: Node, b: Node) -> list[Path]:
        if (a, b) not in path_cache:
            path_cache[(a, b)] = simple_paths(adj, a, b, limits.max_paths)
        return path_cache[(a, b)]

    svc_of = {svc.id: svc for svc in instance.services}
    candidates = []
    try:
        for code, combo in enumerate(itertools.product(clouds, repeat=len(slots))):
            placement = dict(zip(slots, combo))
            load = {v: Fraction(0) for v in clouds}
            for (k, s), v in placement.items():
                load[v] += Fraction(svc_of[k].rates[s])
            if any(load[v] > Fraction(net.cloud_nodes[v]) for v in clouds):
                continue
            used = set(combo)
            bound, ok = float(len(used)), True
            for svc in instance.services:
                hosts = [svc.source] + [placement[(svc.id, s)] for s in svc.positions] + [svc.destination]
                lb = sum(svc.nfv_delay[(placement[(svc.id, s)], s)] for s in svc.positions)
                for s in svc.segments:
                    plist = paths_for(hosts[s], hosts[s + 1])
                    if not plist:
                        ok = False
                        break
                    lb += min(path_delay(p, net.delay) for p in plist)
                if not ok or lb > svc.delay_budget:
                    ok = False
                    break
                bound += instance.sigma * lb
            if ok:
                candidates.append((bound, code, placement))
    except LimitExceeded as exc:
        return OracleResult("limit", detail=str(exc))

    candidates.sort(key=lambda c: (c[0], c[1]))
    best = OracleResult("infeasible")
    stats = {"lp_solves": 0, "lp_iterations": 0}
    explored = 0
    try:
        for bound, _, placement in candidates:
            if best.objective is not None and bound >= best.objective - 1e-12:
                break
            explored += 1
            prob = _routing_model(instance, placement, paths_for)
            if prob is None:
                continue
            used = {v for v in placement.values()}
            nfv_total = sum(svc.nfv_delay[(placement[(svc.id, s)], s)]
                            for svc in instance.services for s in svc.positions)
            fixed = len(used) + instance.sigma * nfv_total
            if best.objective is None:
                cutoff = np.inf
            elif instance.sigma > 0:
                cutoff = (best.objective - fixed) / instance.sigma
            else:
                cutoff = 0.0 if best.objective <= fixed else np.inf
            found = _branch_and_bound(prob, cutoff, instance.path_budget, backend, stats, deadline)
            if found is None:
                continue
            _, x = found
            routing, delays = _routing_from(instance, prob, x, placement)
            obj = len(used) + instance.sigma * sum(delays.values())
            if best.objective is None or obj < best.objective - 1e-12:
                psol = PlacementSolution(dict(placement), tuple(v for v in clouds if v in used))
                best = OracleResult("optimal", obj, psol, routing)
    except LimitExceeded as exc:
        best = OracleResult("limit", detail=str(exc))
    best.placements_explored = explored
    best.lp_solves = stats["lp_solves"]
    best.lp_iterations = stats["lp_iterations"]
    return best


def _routing_from(instance: Instance, prob: _RoutingProblem, x: np.ndarray,
                  placement: dict[tuple[str, int], str]) -> tuple[RoutingSolution, dict[str, float]]:
    delay = instance.network.delay
    paths, theta = {}, {}
    for seg in prob.segments:
        used = [(nodes, float(x[prob.r_col[(seg, p)]]))
                for p, nodes in enumerate(prob.paths[seg]) if x[prob.r_col[(seg, p)]] > 1e-9]
        total = sum(f for _, f in used)
        paths[seg] = [(nodes, f / total) for nodes, f in used]
        theta[seg] = max(path_delay(nodes, delay) for nodes, _ in used)
    delays = {}
    for svc in instance.services:
        delays[svc.id] = sum(theta[(svc.id, s)] for s in svc.segments) + \
            sum(svc.nfv_delay[(placement[(svc.id, s)], s)] for s in svc.positions)
    return RoutingSolution(paths, theta, delays, {}, 0), delays
