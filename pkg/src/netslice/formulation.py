"""Compact LP relaxation of the network slicing problem.

Column families::

    x[v,s,k]   function s of service k runs on cloud node v      [0, 1]
    y[v]       cloud node v is powered on                         [0, 1]
    z[i,j,k,s] share of segment (k, s) sent over link (i, j)      [0, 1]
    th[k,s]    communication delay bound of segment (k, s)        [0, inf)

Segment ``s`` of service ``k`` runs from the host of function ``s`` (the
source for ``s = 0``) to the host of function ``s + 1`` (the destination for
``s = l_k``) and carries ``rates[s]``.

Row families and their sizes (``L = sum_k l_k``, ``S = sum_k (l_k + 1)``)::

    assign   (1)   L             sum_v x[v,s,k] = 1
    couple   (2)   |V| * L       x[v,s,k] <= y[v]
    nodecap  (3)   |V|           sum lambda_s(k) x[v,s,k] <= mu_v y[v]
    linkcap  (6')  |L|           sum lambda_s(k) z[i,j,k,s] <= C_ij
    flow     (7)   |I| * S       inflow - outflow = x[i,s+1,k] - x[i,s,k]  (+ anchors)
    delay    (8)   S             th[k,s] >= sum d_ij z[i,j,k,s]
    e2e      (9)   |K|           sum_s th[k,s] + sum d_{v,s}(k) x[v,s,k] <= Theta_k
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .lpcore import LPBuilder, LPModel, Relation
from .model import Instance

XKey = tuple[str, int, str]          # (v, s, k)
ZKey = tuple[str, str, str, int]     # (i, j, k, s)
SegKey = tuple[str, int]             # (k, s)


class ConflictingFixing(ValueError):
    pass


@dataclass
class VarIndex:
    x: dict[XKey, int] = field(default_factory=dict)
    y: dict[str, int] = field(default_factory=dict)
    z: dict[ZKey, int] = field(default_factory=dict)
    theta: dict[SegKey, int] = field(default_factory=dict)
    # per-service column lists, handy for the derived delay expressions
    segments: dict[str, list[int]] = field(default_factory=dict)

    def x_values(self, values: np.ndarray) -> dict[XKey, float]:
        return {key: float(values[c]) for key, c in self.x.items()}

    def segment_flow(self, values: np.ndarray, k: str, s: int) -> dict[tuple[str, str], float]:
        return {(i, j): float(values[c]) for (i, j, kk, ss), c in self.z.items()
                if kk == k and ss == s}

    def theta_link(self, values: np.ndarray, k: str) -> float:
        """theta_L(k): total communication delay bound of service k."""
        return float(sum(values[c] for (kk, _), c in self.theta.items() if kk == k))


class FixingSet:
    """The set A of equality fixings x[v,s,k] = b, b in {0, 1}."""

    def __init__(self, items: Mapping[XKey, int] | None = None):
        self._fix: dict[XKey, int] = {}
        for key, val in (items or {}).items():
            self.add(key, val)

    def add(self, key: XKey, value: int) -> None:
        if value not in (0, 1):
            raise ValueError(f"fixing value must be 0 or 1, got {value}")
        if self._fix.get(key, value) != value:
            raise ConflictingFixing(f"{key} fixed to both 0 and 1")
        self._fix[key] = value

    def replace(self, key: XKey, value: int) -> None:
        """Overwrite an existing fixing (used when a trial x = 1 turns out infeasible)."""
        self._fix.pop(key, None)
        self.add(key, value)

    def __contains__(self, key: object) -> bool:
        return key in self._fix

    def __len__(self) -> int:
        return len(self._fix)

    def items(self):
        return self._fix.items()

    def copy(self) -> "FixingSet":
        return FixingSet(dict(self._fix))


def expected_counts(instance: Instance) -> tuple[int, int]:
    """(columns, rows) of the relaxation, from the closed-form sizes above."""
    net = instance.network
    nv, ni, nl, nk = len(net.cloud_nodes), len(net.nodes), len(net.delay), len(instance.services)
    fl = sum(svc.length for svc in instance.services)
    segs = fl + nk
    cols = nv * fl + nv + nl * segs + segs
    rows = fl + nv * fl + nv + nl + ni * segs + segs + nk
    return cols, rows


def build_relaxation(instance: Instance) -> tuple[LPModel, VarIndex]:
    net = instance.network
    sigma = instance.sigma
    clouds = net.clouds
    lp = LPBuilder()
    idx = VarIndex()

    for svc in instance.services:
        for s in svc.positions:
            for v in clouds:
                idx.x[(v, s, svc.id)] = lp.add_var(f"x[{v},{s},{svc.id}]", 0, 1,
                                                    sigma * svc.nfv_delay[(v, s)])
    for v in clouds:
        idx.y[v] = lp.add_var(f"y[{v}]", 0, 1, 1.0)
    for svc in instance.services:
        for s in svc.segments:
            for (i, j) in net.delay:
                idx.z[(i, j, svc.id, s)] = lp.add_var(f"z[{i},{j},{svc.id},{s}]", 0, 1)
    for svc in instance.services:
        idx.segments[svc.id] = []
        for s in svc.segments:
            col = lp.add_var(f"th[{svc.id},{s}]", 0, np.inf, sigma)
            idx.theta[(svc.id, s)] = col
            idx.segments[svc.id].append(col)

    for svc in instance.services:
        for s in svc.positions:
            lp.add_row({idx.x[(v, s, svc.id)]: 1.0 for v in clouds}, Relation.EQ, 1,
                       f"assign[{svc.id},{s}]")
    for svc in instance.services:
        for s in svc.positions:
            for v in clouds:
                lp.add_row({idx.x[(v, s, svc.id)]: 1.0, idx.y[v]: -1.0}, Relation.LE, 0,
                           f"couple[{v},{s},{svc.id}]")
    for v in clouds:
        row = {idx.x[(v, s, svc.id)]: svc.rates[s]
               for svc in instance.services for s in svc.positions}
        row[idx.y[v]] = -net.cloud_nodes[v]
        lp.add_row(row, Relation.LE, 0, f"nodecap[{v}]")
    for (i, j), cap in net.capacity.items():
        row = {idx.z[(i, j, svc.id, s)]: svc.rates[s]
               for svc in instance.services for s in svc.segments}
        lp.add_row(row, Relation.LE, cap, f"linkcap[{i},{j}]")

    incoming: dict[str, list[tuple[str, str]]] = defaultdict(list)
    outgoing: dict[str, list[tuple[str, str]]] = defaultdict(list)
    for (i, j) in net.delay:
        outgoing[i].append((i, j))
        incoming[j].append((i, j))
    for svc in instance.services:
        k, last = svc.id, svc.length
        for s in svc.segments:
            for node in net.nodes:
                row: dict[int, float] = defaultdict(float)
                for (a, b) in incoming[node]:
                    row[idx.z[(a, b, k, s)]] += 1.0
                for (a, b) in outgoing[node]:
                    row[idx.z[(a, b, k, s)]] -= 1.0
                if node in net.cloud_nodes:
                    if s + 1 <= last:
                        row[idx.x[(node, s + 1, k)]] -= 1.0
                    if s >= 1:
                        row[idx.x[(node, s, k)]] += 1.0
                rhs = 0.0
                if node == svc.source and s == 0:
                    rhs -= 1.0
                if node == svc.destination and s == last:
                    rhs += 1.0
                lp.add_row(row, Relation.EQ, rhs, f"flow[{k},{s},{node}]")
    for svc in instance.services:
        for s in svc.segments:
            row = {idx.theta[(svc.id, s)]: 1.0}
            for (i, j), d in net.delay.items():
                row[idx.z[(i, j, svc.id, s)]] = -d
            lp.add_row(row, Relation.GE, 0, f"delay[{svc.id},{s}]")
    for svc in instance.services:
        row = {c: 1.0 for c in idx.segments[svc.id]}
        for s in svc.positions:
            for v in clouds:
                row[idx.x[(v, s, svc.id)]] = svc.nfv_delay[(v, s)]
        lp.add_row(row, Relation.LE, svc.delay_budget, f"e2e[{svc.id}]")
    return lp.build(), idx


def apply_fixings(model: LPModel, index: VarIndex, fixings: FixingSet) -> LPModel:
    if not len(fixings):
        return model
    lo, hi = model.lower.copy(), model.upper.copy()
    for key, val in fixings.items():
        if key not in index.x:
            raise KeyError(f"fixing references unknown placement variable {key}")
        col = index.x[key]
        lo[col] = hi[col] = float(val)
    return model.with_bounds(lo, hi)


def fix_placement(model: LPModel, index: VarIndex, assign: Mapping[SegKey, str],
                  activated) -> LPModel:
    """Fix every x and y column to the binary placement ``assign`` / ``activated``."""
    lo, hi = model.lower.copy(), model.upper.copy()
    for (v, s, k), col in index.x.items():
        lo[col] = hi[col] = 1.0 if assign[(k, s)] == v else 0.0
    for v, col in index.y.items():
        lo[col] = hi[col] = 1.0 if v in activated else 0.0
    return model.with_bounds(lo, hi)


def set_refinement_objective(model: LPModel, index: VarIndex,
                             weights: Mapping[str, float]) -> LPModel:
    """Replace the objective by sum_k w_k theta_L(k)."""
    cost = np.zeros(model.num_cols)
    for (k, _), col in index.theta.items():
        w = weights[k]
        if w < 1:
            raise ValueError(f"weight of service {k} must be >= 1, got {w}")
        cost[col] = w
    return model.with_cost(cost)
