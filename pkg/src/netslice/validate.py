"""Independent feasibility check of solution documents.

Works on the serialised solution only and recomputes everything from the
instance data. Placement checks use exact rational arithmetic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

from .model import Instance, Violation

FRACTION_SUM_TOL = 1e-9
LINK_TOL = 1e-7


@dataclass
class SolutionReport:
    violations: list[Violation] = field(default_factory=list)
    warnings: list[Violation] = field(default_factory=list)
    delays: dict[str, Fraction] = field(default_factory=dict)
    objective: float | None = None

    @property
    def feasible(self) -> bool:
        return not self.violations

    def codes(self) -> list[str]:
        return [v.code for v in self.violations]

    def to_dict(self) -> dict[str, Any]:
        return {
            "feasible": self.feasible,
            "objective": self.objective,
            "violations": [{"code": v.code, "detail": v.detail} for v in self.violations],
            "warnings": [{"code": v.code, "detail": v.detail} for v in self.warnings],
            "delays": {k: float(d) for k, d in self.delays.items()},
        }


def _q(value) -> Fraction:
    return Fraction(value) if isinstance(value, int) else Fraction(float(value))


def check_placement(instance: Instance, assign: dict[tuple[str, int], str],
                    activated: set[str]) -> list[Violation]:
    """Assignment, coupling and node capacity constraints, in exact arithmetic."""
    out = []
    net = instance.network
    load = {v: Fraction(0) for v in net.cloud_nodes}
    for svc in instance.services:
        for s in range(1, len(svc.sfc) + 1):
            v = assign.get((svc.id, s))
            if v is None:
                out.append(Violation("assignment", f"({svc.id},{s}) has no host"))
                continue
            if v not in net.cloud_nodes:
                out.append(Violation("assignment", f"({svc.id},{s}) placed on non-cloud node {v}"))
                continue
            if v not in activated:
                out.append(Violation("coupling", f"({svc.id},{s}) on inactive node {v}"))
            load[v] += _q(svc.rates[s])
    for v, total in load.items():
        if total > _q(net.cloud_nodes[v]):
            out.append(Violation("node-capacity", f"{v}: load {float(total)} > {net.cloud_nodes[v]}"))
    return out


def validate_solution(instance: Instance, doc: dict[str, Any]) -> SolutionReport:
    rep = SolutionReport()
    net = instance.network
    raw_assign = doc.get("assign")
    if raw_assign is None or doc.get("activated") is None:
        rep.violations.append(Violation("missing-placement", "no assign/activated section"))
        return rep
    assign: dict[tuple[str, int], str] = {}
    for e in raw_assign:
        key = (str(e["service"]), int(e["position"]))
        if key in assign:
            rep.violations.append(Violation("assignment", f"{key} assigned twice"))
        assign[key] = e["node"]
    activated = set(doc["activated"])
    rep.violations += check_placement(instance, assign, activated)
    if rep.violations:
        return rep

    segs = doc.get("segments")
    if segs is None:
        rep.violations.append(Violation("missing-routing", "no segments section"))
        return rep
    by_seg = {(str(e["service"]), int(e["segment"])): e["paths"] for e in segs}
    load: dict[tuple[str, str], float] = {arc: 0.0 for arc in net.capacity}
    for svc in instance.services:
        hosts = [svc.source] + [assign[(svc.id, s)] for s in range(1, len(svc.sfc) + 1)] \
            + [svc.destination]
        total = Fraction(0)
        for s in range(len(svc.sfc) + 1):
            plist = by_seg.get((svc.id, s))
            if not plist:
                rep.violations.append(Violation("missing-segment", f"({svc.id},{s})"))
                continue
            if len(plist) > instance.path_budget:
                rep.warnings.append(Violation("path-budget-exceeded",
                                              f"({svc.id},{s}) uses {len(plist)} paths"))
            frac_sum = 0.0
            worst = Fraction(0)
            for p in plist:
                nodes, frac = p["nodes"], float(p["fraction"])
                frac_sum += frac
                if not 0 < frac <= 1 + FRACTION_SUM_TOL:
                    rep.violations.append(Violation("fraction-range", f"({svc.id},{s}): {frac}"))
                if not nodes or nodes[0] != hosts[s] or nodes[-1] != hosts[s + 1]:
                    rep.violations.append(Violation(
                        "path-endpoints", f"({svc.id},{s}): {nodes} should run {hosts[s]}->{hosts[s + 1]}"))
                    continue
                length = Fraction(0)
                for arc in zip(nodes, nodes[1:]):
                    if arc not in net.delay:
                        rep.violations.append(Violation("path-link", f"({svc.id},{s}): no link {arc}"))
                        break
                    length += _q(net.delay[arc])
                    load[arc] += float(svc.rates[s]) * frac
                worst = max(worst, length)
            if abs(frac_sum - 1.0) > FRACTION_SUM_TOL:
                rep.violations.append(Violation("segment-fraction-sum",
                                                f"({svc.id},{s}): fractions sum to {frac_sum!r}"))
            total += worst
        for s in range(1, len(svc.sfc) + 1):
            total += _q(svc.nfv_delay[(assign[(svc.id, s)], s)])
        rep.delays[svc.id] = total
        if total > _q(svc.delay_budget):
            rep.violations.append(Violation(
                "delay-budget", f"{svc.id}: {float(total)} > {svc.delay_budget}"))
    for arc, val in load.items():
        if val > net.capacity[arc] + LINK_TOL:
            rep.violations.append(Violation("link-capacity",
                                            f"{arc}: load {val!r} > {net.capacity[arc]}"))
    for e in doc.get("services", []):
        claimed = e.get("delay")
        mine = rep.delays.get(str(e["service"]))
        if claimed is not None and mine is not None and abs(float(mine) - claimed) > 1e-9:
            rep.warnings.append(Violation("delay-mismatch",
                                          f"{e['service']}: claimed {claimed}, recomputed {float(mine)}"))
    rep.objective = len(activated) + instance.sigma * float(sum(rep.delays.values()))
    return rep
