"""Networks, service requests and problem instances.

Also holds the random instance generator used by the experiment harness and
the JSON (de)serialisation of instances.
"""
from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

FORMAT_VERSION = 1

Node = str
Link = tuple[Node, Node]


class GenerationFailed(RuntimeError):
    """No admissible topology was found within the retry budget."""


class InstanceFormatError(ValueError):
    """Raised when an instance document cannot be decoded."""


@dataclass(frozen=True)
class Network:
    """Directed network with per-link delay/capacity and capacitated cloud nodes.

    ``nodes`` fixes the node order used for every deterministic tie-break;
    ``cloud_nodes`` maps each cloud node to its compute capacity, in
    declaration order.
    """

    nodes: tuple[Node, ...]
    delay: dict[Link, float]
    capacity: dict[Link, float]
    cloud_nodes: dict[Node, float]

    @property
    def links(self) -> tuple[Link, ...]:
        return tuple(self.delay)

    @property
    def clouds(self) -> tuple[Node, ...]:
        return tuple(self.cloud_nodes)

    def out_links(self) -> dict[Node, list[Node]]:
        adj: dict[Node, list[Node]] = {n: [] for n in self.nodes}
        for i, j in self.delay:
            adj.setdefault(i, []).append(j)
        order = {n: pos for pos, n in enumerate(self.nodes)}
        for succ in adj.values():
            succ.sort(key=lambda n: order.get(n, len(order)))
        return adj


@dataclass(frozen=True)
class Service:
    """One flow with its service function chain.

    ``rates[s]`` is the rate of segment ``s`` (0 = before the first function),
    so ``len(rates) == len(sfc) + 1``. ``nfv_delay[(v, s)]`` is the processing
    delay of function ``s`` (1-based) on cloud node ``v``.
    """

    id: str
    source: Node
    destination: Node
    sfc: tuple[str, ...]
    rates: tuple[float, ...]
    delay_budget: float
    nfv_delay: dict[tuple[Node, int], float]

    @property
    def length(self) -> int:
        return len(self.sfc)

    @property
    def positions(self) -> range:
        """Function positions 1..l."""
        return range(1, len(self.sfc) + 1)

    @property
    def segments(self) -> range:
        """Segment indices 0..l."""
        return range(len(self.sfc) + 1)


@dataclass(frozen=True)
class Instance:
    network: Network
    services: tuple[Service, ...]
    sigma: float = 0.001
    path_budget: int = 2

    def service(self, sid: str) -> Service:
        for svc in self.services:
            if svc.id == sid:
                return svc
        raise KeyError(sid)


@dataclass(frozen=True)
class Violation:
    code: str
    detail: str


def validate_instance(instance: Instance) -> list[Violation]:
    """Return every invariant violation of ``instance`` (empty when valid)."""
    out: list[Violation] = []
    net = instance.network
    nodes = set(net.nodes)
    if len(nodes) != len(net.nodes):
        out.append(Violation("duplicate-node", "node identifiers are not unique"))
    if set(net.delay) != set(net.capacity):
        out.append(Violation("link-mismatch", "delay and capacity tables cover different links"))
    for (i, j) in net.delay:
        if i not in nodes or j not in nodes:
            out.append(Violation("dangling-link", f"link ({i},{j}) references an undeclared node"))
        if i == j:
            out.append(Violation("self-loop", f"link ({i},{j})"))
        if net.delay[(i, j)] < 0:
            out.append(Violation("negative-delay", f"link ({i},{j})"))
    for link, cap in net.capacity.items():
        if not cap > 0:
            out.append(Violation("nonpositive-link-capacity", f"link {link}"))
    for v, mu in net.cloud_nodes.items():
        if v not in nodes:
            out.append(Violation("unknown-cloud-node", f"cloud node {v}"))
        if not mu > 0:
            out.append(Violation("nonpositive-node-capacity", f"cloud node {v}"))
    if instance.path_budget < 1:
        out.append(Violation("path-budget", f"P = {instance.path_budget}"))
    if instance.sigma < 0:
        out.append(Violation("negative-sigma", f"sigma = {instance.sigma}"))
    seen: set[str] = set()
    for svc in instance.services:
        if svc.id in seen:
            out.append(Violation("duplicate-service", f"service {svc.id}"))
        seen.add(svc.id)
        for role, node in (("source", svc.source), ("destination", svc.destination)):
            if node not in nodes:
                out.append(Violation(f"unknown-{role}", f"service {svc.id}: {node}"))
            if node in net.cloud_nodes:
                out.append(Violation(f"{role}-in-cloud", f"service {svc.id}: {node}"))
        if svc.length < 1:
            out.append(Violation("empty-sfc", f"service {svc.id}"))
        if len(svc.rates) != svc.length + 1:
            out.append(Violation("rate-count", f"service {svc.id}: {len(svc.rates)} rates"))
        if any(not r > 0 for r in svc.rates):
            out.append(Violation("nonpositive-rate", f"service {svc.id}"))
        if not svc.delay_budget > 0:
            out.append(Violation("nonpositive-budget", f"service {svc.id}"))
        missing = [(v, s) for v in net.cloud_nodes for s in svc.positions
                   if (v, s) not in svc.nfv_delay]
        if missing:
            out.append(Violation("missing-nfv-delay", f"service {svc.id}: {missing[:3]}"))
    return out


def shortest_delay(network: Network, s: Node, t: Node) -> float | None:
    """Minimum total link delay over directed s-t paths, or None if unreachable."""
    if s == t:
        return 0
    adj = network.out_links()
    dist = {s: 0}
    heap: list[tuple[float, int, Node]] = [(0, 0, s)]
    tick = 1
    while heap:
        d, _, u = heapq.heappop(heap)
        if u == t:
            return d
        if d > dist.get(u, math.inf):
            continue
        for w in adj.get(u, ()):
            nd = d + network.delay[(u, w)]
            if nd < dist.get(w, math.inf):
                dist[w] = nd
                heapq.heappush(heap, (nd, tick, w))
                tick += 1
    return None


# --------------------------------------------------------------------------
# random instances

@dataclass(frozen=True)
class GeneratorParams:
    node_count: int = 20
    link_count: int = 64
    cloud_count: int = 3
    service_count: int = 3
    node_cap_range: tuple[int, int] = (50, 100)
    link_cap_range: tuple[int, int] = (5, 55)
    nfv_delay_choices: tuple[int, ...] = (3, 4, 5, 6)
    link_delay_choices: tuple[int, ...] = (1, 2)
    function_pool_size: int = 4
    sfc_length: int = 3
    rate_range: tuple[int, int] = (1, 11)
    budget_base: float = 20
    budget_dist_factor: float = 3
    budget_slack_range: tuple[float, float] = (0, 5)
    sigma: float = 0.001
    path_budget: int = 2
    seed: int = 0
    max_attempts: int = 100

    def check(self) -> None:
        for lo_hi in (self.node_cap_range, self.link_cap_range, self.rate_range,
                      self.budget_slack_range):
            if lo_hi[0] > lo_hi[1]:
                raise ValueError(f"empty range {lo_hi}")
        if not self.nfv_delay_choices or not self.link_delay_choices:
            raise ValueError("empty delay choice set")
        if min(self.node_count, self.link_count, self.cloud_count,
               self.service_count, self.sfc_length, self.function_pool_size) < 1:
            raise ValueError("counts must be positive")
        if self.cloud_count > self.node_count - 3:
            raise ValueError("need room for a source, a transit and a destination node")
        if self.link_count % 2:
            raise ValueError("link_count counts directed links and must be even")
        if self.seed < 0:
            raise ValueError("seed must be unsigned")

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "GeneratorParams":
        kw = {}
        for key, val in data.items():
            if key not in cls.__dataclass_fields__:
                raise ValueError(f"unknown generator parameter {key!r}")
            kw[key] = tuple(val) if isinstance(val, list) else val
        return cls(**kw)


def _layer_sizes(p: GeneratorParams) -> tuple[int, int]:
    rest = p.node_count - p.cloud_count - 1
    n_src = max(1, rest // 3)
    return n_src, rest - n_src


def _sample_edges(p: GeneratorParams, rng: np.random.Generator) -> list[tuple[str, str]] | None:
    """Undirected edges of a layered topology, or None if the budget does not fit."""
    n_src, n_mid = _layer_sizes(p)
    sources = [f"s{i}" for i in range(1, n_src + 1)]
    transit = [f"m{i}" for i in range(1, n_mid + 1)]
    clouds = [f"c{i}" for i in range(1, p.cloud_count + 1)]
    dest = "t"
    budget = p.link_count // 2
    edges: set[frozenset[str]] = set()

    def add(a: str, b: str) -> None:
        edges.add(frozenset((a, b)))

    # random spanning tree over the transit mesh
    order = list(rng.permutation(transit))
    for pos in range(1, len(order)):
        add(order[pos], order[int(rng.integers(pos))])
    for node in sources + clouds + [dest]:
        add(node, transit[int(rng.integers(len(transit)))])
    if len(edges) > budget:
        return None

    # sources only attach to the transit mesh; keeps them away from the clouds
    upper = transit + clouds + [dest]
    candidates = [frozenset((a, b)) for idx, a in enumerate(upper) for b in upper[idx + 1:]]
    candidates += [frozenset((s, m)) for s in sources for m in transit]
    candidates = [e for e in candidates if e not in edges]
    extra = budget - len(edges)
    if extra > len(candidates):
        return None
    picks = rng.choice(len(candidates), size=extra, replace=False) if extra else []
    for idx in sorted(int(i) for i in picks):
        edges.add(candidates[idx])
    return sorted(tuple(sorted(e)) for e in edges)


def _connected_via_cloud(net: Network, source: Node, dest: Node) -> bool:
    return any(shortest_delay(net, source, v) is not None
               and shortest_delay(net, v, dest) is not None for v in net.cloud_nodes)


def generate_instance(params: GeneratorParams) -> Instance:
    """Draw a random instance; a pure function of ``params`` (including the seed)."""
    params.check()
    rng = np.random.default_rng(params.seed)
    n_src, n_mid = _layer_sizes(params)
    nodes = tuple([f"s{i}" for i in range(1, n_src + 1)]
                  + [f"m{i}" for i in range(1, n_mid + 1)]
                  + [f"c{i}" for i in range(1, params.cloud_count + 1)] + ["t"])
    clouds = [n for n in nodes if n.startswith("c")]
    sources = [n for n in nodes if n.startswith("s")]
    for _ in range(params.max_attempts):
        edges = _sample_edges(params, rng)
        if edges is None:
            continue
        delay: dict[Link, float] = {}
        capacity: dict[Link, float] = {}
        lo, hi = params.link_cap_range
        for a, b in edges:
            # both directions, independent draws
            for link in ((a, b), (b, a)):
                delay[link] = int(rng.choice(params.link_delay_choices))
                capacity[link] = int(rng.integers(lo, hi + 1))
        lo, hi = params.node_cap_range
        cloud_cap = {v: int(rng.integers(lo, hi + 1)) for v in clouds}
        net = Network(nodes, delay, capacity, cloud_cap)
        services = []
        ok = True
        for k in range(1, params.service_count + 1):
            src = sources[int(rng.integers(len(sources)))]
            if not _connected_via_cloud(net, src, "t"):
                ok = False
                break
            pool = [f"f{i}" for i in range(1, params.function_pool_size + 1)]
            sfc = tuple(str(f) for f in rng.choice(pool, size=params.sfc_length,
                                                   replace=params.sfc_length > len(pool)))
            rate = int(rng.integers(params.rate_range[0], params.rate_range[1] + 1))
            nfv = {(v, s): int(rng.choice(params.nfv_delay_choices))
                   for v in clouds for s in range(1, params.sfc_length + 1)}
            alpha = float(rng.uniform(*params.budget_slack_range))
            dist = shortest_delay(net, src, "t")
            budget = delay_budget(dist, alpha, params.budget_base, params.budget_dist_factor)
            services.append(Service(f"k{k}", src, "t", sfc, (rate,) * (params.sfc_length + 1),
                                    budget, nfv))
        if ok:
            return Instance(net, tuple(services), params.sigma, params.path_budget)
    raise GenerationFailed(f"no admissible topology after {params.max_attempts} attempts")


def delay_budget(dist: float, alpha: float, base: float = 20, factor: float = 3) -> float:
    """E2E delay threshold ``base + (factor * dist + alpha)``."""
    return base + (factor * dist + alpha)


# --------------------------------------------------------------------------
# JSON

def instance_to_dict(instance: Instance) -> dict[str, Any]:
    net = instance.network
    return {
        "format": FORMAT_VERSION,
        "network": {
            "nodes": list(net.nodes),
            "links": [{"from": i, "to": j, "delay": net.delay[(i, j)],
                       "capacity": net.capacity[(i, j)]} for (i, j) in net.delay],
            "cloud_nodes": [{"node": v, "capacity": mu} for v, mu in net.cloud_nodes.items()],
        },
        "services": [
            {
                "id": svc.id,
                "source": svc.source,
                "destination": svc.destination,
                "sfc": list(svc.sfc),
                "rates": list(svc.rates),
                "delay_budget": svc.delay_budget,
                "nfv_delay": [{"node": v, "position": s, "delay": d}
                              for (v, s), d in svc.nfv_delay.items()],
            }
            for svc in instance.services
        ],
        "sigma": instance.sigma,
        "path_budget": instance.path_budget,
    }


def instance_from_dict(data: dict[str, Any]) -> Instance:
    if data.get("format") != FORMAT_VERSION:
        raise InstanceFormatError(f"unsupported or missing format version: {data.get('format')!r}")
    try:
        raw = data["network"]
        links = [((l["from"], l["to"]), l) for l in raw["links"]]
        net = Network(
            tuple(raw["nodes"]),
            {key: l["delay"] for key, l in links},
            {key: l["capacity"] for key, l in links},
            {c["node"]: c["capacity"] for c in raw["cloud_nodes"]},
        )
        services = tuple(
            Service(
                str(s["id"]), s["source"], s["destination"], tuple(s["sfc"]),
                tuple(s["rates"]), s["delay_budget"],
                {(e["node"], int(e["position"])): e["delay"] for e in s["nfv_delay"]},
            )
            for s in data["services"]
        )
        return Instance(net, services, data["sigma"], int(data["path_budget"]))
    except (KeyError, TypeError) as exc:
        raise InstanceFormatError(f"malformed instance document: {exc}") from exc


def dump_instance(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
