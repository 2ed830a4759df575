import itertools
import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from netslice.model import (GenerationFailed, GeneratorParams, Network, Service, delay_budget,
                            generate_instance, instance_from_dict, instance_to_dict,
                            shortest_delay, validate_instance)

from conftest import make_t1


def codes(inst):
    return [v.code for v in validate_instance(inst)]


def test_t1_is_valid(t1):
    assert codes(t1) == []


def test_source_in_cloud():
    inst = make_t1()
    svc = replace(inst.services[0], source="a")
    assert codes(replace(inst, services=(svc,))) == ["source-in-cloud"]


def test_dangling_link():
    inst = make_t1()
    net = inst.network
    delay = dict(net.delay) | {("a", "zz"): 1}
    cap = dict(net.capacity) | {("a", "zz"): 1}
    bad = replace(inst, network=replace(net, delay=delay, capacity=cap))
    assert codes(bad) == ["dangling-link"]


@pytest.mark.parametrize("change, code", [
    (dict(path_budget=0), "path-budget"),
    (dict(sigma=-1.0), "negative-sigma"),
])
def test_instance_level_codes(change, code):
    assert code in codes(replace(make_t1(), **change))


def test_service_level_codes():
    inst = make_t1()
    svc = inst.services[0]
    assert "nonpositive-rate" in codes(replace(inst, services=(replace(svc, rates=(1, 0)),)))
    assert "rate-count" in codes(replace(inst, services=(replace(svc, rates=(1,)),)))
    assert "nonpositive-budget" in codes(replace(inst, services=(replace(svc, delay_budget=0),)))
    assert "missing-nfv-delay" in codes(replace(inst, services=(replace(svc, nfv_delay={("a", 1): 3}),)))
    assert "duplicate-service" in codes(replace(inst, services=(svc, svc)))


def line_net(delays):
    nodes = tuple(f"n{i}" for i in range(len(delays) + 1))
    arcs = {(nodes[i], nodes[i + 1]): d for i, d in enumerate(delays)}
    return Network(nodes, arcs, {a: 1 for a in arcs}, {})


def test_shortest_delay_examples():
    net = line_net([1, 1])
    assert shortest_delay(net, "n0", "n2") == 2
    assert shortest_delay(net, "n1", "n1") == 0
    assert shortest_delay(net, "n2", "n0") is None


def brute_shortest(net, s, t):
    # minimum over all simple paths, enumerated through node permutations
    if s == t:
        return 0
    inner = [n for n in net.nodes if n not in (s, t)]
    best = None
    for r in range(len(inner) + 1):
        for mid in itertools.permutations(inner, r):
            path = (s, *mid, t)
            arcs = list(zip(path, path[1:]))
            if all(a in net.delay for a in arcs):
                d = sum(net.delay[a] for a in arcs)
                best = d if best is None else min(best, d)
    return best


def test_parallel_routes():
    arcs = {("s", "a"): 1, ("a", "t"): 2, ("s", "b"): 2, ("b", "t"): 3}
    net = Network(("s", "a", "b", "t"), arcs, {a: 1 for a in arcs}, {})
    assert shortest_delay(net, "s", "t") == brute_shortest(net, "s", "t") == 3


@st.composite
def small_networks(draw):
    n = draw(st.integers(2, 6))
    nodes = tuple(f"v{i}" for i in range(n))
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    delay = {p: draw(st.integers(0, 9)) for p in chosen}
    return Network(nodes, delay, {p: 1 for p in chosen}, {})


@settings(max_examples=60, deadline=None)
@given(small_networks(), st.data())
def test_shortest_delay_matches_enumeration(net, data):
    s = data.draw(st.sampled_from(net.nodes))
    t = data.draw(st.sampled_from(net.nodes))
    assert shortest_delay(net, s, t) == brute_shortest(net, s, t)


@settings(max_examples=60, deadline=None)
@given(small_networks(), st.data())
def test_triangle_property(net, data):
    s, m, t = (data.draw(st.sampled_from(net.nodes)) for _ in range(3))
    st_, sm, mt = shortest_delay(net, s, t), shortest_delay(net, s, m), shortest_delay(net, m, t)
    if sm is not None and mt is not None:
        assert st_ is not None and st_ <= sm + mt


def test_budget_formula():
    assert delay_budget(4, 2.5) == 34.5


def test_generation_is_deterministic():
    p = GeneratorParams(seed=11)
    a, b = generate_instance(p), generate_instance(p)
    assert json.dumps(instance_to_dict(a)) == json.dumps(instance_to_dict(b))
    other = generate_instance(replace(p, seed=12))
    assert instance_to_dict(other) != instance_to_dict(a)


def test_seed_family_ranges():
    for seed in range(100):
        p = GeneratorParams(seed=seed, node_count=12, link_count=36, service_count=2)
        inst = generate_instance(p)
        assert validate_instance(inst) == []
        assert all(50 <= mu <= 100 for mu in inst.network.cloud_nodes.values())
        assert all(5 <= c <= 55 for c in inst.network.capacity.values())
        assert set(inst.network.delay.values()) <= {1, 2}
        dests = {svc.destination for svc in inst.services}
        assert len(dests) == 1
        for svc in inst.services:
            assert len(set(svc.rates)) == 1
            assert all(float(r).is_integer() and 1 <= r <= 11 for r in svc.rates)
            assert set(svc.nfv_delay.values()) <= {3, 4, 5, 6}
            assert len(set(svc.sfc)) == len(svc.sfc)
            dist = shortest_delay(inst.network, svc.source, svc.destination)
            assert 20 + 3 * dist <= svc.delay_budget <= 20 + 3 * dist + 5


def test_json_round_trip():
    inst = generate_instance(GeneratorParams(seed=5))
    doc = json.loads(json.dumps(instance_to_dict(inst)))
    assert doc["format"] == 1
    assert instance_from_dict(doc) == inst


def test_bad_params():
    with pytest.raises(ValueError):
        generate_instance(GeneratorParams(link_count=63))
    with pytest.raises(ValueError):
        GeneratorParams.from_dict({"bogus": 1})


def test_generation_can_fail():
    # too few links to connect anything through a cloud
    with pytest.raises((GenerationFailed, ValueError)):
        generate_instance(GeneratorParams(node_count=8, link_count=2, cloud_count=2, max_attempts=3))
