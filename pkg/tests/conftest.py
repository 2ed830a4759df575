import pytest

from netslice.model import GeneratorParams, Instance, Network, Service


def make_t1(budget=20.0, mu=10.0, sigma=0.001):
    """Four nodes, two clouds, one single-function service."""
    arcs = [("s", "a"), ("s", "b"), ("a", "t"), ("b", "t")]
    net = Network(nodes=("s", "a", "b", "t"),
                  delay={a: 1 for a in arcs}, capacity={a: 10 for a in arcs},
                  cloud_nodes={"a": mu, "b": mu})
    svc = Service("k1", "s", "t", ("f1",), (1, 1), budget, {("a", 1): 3, ("b", 1): 5})
    return Instance(net, (svc,), sigma=sigma)


def tiny_params(seed, services=2, sfc_length=2):
    return GeneratorParams(node_count=8, link_count=20, cloud_count=2, service_count=services,
                           sfc_length=sfc_length, seed=seed)


def tiny_family(n=30):
    """Tiny instances used for the oracle comparisons, varying |K| and l."""
    shapes = [(1, 1), (1, 2), (2, 1), (2, 2)]
    return [tiny_params(1000 + i, *shapes[i % len(shapes)]) for i in range(n)]


@pytest.fixture
def t1():
    return make_t1()
