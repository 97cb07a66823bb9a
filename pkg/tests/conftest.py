"""Shared fixtures and random instance generators."""

import random
from pathlib import Path

import pytest

from netmix.netmodel import UnderlayNet, compute_categories, shortest_paths

DATA_DIR = Path(__file__).resolve().parent.parent / "data"

FIG2_PATH = DATA_DIR / "fig2.json"
TWOCLUSTERS_PATH = DATA_DIR / "twoclusters.json"
ROOFNET_PATH = DATA_DIR / "roofnet_like.json"


@pytest.fixture(scope="session")
def fig2_net():
    from netmix.netmodel import load_topology

    return load_topology(str(FIG2_PATH))


@pytest.fixture(scope="session")
def fig2_paths(fig2_net):
    return shortest_paths(fig2_net)


@pytest.fixture(scope="session")
def fig2_cats(fig2_net, fig2_paths):
    return compute_categories(fig2_net, fig2_paths)


@pytest.fixture(scope="session")
def twoclusters_net():
    from netmix.netmodel import load_topology

    return load_topology(str(TWOCLUSTERS_PATH))


@pytest.fixture(scope="session")
def twoclusters_cats(twoclusters_net):
    return compute_categories(twoclusters_net, shortest_paths(twoclusters_net))


def random_net(m, n_nodes, seed):
    """Connected random underlay: shuffled spanning tree plus extra edges.

    Capacities are uniform in [1, 4]; agents are a sorted random node sample.
    """
    rng = random.Random(seed)
    n_nodes = max(n_nodes, m, 2)
    nodes = [f"v{k:02d}" for k in range(n_nodes)]
    order = nodes[:]
    rng.shuffle(order)
    edges = {tuple(sorted(p)) for p in zip(order, order[1:])}
    max_edges = n_nodes * (n_nodes - 1) // 2
    target = min(n_nodes - 1 + rng.randint(0, n_nodes), max_edges)
    while len(edges) < target:
        a, b = rng.sample(nodes, 2)
        edges.add(tuple(sorted((a, b))))
    links = tuple((a, b, rng.uniform(1.0, 4.0)) for a, b in sorted(edges))
    agents = tuple(sorted(rng.sample(nodes, m)))
    return UnderlayNet(nodes=tuple(nodes), links=links, agents=agents)


def random_instance(seed, max_agents=6, max_nodes=12):
    """(net, paths, cats, e_a): random topology plus a random activation set."""
    rng = random.Random(seed)
    m = rng.randint(2, max_agents)
    n = rng.randint(m, max_nodes)
    net = random_net(m, n, seed * 7 + 1)
    paths = shortest_paths(net)
    cats = compute_categories(net, paths)
    pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    e_a = sorted(rng.sample(pairs, rng.randint(1, len(pairs))))
    return net, paths, cats, e_a
