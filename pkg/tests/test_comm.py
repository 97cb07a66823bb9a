"""Demands, link loads, completion times, and the max-min oracle."""

import random

import pytest

from netmix.comm import (
    AsymmetricLoadError,
    completion_time,
    completion_time_by_category,
    demands_from_activation,
    link_loads,
    maxmin_rate_oracle,
)
from netmix.routing import RoutingSolution, default_routing, _candidate_paths

from conftest import random_instance


def test_demands_from_activation():
    dem = demands_from_activation([(0, 1), (1, 2)], kappa=2.0)
    assert dem.size == 2.0
    assert [f.src for f in dem.flows] == [0, 1, 2]
    assert dem.flows[1].dests == (0, 2)
    assert dem.flows[0].size == 2.0
    # Agents with an empty activated neighborhood send nothing.
    dem = demands_from_activation([(0, 2)], kappa=1.0)
    assert [f.src for f in dem.flows] == [0, 2]


def test_demands_rejects_bad_input():
    with pytest.raises(ValueError):
        demands_from_activation([(0, 1)], kappa=0.0)
    with pytest.raises(ValueError):
        demands_from_activation([(1, 1)], kappa=1.0)


def test_link_loads_fig2(fig2_paths):
    dem = demands_from_activation([(0, 2), (0, 3), (1, 2)], 1.0)
    loads = link_loads(default_routing(dem), fig2_paths)
    # Three direct unicasts cross X->Y and three come back.
    assert loads.count("X", "Y") == 3
    assert loads.count("Y", "X") == 3
    assert loads.count("A", "X") == 2
    assert loads.count("X", "A") == 2
    assert loads.count("B", "Z") == 0


def test_completion_time_fig2(fig2_net, fig2_paths, fig2_cats):
    dem = demands_from_activation(fig2_net.overlay_links(), 1.0)
    loads = link_loads(default_routing(dem), fig2_paths)
    tau = completion_time(loads, fig2_net, 1.0)
    # X-Y carries the three long-haul pairs at capacity 1.
    assert tau == 3.0
    assert completion_time_by_category(loads, fig2_cats, 1.0) == tau


def test_category_completion_rejects_asymmetric(fig2_paths, fig2_cats):
    dem = demands_from_activation([(0, 2)], 1.0)
    sol = default_routing(dem)
    # Drop the reverse unicast entirely to break symmetry.
    broken = RoutingSolution(demands=dem, dest_paths=(sol.dest_paths[0], {}))
    loads = link_loads(broken, fig2_paths)
    with pytest.raises(AsymmetricLoadError):
        completion_time_by_category(loads, fig2_cats, 1.0)


def _perturbed_solution(dem, m, seed):
    """Default routing with a random subset of unicasts moved to 2-hop relays."""
    rng = random.Random(seed)
    sol = default_routing(dem)
    dest_paths = [dict(d) for d in sol.dest_paths]
    for h, flow in enumerate(dem.flows):
        for k in flow.dests:
            if rng.random() < 0.3:
                dest_paths[h][k] = rng.choice(
                    _candidate_paths(flow.src, k, m, 2)
                )
    return RoutingSolution(demands=dem, dest_paths=tuple(dest_paths))


def test_equal_share_matches_maxmin_oracle():
    # Spot check ahead of the full acceptance sweep.
    for seed in range(20):
        net, paths, _, e_a = random_instance(seed)
        dem = demands_from_activation(e_a, 1.0)
        sol = _perturbed_solution(dem, net.m, seed)
        tau = completion_time(link_loads(sol, paths), net, 1.0)
        _, oracle = maxmin_rate_oracle(sol, paths, net)
        assert tau == pytest.approx(oracle, rel=1e-9)


def test_maxmin_rates_are_feasible(fig2_net, fig2_paths):
    dem = demands_from_activation(fig2_net.overlay_links(), 1.0)
    sol = default_routing(dem)
    rates, _ = maxmin_rate_oracle(sol, fig2_paths, fig2_net)
    caps = fig2_net.capacities()
    used = {}
    for (h, i, j), r in rates.items():
        assert r > 0
        p = fig2_paths.path(i, j)
        for a, b in zip(p, p[1:]):
            used[(a, b)] = used.get((a, b), 0.0) + r
    for (a, b), total in used.items():
        assert total <= caps[(a, b) if a <= b else (b, a)] + 1e-9
