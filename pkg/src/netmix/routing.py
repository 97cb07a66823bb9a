"""Overlay multicast routing: default paths, exact search, local search."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

from .comm import DemandSet
from .netmodel import CategoryTable, PathTable, UnderlayNet, shortest_paths

__all__ = [
    "RoutingSolution",
    "ValidityReport",
    "InstanceTooLargeError",
    "validate_routing",
    "default_routing",
    "tau_bar",
    "optimize_routing_exact",
    "optimize_routing_local",
    "category_completion_time",
]


class InstanceTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class RoutingSolution:
    """Per-flow overlay trees: a directed overlay path for every destination.

    dest_paths[h][k] is the agent-index sequence from the flow's source to
    destination k; the flow's z-set is the union of the path edges.
    """

    demands: DemandSet
    dest_paths: tuple[dict[int, tuple[int, ...]], ...]

    def flow_edges(self, h: int) -> set[tuple[int, int]]:
        """Directed overlay links with z=1 for flow h."""
        edges = set()
        for path in self.dest_paths[h].values():
            for a, b in zip(path, path[1:]):
                edges.add((a, b))
        return edges

    def flow_overlay_hops(self):
        """Yield (flow_index, (i, j)) for every activated directed hop."""
        for h in range(len(self.dest_paths)):
            for edge in sorted(self.flow_edges(h)):
                yield h, edge

    def directed_overlay_hops(self):
        for _, edge in self.flow_overlay_hops():
            yield edge

    def to_json(self) -> str:
        out = []
        for h, flow in enumerate(self.demands.flows):
            out.append(
                {
                    "src": flow.src,
                    "size": flow.size,
                    "z": [list(e) for e in sorted(self.flow_edges(h))],
                    "paths": {
                        str(k): list(p) for k, p in sorted(self.dest_paths[h].items())
                    },
                }
            )
        return json.dumps({"flows": out}, indent=2)


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    violation: str | None = None

    def __bool__(self):
        return self.valid


def validate_routing(sol: RoutingSolution, demands: DemandSet) -> ValidityReport:
    """Check Steiner-arborescence validity of a routing solution.

    Per (flow, destination): the stated path must run from the source to the
    destination without repeating agents (flow conservation), every path edge
    must be in the flow's z-set (r <= z), and every destination must be
    reachable from the source within the z-set.
    """
    if len(sol.dest_paths) != len(demands.flows):
        return ValidityReport(False, "flow count mismatch")
    for h, flow in enumerate(demands.flows):
        z = sol.flow_edges(h)
        got = set(sol.dest_paths[h])
        if got != set(flow.dests):
            return ValidityReport(
                False, f"flow {h}: destinations {sorted(got)} != {sorted(flow.dests)}"
            )
        for k in flow.dests:
            path = sol.dest_paths[h][k]
            if len(path) < 2 or path[0] != flow.src or path[-1] != k:
                return ValidityReport(
                    False, f"flow {h} dest {k}: path {path} violates conservation"
                )
            if len(set(path)) != len(path):
                return ValidityReport(
                    False, f"flow {h} dest {k}: path {path} repeats an agent"
                )
            for edge in zip(path, path[1:]):
                if edge not in z:
                    return ValidityReport(
                        False, f"flow {h} dest {k}: edge {edge} has z=0"
                    )
        # Reachability of every destination inside the z-digraph.
        reach = {flow.src}
        frontier = [flow.src]
        while frontier:
            u = frontier.pop()
            for a, b in z:
                if a == u and b not in reach:
                    reach.add(b)
                    frontier.append(b)
        missing = [k for k in flow.dests if k not in reach]
        if missing:
            return ValidityReport(
                False, f"flow {h}: destinations {missing} unreachable in z"
            )
    return ValidityReport(True)


def default_routing(demands: DemandSet) -> RoutingSolution:
    """Route every unicast on its direct overlay link."""
    dest_paths = tuple(
        {k: (flow.src, k) for k in flow.dests} for flow in demands.flows
    )
    return RoutingSolution(demands=demands, dest_paths=dest_paths)


def tau_bar(e_a, cats: CategoryTable, kappa: float) -> float:
    """Closed-form completion time under default (direct) routing."""
    links = {tuple(sorted(l)) for l in e_a}
    tau = 0.0
    for cat in cats.categories:
        hits = len(links & cat.key)
        if hits:
            tau = max(tau, kappa * hits / cat.capacity)
    return tau


def _directed_hop_counts(sol: RoutingSolution) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for edge in sol.directed_overlay_hops():
        counts[edge] = counts.get(edge, 0) + 1
    return counts


def category_completion_time(sol: RoutingSolution, cats: CategoryTable, kappa: float) -> float:
    """Completion time computed from category-level information only.

    Per category, flows are summed per overlay-link orientation (low->high
    and high->low agent index) and the larger sum is charged against the
    bottleneck capacity. Exact for symmetric routings.
    """
    counts = _directed_hop_counts(sol)
    tau = 0.0
    for cat in cats.categories:
        fwd = sum(counts.get((i, j), 0) for i, j in cat.key)
        rev = sum(counts.get((j, i), 0) for i, j in cat.key)
        t_f = max(fwd, rev)
        if t_f:
            tau = max(tau, kappa * t_f / cat.capacity)
    return tau


def _candidate_paths(src: int, dst: int, m: int, max_hops: int):
    """Simple overlay paths src->dst with at most max_hops hops, lexicographic."""
    paths = [(src, dst)]
    others = [a for a in range(m) if a not in (src, dst)]
    for n_relays in range(1, max_hops):
        for relays in itertools.permutations(others, n_relays):
            paths.append((src,) + relays + (dst,))
    return sorted(paths)


def optimize_routing_exact(
    demands: DemandSet,
    cats: CategoryTable,
    net: UnderlayNet,
    paths: PathTable | None = None,
    relay_depth: int = 2,
) -> RoutingSolution:
    """Globally minimal completion time over bounded-depth overlay routes.

    Branch-and-bound over per-destination overlay paths of at most
    relay_depth + 1 hops; flows are processed in demand order and candidate
    paths in lexicographic order, so the returned solution is deterministic.
    The lower bound at a partial assignment is the completion time of the
    links loaded so far (unassigned unicasts contribute nothing).
    """
    if relay_depth not in (1, 2):
        raise ValueError("relay_depth must be 1 or 2")
    m = cats.m
    if m > 6 or len(demands.flows) > 6:
        raise InstanceTooLargeError(
            f"exact search is guarded to m <= 6 and |H| <= 6 "
            f"(got m={m}, |H|={len(demands.flows)})"
        )
    if not demands.flows:
        return RoutingSolution(demands=demands, dest_paths=())
    if paths is None:
        paths = shortest_paths(net)

    caps = net.capacities()
    hop_links: dict[tuple[int, int], list[tuple[tuple[str, str], float]]] = {}
    for i in range(m):
        for j in range(m):
            if i != j:
                segs = []
                p = paths.path(i, j)
                for a, b in zip(p, p[1:]):
                    cap = caps[(a, b) if a <= b else (b, a)]
                    segs.append(((a, b), cap))
                hop_links[(i, j)] = segs

    unicasts = [
        (h, k) for h, flow in enumerate(demands.flows) for k in flow.dests
    ]
    candidates = {
        (h, k): _candidate_paths(demands.flows[h].src, k, m, relay_depth + 1)
        for h, k in unicasts
    }
    kappa = demands.size

    load: dict[tuple[str, str], float] = {}  # directed link -> kappa*t/C share sum
    count: dict[tuple[str, str], int] = {}
    flow_edges: list[dict[tuple[int, int], int]] = [dict() for _ in demands.flows]

    best = {"tau": float("inf"), "assign": None}

    def current_tau() -> float:
        return max(load.values(), default=0.0)

    def add_edges(h, edges):
        added = []
        for e in edges:
            n = flow_edges[h].get(e, 0)
            flow_edges[h][e] = n + 1
            if n == 0:
                added.append(e)
                for link, cap in hop_links[e]:
                    count[link] = count.get(link, 0) + 1
                    load[link] = kappa * count[link] / cap
        return added

    def remove_edges(h, edges, added):
        for e in edges:
            flow_edges[h][e] -= 1
            if flow_edges[h][e] == 0:
                del flow_edges[h][e]
        for e in added:
            for link, cap in hop_links[e]:
                count[link] -= 1
                load[link] = kappa * count[link] / cap

    assign: list[tuple[int, ...]] = [None] * len(unicasts)

    def search(idx: int):
        if current_tau() >= best["tau"]:
            return
        if idx == len(unicasts):
            best["tau"] = current_tau()
            best["assign"] = list(assign)
            return
        h, k = unicasts[idx]
        for path in candidates[(h, k)]:
            edges = list(zip(path, path[1:]))
            added = add_edges(h, edges)
            assign[idx] = path
            search(idx + 1)
            remove_edges(h, edges, added)
        assign[idx] = None

    search(0)

    dest_paths: list[dict[int, tuple[int, ...]]] = [dict() for _ in demands.flows]
    for (h, k), path in zip(unicasts, best["assign"]):
        dest_paths[h][k] = path
    return RoutingSolution(demands=demands, dest_paths=tuple(dest_paths))


def optimize_routing_local(
    demands: DemandSet,
    cats: CategoryTable,
    budget: int = 1000,
    seed: int = 0,
) -> RoutingSolution:
    """Hill-climbing improvement of the default routing.

    Repeatedly reassigns one unicast pair (both directions, mirrored, which
    keeps the solution symmetric) to its best overlay route of at most 2
    hops given all other routes fixed, judged by the category-level
    completion time. Stops at a local optimum or after `budget` moves.
    Deterministic given the seed (the seed orders the scan of unicasts).
    """
    import random

    sol = default_routing(demands)
    if not demands.flows:
        return sol
    m = cats.m
    kappa = demands.size
    flow_of = {flow.src: h for h, flow in enumerate(demands.flows)}
    pairs = sorted(
        {(min(f.src, k), max(f.src, k)) for f in demands.flows for k in f.dests}
    )
    rng = random.Random(seed)
    order = list(pairs)
    rng.shuffle(order)

    dest_paths = [dict(d) for d in sol.dest_paths]

    def evaluate() -> float:
        return category_completion_time(
            RoutingSolution(demands=demands, dest_paths=tuple(dest_paths)), cats, kappa
        )

    moves = 0
    improved = True
    while improved and moves < budget:
        improved = False
        for a, b in order:
            if moves >= budget:
                break
            h_ab = flow_of.get(a)
            h_ba = flow_of.get(b)
            if h_ab is None or h_ba is None:
                continue
            if b not in dest_paths[h_ab] or a not in dest_paths[h_ba]:
                continue
            cur = evaluate()
            cur_fwd = dest_paths[h_ab][b]
            cur_rev = dest_paths[h_ba][a]
            best_tau, best_path = cur, None
            for path in _candidate_paths(a, b, m, 2):
                if path == cur_fwd:
                    continue
                dest_paths[h_ab][b] = path
                dest_paths[h_ba][a] = tuple(reversed(path))
                tau = evaluate()
                if tau < best_tau - 1e-15:
                    best_tau, best_path = tau, path
            if best_path is not None:
                dest_paths[h_ab][b] = best_path
                dest_paths[h_ba][a] = tuple(reversed(best_path))
                improved = True
                moves += 1
            else:
                dest_paths[h_ab][b] = cur_fwd
                dest_paths[h_ba][a] = cur_rev
    return RoutingSolution(demands=demands, dest_paths=tuple(dest_paths))
