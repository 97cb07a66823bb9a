"""Multicast demands and per-iteration completion time under fair sharing."""

from __future__ import annotations

from dataclasses import dataclass

from .netmodel import CategoryTable, PathTable, UnderlayNet

__all__ = [
    "Flow",
    "DemandSet",
    "LoadProfile",
    "AsymmetricLoadError",
    "demands_from_activation",
    "link_loads",
    "completion_time",
    "completion_time_by_category",
    "maxmin_rate_oracle",
]


@dataclass(frozen=True)
class Flow:
    """Multicast flow: src disseminates `size` data units to every dest."""

    src: int
    dests: tuple[int, ...]
    size: float


@dataclass(frozen=True)
class DemandSet:
    flows: tuple[Flow, ...]
    size: float  # uniform per-flow data size

    def __len__(self):
        return len(self.flows)


class AsymmetricLoadError(ValueError):
    """Category-level accounting requires symmetric demands/loads."""


def demands_from_activation(e_a, kappa: float) -> DemandSet:
    """One multicast flow per agent with a nonempty activated neighborhood.

    `e_a` is a collection of undirected overlay links as agent-index pairs.
    """
    if not kappa > 0:
        raise ValueError("data size must be positive")
    neighbors: dict[int, set[int]] = {}
    for i, j in e_a:
        if i == j:
            raise ValueError("overlay self-link")
        neighbors.setdefault(i, set()).add(j)
        neighbors.setdefault(j, set()).add(i)
    flows = tuple(
        Flow(src=i, dests=tuple(sorted(neighbors[i])), size=kappa)
        for i in sorted(neighbors)
    )
    return DemandSet(flows=flows, size=kappa)


@dataclass(frozen=True)
class LoadProfile:
    """Activated-unicast-flow count per directed underlay link."""

    counts: dict[tuple[str, str], int]  # (from-node, to-node) -> t

    def count(self, u: str, v: str) -> int:
        return self.counts.get((u, v), 0)


def link_loads(routing, paths: PathTable) -> LoadProfile:
    """Count unicast traversals of each directed underlay link.

    Each directed overlay hop (i, j) activated by a flow sends one unicast
    along the underlay path from agent i to agent j.
    """
    counts: dict[tuple[str, str], int] = {}
    for i, j in routing.directed_overlay_hops():
        p = paths.path(i, j)
        for k in range(len(p) - 1):
            key = (p[k], p[k + 1])
            counts[key] = counts.get(key, 0) + 1
    return LoadProfile(counts=counts)


def completion_time(loads: LoadProfile, net: UnderlayNet, kappa: float) -> float:
    """Time until every multicast flow completes under equal bandwidth sharing."""
    caps = net.capacities()
    tau = 0.0
    for (u, v), t in loads.counts.items():
        c = caps[(u, v) if u <= v else (v, u)]
        tau = max(tau, kappa * t / c)
    return tau


def completion_time_by_category(
    loads: LoadProfile, cats: CategoryTable, kappa: float
) -> float:
    """Same value as completion_time, computed from category-level counts.

    Only valid for symmetric demand sets: every member link of a category
    must carry the same count in both directions.
    """
    tau = 0.0
    for cat in cats.categories:
        t_f = None
        for a, b in cat.members:
            fwd = loads.count(a, b)
            rev = loads.count(b, a)
            if fwd != rev:
                raise AsymmetricLoadError(
                    f"link {a}-{b} carries {fwd} vs {rev} flows per direction"
                )
            if t_f is None:
                t_f = fwd
            elif fwd != t_f:
                raise AsymmetricLoadError(
                    f"unequal counts within category {sorted(cat.key)}"
                )
        if t_f:
            tau = max(tau, kappa * t_f / cat.capacity)
    return tau


def maxmin_rate_oracle(routing, paths: PathTable, net: UnderlayNet):
    """Progressive-filling max-min fair rates for all activated unicast flows.

    Returns (unicast_rates, completion) where unicast_rates maps
    (flow_index, i, j) -> rate, and completion is the time at which the
    slowest multicast flow finishes (max over flows of size / min
    constituent unicast rate). Independent of the equal-sharing formula;
    used as the oracle for its correctness.
    """
    caps = net.capacities()
    # Unicast flow -> directed underlay links it traverses.
    flow_links: dict[tuple[int, int, int], list[tuple[str, str]]] = {}
    for h, (i, j) in routing.flow_overlay_hops():
        p = paths.path(i, j)
        flow_links[(h, i, j)] = [(p[k], p[k + 1]) for k in range(len(p) - 1)]

    remaining = {}
    active_on: dict[tuple[str, str], set] = {}
    for fid, links in flow_links.items():
        for link in links:
            u, v = link
            remaining.setdefault(link, caps[(u, v) if u <= v else (v, u)])
            active_on.setdefault(link, set()).add(fid)

    rates: dict[tuple[int, int, int], float] = {}
    unfrozen = set(flow_links)
    while unfrozen:
        # Saturate the link with the smallest fair share among its active flows.
        share, bottleneck = None, None
        for link in sorted(active_on):
            flows = active_on[link]
            if not flows:
                continue
            s = remaining[link] / len(flows)
            if share is None or s < share:
                share, bottleneck = s, link
        if bottleneck is None:
            break
        frozen = sorted(active_on[bottleneck])
        for fid in frozen:
            rates[fid] = share
            unfrozen.discard(fid)
            for link in flow_links[fid]:
                remaining[link] -= share
                active_on[link].discard(fid)
    completion = 0.0
    for flow_idx, flow in enumerate(routing.demands.flows):
        constituent = [r for (h, _, _), r in rates.items() if h == flow_idx]
        if constituent:
            completion = max(completion, flow.size / min(constituent))
    return rates, completion
