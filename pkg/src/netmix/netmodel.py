"""Underlay network model, agent overlay paths, and link categories."""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass

__all__ = [
    "TopologyError",
    "UnderlayNet",
    "PathTable",
    "Category",
    "CategoryTable",
    "load_topology",
    "shortest_paths",
    "compute_categories",
]


class TopologyError(ValueError):
    """Raised when a topology document fails parsing or validation."""


def _canon(a, b):
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class UnderlayNet:
    """Physical network hosting the learning agents.

    nodes: all node identifiers.
    links: undirected links as (a, b, capacity) with a < b; capacity is
           data-units/second and applies to each direction separately.
    agents: ordered list of agent host nodes; agent index i refers to agents[i].
    """

    nodes: tuple[str, ...]
    links: tuple[tuple[str, str, float], ...]
    agents: tuple[str, ...]

    def __post_init__(self):
        node_set = set(self.nodes)
        if len(node_set) != len(self.nodes):
            raise TopologyError("duplicate node identifiers")
        if len(self.agents) < 2:
            raise TopologyError("need at least 2 agents")
        if len(set(self.agents)) != len(self.agents):
            raise TopologyError("duplicate agents")
        for a in self.agents:
            if a not in node_set:
                raise TopologyError(f"agent {a!r} is not a node")
        seen = set()
        for a, b, cap in self.links:
            if a not in node_set or b not in node_set:
                raise TopologyError(f"link {a}-{b} references unknown node")
            if a == b:
                raise TopologyError(f"self-loop on node {a}")
            key = _canon(a, b)
            if key in seen:
                raise TopologyError(f"duplicate link {key[0]}-{key[1]}")
            seen.add(key)
            if not cap > 0:
                raise TopologyError(f"nonpositive capacity on link {a}-{b}")
        if not self._connected():
            raise TopologyError("underlay graph is not connected")

    def _connected(self) -> bool:
        if not self.nodes:
            return False
        adj = self.adjacency()
        stack = [self.nodes[0]]
        seen = {self.nodes[0]}
        while stack:
            u = stack.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return len(seen) == len(self.nodes)

    def adjacency(self) -> dict[str, list[str]]:
        adj: dict[str, list[str]] = {u: [] for u in self.nodes}
        for a, b, _ in self.links:
            adj[a].append(b)
            adj[b].append(a)
        for u in adj:
            adj[u].sort()
        return adj

    def capacity(self, a: str, b: str) -> float:
        """Capacity of the (undirected) link between a and b."""
        return self.capacities()[_canon(a, b)]

    def capacities(self) -> dict[tuple[str, str], float]:
        if not hasattr(self, "_caps"):
            object.__setattr__(
                self, "_caps", {_canon(a, b): c for a, b, c in self.links}
            )
        return self._caps

    @property
    def m(self) -> int:
        return len(self.agents)

    def overlay_links(self) -> list[tuple[int, int]]:
        """Complete overlay edge set in lexicographic (agent-index) order."""
        m = self.m
        return [(i, j) for i in range(m) for j in range(i + 1, m)]


@dataclass(frozen=True)
class PathTable:
    """Underlay routing path for each unordered agent pair.

    paths[(i, j)] (i < j, agent indices) is the node sequence from agents[i]
    to agents[j]; the reverse direction uses the reversed sequence.
    """

    agents: tuple[str, ...]
    paths: dict[tuple[int, int], tuple[str, ...]]

    def path(self, i: int, j: int) -> tuple[str, ...]:
        """Directed path from agent i to agent j."""
        if i < j:
            return self.paths[(i, j)]
        return tuple(reversed(self.paths[(j, i)]))

    def path_links(self, i: int, j: int) -> list[tuple[str, str]]:
        """Undirected (canonical) links along the path of pair (i, j)."""
        p = self.path(min(i, j), max(i, j))
        return [_canon(p[k], p[k + 1]) for k in range(len(p) - 1)]


@dataclass(frozen=True)
class Category:
    """Underlay links traversed by exactly the overlay links in `key`."""

    key: frozenset[tuple[int, int]]
    members: tuple[tuple[str, str], ...]
    capacity: float  # min member capacity


@dataclass(frozen=True)
class CategoryTable:
    """Partition of on-path underlay links into categories, with bottlenecks."""

    agents: tuple[str, ...]
    categories: tuple[Category, ...]

    @property
    def m(self) -> int:
        return len(self.agents)

    @property
    def min_capacity(self) -> float:
        return min(c.capacity for c in self.categories)

    def overlay_links(self) -> list[tuple[int, int]]:
        m = self.m
        return [(i, j) for i in range(m) for j in range(i + 1, m)]

    def path_bottleneck(self, i: int, j: int) -> float:
        """Bottleneck capacity of the underlay path of overlay link (i, j)."""
        link = (i, j) if i < j else (j, i)
        caps = [c.capacity for c in self.categories if link in c.key]
        if not caps:
            raise KeyError(f"overlay link {link} not covered by any category")
        return min(caps)


def load_topology(source) -> UnderlayNet:
    """Parse and validate a JSON topology document.

    `source` may be a JSON string, a path, or an open file object. The
    document must contain exactly the keys "nodes", "links", "agents";
    each link is {"a": ..., "b": ..., "capacity": ...}.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            with open(text, "r", encoding="utf-8") as fh:
                text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TopologyError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TopologyError("top-level document must be an object")
    extra = set(doc) - {"nodes", "links", "agents"}
    if extra:
        raise TopologyError(f"unknown keys: {sorted(extra)}")
    for key in ("nodes", "links", "agents"):
        if key not in doc:
            raise TopologyError(f"missing key {key!r}")
    links = []
    for entry in doc["links"]:
        if not isinstance(entry, dict) or set(entry) != {"a", "b", "capacity"}:
            raise TopologyError(f"malformed link entry: {entry!r}")
        a, b = str(entry["a"]), str(entry["b"])
        cap = float(entry["capacity"])
        links.append(_canon(a, b) + (cap,))
    return UnderlayNet(
        nodes=tuple(str(n) for n in doc["nodes"]),
        links=tuple(links),
        agents=tuple(str(a) for a in doc["agents"]),
    )


def _lex_shortest_path(adj, src, dst):
    """Hop-count-shortest path src->dst, ties by smallest node sequence."""
    # Dijkstra on (hops, node-sequence); sequences are short at desk scale.
    best: dict[str, tuple[int, tuple[str, ...]]] = {}
    heap = [(0, (src,))]
    while heap:
        hops, path = heapq.heappop(heap)
        u = path[-1]
        if u in best and best[u] <= (hops, path):
            continue
        best[u] = (hops, path)
        if u == dst:
            continue
        for v in adj[u]:
            if v in path:
                continue
            cand = (hops + 1, path + (v,))
            if v not in best or cand < best[v]:
                heapq.heappush(heap, cand)
    if dst not in best:
        raise TopologyError(f"no path between {src} and {dst}")
    return best[dst][1]


def shortest_paths(net: UnderlayNet) -> PathTable:
    """Default underlay routing: hop-count shortest paths between agents.

    Each unordered pair is computed once, oriented from the lexicographically
    smaller host node; ties among equal-hop paths are broken by the smallest
    node-identifier sequence, so the result is deterministic and symmetric.
    """
    adj = net.adjacency()
    paths: dict[tuple[int, int], tuple[str, ...]] = {}
    for i in range(net.m):
        for j in range(i + 1, net.m):
            a, b = net.agents[i], net.agents[j]
            if a <= b:
                p = _lex_shortest_path(adj, a, b)
            else:
                p = tuple(reversed(_lex_shortest_path(adj, b, a)))
            paths[(i, j)] = p
    return PathTable(agents=net.agents, paths=paths)


def compute_categories(net: UnderlayNet, paths: PathTable) -> CategoryTable:
    """Group on-path underlay links by the exact set of overlay links using them."""
    caps = net.capacities()
    traversed: dict[tuple[str, str], set[tuple[int, int]]] = {}
    for (i, j) in net.overlay_links():
        for link in paths.path_links(i, j):
            traversed.setdefault(link, set()).add((i, j))
    grouped: dict[frozenset, list[tuple[str, str]]] = {}
    for link, users in traversed.items():
        grouped.setdefault(frozenset(users), []).append(link)
    categories = []
    for key in sorted(grouped, key=lambda k: sorted(k)):
        members = tuple(sorted(grouped[key]))
        cap = min(caps[l] for l in members)
        categories.append(Category(key=key, members=members, capacity=cap))
    return CategoryTable(agents=net.agents, categories=tuple(categories))
