"""Weighted modularity and a deterministic Louvain partitioner.

Determinism matters more here than raw speed: mention graphs are tiny (one
per document) but cluster ids must be stable across runs, so phase 1 visits
nodes in ascending id order and breaks gain ties toward the smallest
community id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import fsum

from ..errors import EmptyGraphError

GAIN_EPSILON = 1e-9


@dataclass
class WeightedMentionGraph:
    """Undirected weighted graph over mention ids; no self-loops."""

    nodes: set[str] = field(default_factory=set)
    weights: dict[tuple[str, str], float] = field(default_factory=dict)

    def add_node(self, node: str) -> None:
        self.nodes.add(node)

    def add_edge(self, u: str, v: str, w: float) -> None:
        if u == v:
            raise ValueError("self-loops are not allowed")
        if not 0.0 < w <= 1.0:
            raise ValueError(f"edge weight must be in (0, 1], got {w}")
        self.nodes.add(u)
        self.nodes.add(v)
        key = (u, v) if u < v else (v, u)
        self.weights[key] = w

    def edge_list(self) -> list[tuple[str, str, float]]:
        return [(u, v, w) for (u, v), w in sorted(self.weights.items())]

    @property
    def total_weight(self) -> float:
        return sum(self.weights.values())


@dataclass
class Partition:
    communities: dict[str, int]
    modularity: float
    level_modularity: list[float] = field(default_factory=list)

    def groups(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = {}
        for node, comm in self.communities.items():
            out.setdefault(comm, []).append(node)
        for members in out.values():
            members.sort()
        return out


def modularity(
    g: WeightedMentionGraph,
    communities: "dict[str, int] | Partition",
    resolution: float = 1.0,
) -> float:
    """Exact weighted modularity of a node -> community assignment.

    Sums run over the incident-pair multiset with math.fsum so that the
    all-in-one-community partition yields exactly 0.0 and the single-edge
    singleton partition exactly -0.5.
    """
    if isinstance(communities, Partition):
        communities = communities.communities
    if not g.weights:
        raise EmptyGraphError("modularity needs at least one edge")

    # each undirected edge contributes both (u,v,w) and (v,u,w)
    incident: list[tuple[str, str, float]] = []
    for (u, v), w in g.weights.items():
        incident.append((u, v, w))
        incident.append((v, u, w))
    m2 = fsum(w for _, _, w in incident)

    comm_ids = sorted(set(communities[n] for n in g.nodes))
    q_terms = []
    for c in comm_ids:
        intra = fsum(w for u, v, w in incident if communities[u] == c and communities[v] == c)
        sigma = fsum(w for u, _, w in incident if communities[u] == c)
        q_terms.append(intra / m2 - resolution * (sigma / m2) ** 2)
    return fsum(q_terms)


class _LevelGraph:
    """Aggregated working graph: integer nodes, symmetric weights, self-loops."""

    def __init__(self, n: int):
        self.n = n
        self.adj: list[dict[int, float]] = [dict() for _ in range(n)]
        self.loop: list[float] = [0.0] * n

    def add(self, u: int, v: int, w: float) -> None:
        if u == v:
            self.loop[u] += w
        else:
            self.adj[u][v] = self.adj[u].get(v, 0.0) + w
            self.adj[v][u] = self.adj[v].get(u, 0.0) + w

    def degree(self, u: int) -> float:
        return 2.0 * self.loop[u] + sum(self.adj[u].values())

    @property
    def m2(self) -> float:
        return sum(self.degree(u) for u in range(self.n))


def _local_move(g: _LevelGraph, resolution: float) -> tuple[list[int], bool]:
    """Phase 1: greedy node moves in ascending node order until stable."""
    comm = list(range(g.n))
    k = [g.degree(u) for u in range(g.n)]
    sigma_tot = list(k)
    m2 = g.m2
    if m2 == 0.0:
        return comm, False

    moved_any = False
    improved = True
    while improved:
        improved = False
        for u in range(g.n):
            old = comm[u]
            # weights from u into each neighboring community
            into: dict[int, float] = {}
            for v, w in g.adj[u].items():
                into[comm[v]] = into.get(comm[v], 0.0) + w
            sigma_tot[old] -= k[u]

            def score(c: int) -> float:
                return into.get(c, 0.0) - resolution * sigma_tot[c] * k[u] / m2

            best_comm, best_score = old, score(old)
            for c in sorted(into):
                s = score(c)
                if s > best_score or (s == best_score and c < best_comm):
                    best_comm, best_score = c, s
            # only strictly positive gain over staying moves the node
            if best_comm != old and best_score - score(old) > 0.0:
                comm[u] = best_comm
                sigma_tot[best_comm] += k[u]
                improved = True
                moved_any = True
            else:
                comm[u] = old
                sigma_tot[old] += k[u]
    return comm, moved_any


def _aggregate(g: _LevelGraph, comm: list[int]) -> tuple[_LevelGraph, dict[int, int]]:
    ids = sorted(set(comm))
    remap = {c: i for i, c in enumerate(ids)}
    agg = _LevelGraph(len(ids))
    for u in range(g.n):
        agg.loop[remap[comm[u]]] += g.loop[u]
    for u in range(g.n):
        for v, w in g.adj[u].items():
            if u < v:
                agg.add(remap[comm[u]], remap[comm[v]], w)
    return agg, remap


def _modularity_internal(g: _LevelGraph, comm: list[int], resolution: float) -> float:
    m2 = g.m2
    if m2 == 0.0:
        return 0.0
    q = 0.0
    sigma_tot: dict[int, float] = {}
    for u in range(g.n):
        sigma_tot[comm[u]] = sigma_tot.get(comm[u], 0.0) + g.degree(u)
        q += 2.0 * g.loop[u] / m2
        for v, w in g.adj[u].items():
            if comm[u] == comm[v]:
                q += w / m2
    for s in sigma_tot.values():
        q -= resolution * (s / m2) ** 2
    return q


def louvain_partition(g: WeightedMentionGraph, resolution: float = 1.0) -> Partition:
    """Two-phase Louvain; deterministic given node ids."""
    if not g.nodes:
        raise ValueError("graph has no nodes")
    names = sorted(g.nodes)
    index = {name: i for i, name in enumerate(names)}

    level = _LevelGraph(len(names))
    for u, v, w in g.edge_list():
        level.add(index[u], index[v], w)

    # node -> community expressed in current level's node numbering
    node_level_comm = list(range(len(names)))
    levels_q: list[float] = []
    prev_q = _modularity_internal(level, list(range(level.n)), resolution)

    while True:
        comm, moved = _local_move(level, resolution)
        if not moved:
            break
        agg, remap = _aggregate(level, comm)
        node_level_comm = [remap[comm[c]] for c in node_level_comm]
        level = agg
        q = _modularity_internal(level, list(range(level.n)), resolution)
        levels_q.append(q)
        if q - prev_q <= GAIN_EPSILON:
            break
        prev_q = q

    # renumber communities by their smallest member for stable output
    members: dict[int, list[str]] = {}
    for name in names:
        members.setdefault(node_level_comm[index[name]], []).append(name)
    ordered = sorted(members.values(), key=lambda ms: ms[0])
    communities = {name: ci for ci, group in enumerate(ordered) for name in group}

    q_final = modularity(g, communities, resolution) if g.weights else 0.0
    return Partition(
        communities=communities, modularity=q_final, level_modularity=levels_q
    )
