"""Network topologies and hop-count shortest paths.

Nodes are dense integer ids ``0..N-1``. Each node is either a ``host`` (traffic
endpoint, no capacity) or a ``server`` (a switch-attached machine that can run
primary and backup function instances).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, shortest_path

HOST = "host"
SERVER = "server"
NODE_KINDS = (HOST, SERVER)


class DisconnectedGraphError(ValueError):
    pass


def as_rng(rng: np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class NetworkGraph:
    """Undirected graph with per-server primary/backup capacities."""

    kinds: tuple[str, ...]
    edges: frozenset[tuple[int, int]]
    primary_capacity: Mapping[int, int]
    backup_capacity: Mapping[int, int]
    _adj: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.kinds)
        for kind in self.kinds:
            if kind not in NODE_KINDS:
                raise ValueError(f"unknown node kind {kind!r}")
        norm = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop on node {u}")
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u}, {v}) references a missing node")
            norm.add((min(u, v), max(u, v)))
        object.__setattr__(self, "edges", frozenset(norm))

        prim = {int(k): int(c) for k, c in self.primary_capacity.items()}
        back = {int(k): int(c) for k, c in self.backup_capacity.items()}
        for u in range(n):
            if self.kinds[u] == SERVER:
                prim.setdefault(u, 0)
                if u not in back:
                    raise ValueError(f"server {u} has no backup capacity")
            elif prim.get(u, 0) or back.get(u, 0):
                raise ValueError(f"host {u} cannot carry capacity")
        for caps in (prim, back):
            for u, c in caps.items():
                if c < 0:
                    raise ValueError(f"negative capacity on node {u}")
        object.__setattr__(
            self, "primary_capacity", {u: prim[u] for u in self.servers}
        )
        object.__setattr__(self, "backup_capacity", {u: back[u] for u in self.servers})

        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        object.__setattr__(self, "_adj", tuple(tuple(sorted(a)) for a in adj))

    @property
    def num_nodes(self) -> int:
        return len(self.kinds)

    @property
    def nodes(self) -> list[int]:
        return list(range(len(self.kinds)))

    @property
    def servers(self) -> list[int]:
        return [u for u, k in enumerate(self.kinds) if k == SERVER]

    @property
    def hosts(self) -> list[int]:
        return [u for u, k in enumerate(self.kinds) if k == HOST]

    def neighbors(self, u: int) -> tuple[int, ...]:
        return self._adj[u]

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self.edges

    def sparse_adjacency(self) -> csr_matrix:
        n = self.num_nodes
        if not self.edges:
            return csr_matrix((n, n), dtype=np.int8)
        rows, cols = zip(*self.edges)
        data = np.ones(2 * len(rows), dtype=np.int8)
        return csr_matrix((data, (rows + cols, cols + rows)), shape=(n, n))

    def is_connected(self) -> bool:
        if self.num_nodes <= 1:
            return True
        ncomp, _ = connected_components(self.sparse_adjacency(), directed=False)
        return ncomp == 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "nodes": [
                {
                    "id": u,
                    "kind": kind,
                    "primary_cap": self.primary_capacity.get(u, 0),
                    "backup_cap": self.backup_capacity.get(u, 0),
                }
                for u, kind in enumerate(self.kinds)
            ],
            "edges": [list(e) for e in sorted(self.edges)],
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "NetworkGraph":
        nodes = sorted(doc["nodes"], key=lambda d: d["id"])
        if [d["id"] for d in nodes] != list(range(len(nodes))):
            raise ValueError("node ids must be dense 0..N-1")
        kinds = tuple(d["kind"] for d in nodes)
        prim = {d["id"]: d.get("primary_cap", 0) for d in nodes if d["kind"] == SERVER}
        back = {d["id"]: d.get("backup_cap", 0) for d in nodes if d["kind"] == SERVER}
        edges = frozenset((int(u), int(v)) for u, v in doc["edges"])
        return cls(kinds, edges, prim, back)

    def with_capacities(
        self, primary: int | None = None, backup: int | None = None
    ) -> "NetworkGraph":
        """Copy with uniform per-server capacities replaced."""
        prim = {u: primary for u in self.servers} if primary is not None else self.primary_capacity
        back = {u: backup for u in self.servers} if backup is not None else self.backup_capacity
        return NetworkGraph(self.kinds, self.edges, prim, back)


def build_fat_tree(
    pods: int, primary_capacity: int = 8, backup_capacity: int = 3
) -> NetworkGraph:
    """Standard k-ary fat-tree where every switch hosts a server.

    Node ids are laid out as core switches, then aggregation, then edge
    switches (both pod-major), then hosts.
    """
    if not isinstance(pods, (int, np.integer)) or pods < 2 or pods % 2:
        raise ValueError(f"pods must be an even integer >= 2, got {pods!r}")
    half = pods // 2
    n_core = half * half
    n_agg = n_edge = pods * half
    n_host = pods * half * half

    core0, agg0, edge0, host0 = 0, n_core, n_core + n_agg, n_core + n_agg + n_edge
    edges = set()
    for p in range(pods):
        for i in range(half):
            edge_sw = edge0 + p * half + i
            for h in range(half):
                edges.add((edge_sw, host0 + (p * half + i) * half + h))
            for j in range(half):
                edges.add((agg0 + p * half + j, edge_sw))
        for j in range(half):
            agg_sw = agg0 + p * half + j
            for c in range(half):
                edges.add((core0 + j * half + c, agg_sw))

    kinds = (SERVER,) * (n_core + n_agg + n_edge) + (HOST,) * n_host
    servers = range(host0)
    return NetworkGraph(
        kinds,
        frozenset(edges),
        {u: primary_capacity for u in servers},
        {u: backup_capacity for u in servers},
    )


def build_random_graph(
    num_servers: int,
    connect_prob: float,
    rng: np.random.Generator | int | None = None,
    primary_capacity: int = 8,
    backup_capacity: int = 3,
) -> NetworkGraph:
    """Erdos-Renyi graph over servers, bridged into one component if needed."""
    if num_servers < 2:
        raise ValueError("num_servers must be >= 2")
    if not 0 < connect_prob <= 1:
        raise ValueError("connect_prob must be in (0, 1]")
    rng = as_rng(rng)
    iu, ju = np.triu_indices(num_servers, k=1)
    keep = rng.random(iu.size) < connect_prob
    edges = set(zip(iu[keep].tolist(), ju[keep].tolist()))

    g = _server_graph(num_servers, edges, primary_capacity, backup_capacity)
    ncomp, labels = connected_components(g.sparse_adjacency(), directed=False)
    if ncomp > 1:
        comps = sorted(
            (np.flatnonzero(labels == c).tolist() for c in range(ncomp)),
            key=lambda comp: comp[0],
        )
        merged = list(comps[0])
        for comp in comps[1:]:
            u = int(rng.choice(comp))
            v = int(rng.choice(merged))
            edges.add((min(u, v), max(u, v)))
            merged.extend(comp)
        g = _server_graph(num_servers, edges, primary_capacity, backup_capacity)
    return g


def _server_graph(n, edges, primary_capacity, backup_capacity):
    return NetworkGraph(
        (SERVER,) * n,
        frozenset(edges),
        {u: primary_capacity for u in range(n)},
        {u: backup_capacity for u in range(n)},
    )


@dataclass(frozen=True, eq=False)
class DistanceTable:
    """All-pairs hop counts plus a deterministic next-hop matrix."""

    dist: np.ndarray
    next_hop: np.ndarray

    def __call__(self, u: int, v: int) -> int:
        return int(self.dist[u, v])

    def path(self, u: int, v: int) -> list[int]:
        out = [u]
        while u != v:
            u = int(self.next_hop[u, v])
            out.append(u)
        return out


def all_pairs_shortest(g: NetworkGraph) -> DistanceTable:
    """Unweighted BFS distances; paths step to the lowest-id neighbour on a shortest path."""
    n = g.num_nodes
    raw = shortest_path(g.sparse_adjacency(), directed=False, unweighted=True)
    if not np.isfinite(raw).all():
        u, v = map(int, np.argwhere(~np.isfinite(raw))[0])
        raise DisconnectedGraphError(f"graph is disconnected: no path between {u} and {v}")
    dist = raw.astype(np.int64)

    next_hop = np.full((n, n), -1, dtype=np.int64)
    for u in range(n):
        row = next_hop[u]
        row[u] = u
        for w in g.neighbors(u):  # ascending ids
            row[(row == -1) & (dist[w] == dist[u] - 1)] = w
    dist.setflags(write=False)
    next_hop.setflags(write=False)
    return DistanceTable(dist, next_hop)


def graph_from_edges(
    n: int,
    edges: Iterable[tuple[int, int]],
    backup_capacity: Mapping[int, int] | int = 0,
    primary_capacity: Mapping[int, int] | int = 0,
) -> NetworkGraph:
    """All-server graph from an explicit edge list; handy for hand-built cases."""
    back = backup_capacity if isinstance(backup_capacity, Mapping) else {u: backup_capacity for u in range(n)}
    prim = primary_capacity if isinstance(primary_capacity, Mapping) else {u: primary_capacity for u in range(n)}
    back = {u: back.get(u, 0) for u in range(n)}
    return NetworkGraph((SERVER,) * n, frozenset(edges), prim, back)
