"""Primary instance placement, service chain generation and routing."""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from nfbackup.netgraph import DistanceTable, NetworkGraph, as_rng


@dataclass(frozen=True, order=True)
class PrimaryInstance:
    id: int
    server: int
    ftype: int


@dataclass(frozen=True)
class ChainSpec:
    """An unrouted chain request."""

    id: int
    source: int
    dest: int
    requested: tuple[int, ...]
    rate: float = 1.0


@dataclass(frozen=True, eq=False)
class ServiceChain:
    id: int
    source: int
    dest: int
    requested: tuple[int, ...]
    assigned: tuple[int, ...]
    route: tuple[int, ...]
    rate: float = 1.0
    # (u, v) -> fewest hops from some visit of u to a later visit of v
    segments: dict[tuple[int, int], int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError(f"chain {self.id}: rate must be positive")
        if len(self.requested) != len(self.assigned):
            raise ValueError(f"chain {self.id}: requested/assigned length mismatch")
        if not self.route or self.route[0] != self.source or self.route[-1] != self.dest:
            raise ValueError(f"chain {self.id}: route must run from source to dest")
        object.__setattr__(self, "requested", tuple(self.requested))
        object.__setattr__(self, "assigned", tuple(self.assigned))
        object.__setattr__(self, "route", tuple(self.route))
        object.__setattr__(self, "segments", route_segments(self.route))

    def visits(self, u: int, v: int) -> bool:
        return (u, v) in self.segments

    def __eq__(self, other):
        if not isinstance(other, ServiceChain):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash((self.id, self.route))

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "src": self.source,
            "dst": self.dest,
            "requested": list(self.requested),
            "assigned": list(self.assigned),
            "route": list(self.route),
            "rate": self.rate,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ServiceChain":
        return cls(
            id=int(d["id"]),
            source=int(d["src"]),
            dest=int(d["dst"]),
            requested=tuple(int(x) for x in d["requested"]),
            assigned=tuple(int(x) for x in d["assigned"]),
            route=tuple(int(x) for x in d["route"]),
            rate=float(d.get("rate", 1.0)),
        )


def route_segments(route: Sequence[int]) -> dict[tuple[int, int], int]:
    # For a fixed later position q the shortest segment starts at the most
    # recent earlier visit of u, so one left-to-right pass suffices.
    last: dict[int, int] = {}
    seg: dict[tuple[int, int], int] = {}
    for q, v in enumerate(route):
        for u, p in last.items():
            key = (u, v)
            d = q - p
            if d < seg.get(key, d + 1):
                seg[key] = d
        last[v] = q
    return seg


def segment_length(chain: ServiceChain, u: int, v: int) -> int | None:
    """Hops chain ``chain`` travels from ``u`` to a later visit of ``v``, or None."""
    return chain.segments.get((u, v))


def chains_through(chains: Iterable[ServiceChain], u: int, v: int) -> list[ServiceChain]:
    return [c for c in chains if (u, v) in c.segments]


def instances_by_type(instances: Iterable[PrimaryInstance]) -> dict[int, list[PrimaryInstance]]:
    out: dict[int, list[PrimaryInstance]] = defaultdict(list)
    for n in sorted(instances):
        out[n.ftype].append(n)
    return dict(out)


def place_primary_instances(
    g: NetworkGraph, num_types: int, rng: np.random.Generator | int | None = None
) -> list[PrimaryInstance]:
    """Fill every server's primary slots with a near-equal mix of function types.

    Types are dealt in shuffled rounds of all ``num_types`` types, and the
    resulting sequence is matched against a random permutation of capacity
    slots. Ids are assigned in (server, type) order.
    """
    if num_types < 1:
        raise ValueError("num_types must be >= 1")
    rng = as_rng(rng)
    slots = [u for u in g.servers for _ in range(g.primary_capacity[u])]
    if not slots:
        raise ValueError("graph has zero primary capacity")
    if len(slots) < num_types:
        raise ValueError(
            f"total primary capacity {len(slots)} is below the number of types {num_types}"
        )
    rounds = -(-len(slots) // num_types)
    types = np.concatenate([rng.permutation(num_types) for _ in range(rounds)])[: len(slots)]
    servers = rng.permutation(slots)
    pairs = sorted(zip(servers.tolist(), types.tolist()))
    return [PrimaryInstance(i, u, f) for i, (u, f) in enumerate(pairs)]


def assign_and_route(
    spec: ChainSpec, instances: Sequence[PrimaryInstance], distances: DistanceTable
) -> ServiceChain:
    """Closest-instance assignment, then concatenated shortest paths."""
    by_type = instances_by_type(instances)
    dist = distances.dist
    assigned: list[int] = []
    stops: list[int] = []
    here = spec.source
    for f in spec.requested:
        cands = by_type.get(f)
        if not cands:
            raise ValueError(f"chain {spec.id}: no primary instance of type {f}")
        best = min(cands, key=lambda n: (dist[here, n.server], n.id))
        assigned.append(best.id)
        stops.append(best.server)
        here = best.server

    route = [spec.source]
    for target in stops + [spec.dest]:
        route.extend(distances.path(route[-1], target)[1:])
    return ServiceChain(
        spec.id, spec.source, spec.dest, tuple(spec.requested), tuple(assigned), tuple(route), spec.rate
    )


def generate_chains(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    count: int,
    distances: DistanceTable,
    len_range: tuple[int, int] = (1, 20),
    rng: np.random.Generator | int | None = None,
    rate: float = 1.0,
) -> list[ServiceChain]:
    """Random chains between distinct endpoints requesting random deployed types.

    Endpoints are hosts; a graph without hosts (e.g. a random server graph)
    uses its servers as endpoints instead.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    lo, hi = len_range
    if not 1 <= lo <= hi:
        raise ValueError(f"invalid chain length range {len_range}")
    rng = as_rng(rng)
    endpoints = g.hosts or g.servers
    if len(endpoints) < 2:
        raise ValueError("graph needs at least two chain endpoints")
    types = sorted({n.ftype for n in instances})
    if count and not types:
        raise ValueError("no primary instances deployed")

    chains = []
    for cid in range(count):
        src, dst = rng.choice(endpoints, size=2, replace=False).tolist()
        length = int(rng.integers(lo, hi + 1))
        requested = tuple(rng.choice(types, size=length).tolist())
        chains.append(
            assign_and_route(ChainSpec(cid, src, dst, requested, rate), instances, distances)
        )
    return chains


def workload_to_dict(
    instances: Sequence[PrimaryInstance], chains: Sequence[ServiceChain]
) -> dict[str, Any]:
    return {
        "instances": [{"id": n.id, "server": n.server, "ftype": n.ftype} for n in instances],
        "chains": [c.to_dict() for c in chains],
    }


def workload_from_dict(doc: Mapping[str, Any]) -> tuple[list[PrimaryInstance], list[ServiceChain]]:
    instances = [
        PrimaryInstance(int(d["id"]), int(d["server"]), int(d["ftype"]))
        for d in doc.get("instances", [])
    ]
    chains = [ServiceChain.from_dict(d) for d in doc.get("chains", [])]
    return instances, chains
