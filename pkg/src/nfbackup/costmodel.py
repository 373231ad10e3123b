"""Expected per-update cost of a plan and the per-update-event delivery metrics.

All costs are byte-hops: message bytes times hops traversed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Sequence

from nfbackup.netgraph import DistanceTable
from nfbackup.planner import DeploymentPlan
from nfbackup.workload import PrimaryInstance, ServiceChain


@dataclass(frozen=True)
class CostParams:
    piggyback_bytes: float = 20.0
    standalone_bytes: float = 60.0

    def __post_init__(self):
        if not 0 < self.piggyback_bytes <= self.standalone_bytes:
            raise ValueError("need 0 < piggyback_bytes <= standalone_bytes")

    def scaled(self, factor: float) -> "CostParams":
        return CostParams(self.piggyback_bytes * factor, self.standalone_bytes * factor)


def pair_terms(
    u: int, v: int, chains: Sequence[ServiceChain], distances: DistanceTable
) -> tuple[int, int, int, int]:
    """Integer ingredients of the cost of backing up a primary on ``u`` at ``v``.

    Returns (sum of piggyback segment hops, number of piggybacking chains,
    number of other chains, shortest-path hops).
    """
    key = (u, v)
    segs = [c.segments[key] for c in chains if key in c.segments]
    return sum(segs), len(segs), len(chains) - len(segs), int(distances.dist[u, v])


def pair_cost(
    u: int, v: int, chains: Sequence[ServiceChain], distances: DistanceTable, params: CostParams
) -> tuple[float, float]:
    """(piggyback, stand-alone) expected byte-hops for backing up ``u`` at ``v``."""
    seg_sum, _, others, lmin = pair_terms(u, v, chains, distances)
    if not chains:
        return 0.0, float(lmin * params.standalone_bytes)
    m = len(chains)
    return seg_sum * params.piggyback_bytes / m, others * lmin * params.standalone_bytes / m


def expected_piggyback_cost(
    n: PrimaryInstance, plan: DeploymentPlan, chains: Sequence[ServiceChain], params: CostParams
) -> float:
    v = plan.assignment.get(n.id)
    if v is None or not chains:
        return 0.0
    key = (n.server, v)
    seg_sum = sum(c.segments[key] for c in chains if key in c.segments)
    return seg_sum * params.piggyback_bytes / len(chains)


def expected_standalone_cost(
    n: PrimaryInstance,
    plan: DeploymentPlan,
    chains: Sequence[ServiceChain],
    distances: DistanceTable,
    params: CostParams,
) -> float:
    v = plan.assignment.get(n.id)
    if v is None:
        return 0.0
    return pair_cost(n.server, v, chains, distances, params)[1]


@dataclass
class CostReport:
    per_instance: dict[int, tuple[float, float]] = field(default_factory=dict)
    total_expected: float = 0.0
    num_covered: int = 0
    num_piggyback: int = 0
    num_standalone: int = 0
    num_uncovered: int = 0
    piggyback_hops: int = 0
    standalone_hops: int = 0
    total_bytes: float = 0.0
    byte_hops: float = 0.0

    @property
    def piggyback_ratio(self) -> float:
        return self.num_piggyback / self.num_covered if self.num_covered else 0.0

    @property
    def total_hops(self) -> int:
        return self.piggyback_hops + self.standalone_hops

    def summary(self) -> dict:
        d = asdict(self)
        d.pop("per_instance")
        d["piggyback_ratio"] = self.piggyback_ratio
        d["total_hops"] = self.total_hops
        return d

    def to_dict(self) -> dict:
        d = self.summary()
        d["per_instance"] = [
            {"instance": n, "w_pg": pg, "w_alone": al, "w": pg + al}
            for n, (pg, al) in sorted(self.per_instance.items())
        ]
        return d


def total_expected_cost(
    plan: DeploymentPlan,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    distances: DistanceTable,
    params: CostParams = CostParams(),
) -> CostReport:
    """Objective value plus the delivery metrics of one update event.

    In one update event a piggybackable instance sends ``piggyback_bytes``
    over its shortest piggyback segment; every other covered instance sends
    ``standalone_bytes`` over the shortest path to its backup.
    """
    rep = CostReport()
    for n in sorted(instances):
        v = plan.assignment.get(n.id)
        if v is None:
            rep.num_uncovered += 1
            rep.per_instance[n.id] = (0.0, 0.0)
            continue
        pg, alone = pair_cost(n.server, v, chains, distances, params)
        rep.per_instance[n.id] = (pg, alone)
        rep.total_expected += pg + alone
        rep.num_covered += 1

        key = (n.server, v)
        segs = [c.segments[key] for c in chains if key in c.segments]
        if segs:
            hops = min(segs)
            rep.num_piggyback += 1
            rep.piggyback_hops += hops
            rep.total_bytes += params.piggyback_bytes
            rep.byte_hops += hops * params.piggyback_bytes
        else:
            hops = int(distances.dist[n.server, v])
            rep.num_standalone += 1
            rep.standalone_hops += hops
            rep.total_bytes += params.standalone_bytes
            rep.byte_hops += hops * params.standalone_bytes
    return rep
