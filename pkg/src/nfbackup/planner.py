"""Backup deployment strategies.

A plan installs backups of function type ``f`` on servers (``installed``,
the I variables) and associates each primary instance with one backup server
(``assignment``, the J variables). Every strategy here shares the same
bookkeeping so capacity accounting is identical across them.
"""

from __future__ import annotations

import copy
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from nfbackup.netgraph import DistanceTable, NetworkGraph, as_rng
from nfbackup.workload import PrimaryInstance, ServiceChain, instances_by_type

PIGGYBACK = "piggyback"
STANDALONE = "standalone"
UNCOVERED = "uncovered"
PROVENANCE_TAGS = (PIGGYBACK, STANDALONE, UNCOVERED)


class PlanError(ValueError):
    pass


@dataclass
class DeploymentPlan:
    k_limit: int
    capacity: dict[int, int]
    installed: set[tuple[int, int]] = field(default_factory=set)
    assignment: dict[int, int] = field(default_factory=dict)
    provenance: dict[int, str] = field(default_factory=dict)
    load: Counter = field(default_factory=Counter)
    types_on: dict[int, set[int]] = field(default_factory=lambda: defaultdict(set))

    def __post_init__(self):
        if self.k_limit < 1:
            raise PlanError("k_limit must be a positive integer")

    @classmethod
    def empty(cls, g: NetworkGraph, k_limit: int) -> "DeploymentPlan":
        return cls(k_limit, dict(g.backup_capacity))

    def copy(self) -> "DeploymentPlan":
        return copy.deepcopy(self)

    def spare(self, v: int) -> int:
        return self.capacity.get(v, 0) - len(self.types_on[v])

    def can_take(self, f: int, v: int) -> bool:
        """True if a type-``f`` primary could be associated with server ``v`` now."""
        if (f, v) in self.installed:
            return self.load[(f, v)] < self.k_limit
        return self.spare(v) > 0

    def install(self, f: int, v: int) -> None:
        if (f, v) in self.installed:
            return
        if self.spare(v) <= 0:
            raise PlanError(f"server {v} has no spare backup capacity for type {f}")
        self.installed.add((f, v))
        self.types_on[v].add(f)

    def associate(self, n: PrimaryInstance, v: int, tag: str) -> None:
        if n.id in self.assignment:
            raise PlanError(f"instance {n.id} already has a backup")
        if v == n.server:
            raise PlanError(f"instance {n.id} cannot be backed up on its own server {v}")
        self.install(n.ftype, v)
        if self.load[(n.ftype, v)] >= self.k_limit:
            raise PlanError(f"backup of type {n.ftype} on server {v} is full")
        self.assignment[n.id] = v
        self.load[(n.ftype, v)] += 1
        self.provenance[n.id] = tag

    def mark_uncovered(self, n: PrimaryInstance) -> None:
        self.provenance[n.id] = UNCOVERED

    def available(self, f: int, servers: Iterable[int] | None = None) -> list[int]:
        servers = sorted(self.capacity) if servers is None else servers
        return [v for v in servers if self.can_take(f, v)]

    def uncovered(self) -> list[int]:
        return sorted(n for n, tag in self.provenance.items() if tag == UNCOVERED)

    def to_dict(self) -> dict[str, Any]:
        return {
            "K": self.k_limit,
            "I": [{"ftype": f, "server": v} for f, v in sorted(self.installed)],
            "J": [{"instance": n, "server": v} for n, v in sorted(self.assignment.items())],
            "provenance": {str(n): tag for n, tag in sorted(self.provenance.items())},
        }

    @classmethod
    def from_dict(
        cls,
        doc: Mapping[str, Any],
        g: NetworkGraph,
        instances: Sequence[PrimaryInstance],
        k_limit: int | None = None,
    ) -> "DeploymentPlan":
        plan = cls.empty(g, int(k_limit if k_limit is not None else doc["K"]))
        # rebuild without capacity checks so validate_plan can report violations
        for d in doc["I"]:
            f, v = int(d["ftype"]), int(d["server"])
            plan.installed.add((f, v))
            plan.types_on[v].add(f)
        by_id = {n.id: n for n in instances}
        for d in doc["J"]:
            n, v = by_id[int(d["instance"])], int(d["server"])
            plan.assignment[n.id] = v
            plan.load[(n.ftype, v)] += 1
        plan.provenance = {int(k): tag for k, tag in doc.get("provenance", {}).items()}
        return plan


def validate_plan(
    plan: DeploymentPlan, g: NetworkGraph, instances: Sequence[PrimaryInstance]
) -> list[str]:
    """Return every constraint violation; an empty list means the plan is valid."""
    problems = []
    by_id = {n.id: n for n in instances}
    per_server = Counter(v for _, v in plan.installed)
    for v, used in sorted(per_server.items()):
        if v not in g.backup_capacity:
            problems.append(f"backup installed on non-server node {v}")
        elif used > g.backup_capacity[v]:
            problems.append(f"server {v}: {used} backups exceed capacity {g.backup_capacity[v]}")

    load = Counter()
    for nid, v in plan.assignment.items():
        n = by_id.get(nid)
        if n is None:
            problems.append(f"unknown instance {nid} in assignment")
            continue
        if v == n.server:
            problems.append(f"instance {nid} backed up on its own server {v}")
        load[(n.ftype, v)] += 1
    for (f, v), cnt in sorted(load.items()):
        cap = plan.k_limit if (f, v) in plan.installed else 0
        if cnt > cap:
            problems.append(f"type {f} on server {v}: {cnt} associations exceed {cap}")

    for nid in by_id:
        tag = plan.provenance.get(nid)
        if tag is not None and tag not in PROVENANCE_TAGS:
            problems.append(f"instance {nid}: unknown provenance {tag!r}")
        covered = nid in plan.assignment
        if covered and tag == UNCOVERED:
            problems.append(f"instance {nid} is tagged uncovered but has a backup")
        if not covered and tag not in (None, UNCOVERED):
            problems.append(f"instance {nid} is tagged {tag} but has no backup")
    return problems


def check_plan(plan, g, instances) -> None:
    problems = validate_plan(plan, g, instances)
    if problems:
        raise PlanError("; ".join(problems))


def lambda_scores(
    f: int,
    instances_f: Sequence[PrimaryInstance],
    chains_f: Sequence[ServiceChain],
    servers: Iterable[int],
) -> dict[int, tuple[float, dict[int, float]]]:
    """Piggybackable-traffic score of each candidate server for type ``f``.

    Each instance contributes ``sum(r_c / l)`` over chains that pass its server
    and later reach the candidate, ``l`` being the hops in between. An instance
    scores zero on its own server since it can never back up there.
    """
    out = {}
    for v in servers:
        per_n = {}
        for n in instances_f:
            if n.ftype != f:
                raise ValueError(f"instance {n.id} is not of type {f}")
            score = 0.0
            if n.server != v:
                key = (n.server, v)
                for c in chains_f:
                    seg = c.segments.get(key)
                    if seg is not None:
                        score += c.rate / seg
            per_n[n.id] = score
        out[v] = (sum(per_n.values()), per_n)
    return out


def chains_by_type(chains: Sequence[ServiceChain]) -> dict[int, list[ServiceChain]]:
    out = defaultdict(list)
    for c in chains:
        for f in set(c.requested):
            out[f].append(c)
    return out


def deploy_piggyback(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    k_limit: int,
) -> tuple[DeploymentPlan, list[PrimaryInstance]]:
    """Greedy piggyback-mode deployment; returns the plan and unassociated instances."""
    plan = DeploymentPlan.empty(g, k_limit)
    by_type = instances_by_type(instances)
    chains_f = chains_by_type(chains)
    order = sorted(by_type, key=lambda f: (-len(chains_f.get(f, ())), f))
    servers = g.servers

    for f in order:
        pending = list(by_type[f])
        cf = chains_f.get(f, [])
        while pending:
            # a type gets at most one backup per server (I is binary)
            cands = [v for v in servers if plan.spare(v) > 0 and (f, v) not in plan.installed]
            if not cands:
                break
            scores = lambda_scores(f, pending, cf, cands)
            v_star = max(cands, key=lambda v: (scores[v][0], -v))
            if scores[v_star][0] <= 0:
                break
            per_n = scores[v_star][1]
            ranked = sorted(
                (n for n in pending if per_n[n.id] > 0), key=lambda n: (-per_n[n.id], n.id)
            )[:k_limit]
            for n in ranked:
                plan.associate(n, v_star, PIGGYBACK)
            chosen = {n.id for n in ranked}
            pending = [n for n in pending if n.id not in chosen]

    leftovers = [n for n in sorted(instances) if n.id not in plan.assignment]
    return plan, leftovers


def available_servers(plan: DeploymentPlan, f: int, g: NetworkGraph | None = None) -> list[int]:
    """Servers where a type-``f`` primary could still be backed up."""
    servers = g.servers if g is not None else None
    return plan.available(f, servers)


def _options(plan, n, distances):
    row = distances.dist[n.server]
    return sorted((int(row[v]), v) for v in plan.available(n.ftype) if v != n.server)


def deploy_standalone(
    plan: DeploymentPlan,
    leftovers: Sequence[PrimaryInstance],
    distances: DistanceTable,
    prioritize: bool = True,
) -> DeploymentPlan:
    """Cover leftover instances with their closest available backup server.

    With ``prioritize`` the instance whose second-best option is worst
    relative to its best goes first; instances with fewer than two options
    go before everyone else. Without it, instances go in the given order.
    """
    plan = plan.copy()
    pending = list(leftovers) if not prioritize else sorted(leftovers)
    while pending:
        if prioritize:
            best_key, pick = None, None
            for i, n in enumerate(pending):
                opts = _options(plan, n, distances)
                delta = float("inf") if len(opts) < 2 else opts[1][0] - opts[0][0]
                key = (delta, -n.id)
                if best_key is None or key > best_key:
                    best_key, pick = key, i
            n = pending.pop(pick)
        else:
            n = pending.pop(0)
        opts = _options(plan, n, distances)
        if not opts:
            plan.mark_uncovered(n)
            continue
        plan.associate(n, opts[0][1], STANDALONE)
    return plan


def deploy_two_phase(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    k_limit: int,
    distances: DistanceTable,
) -> DeploymentPlan:
    """Piggyback-mode deployment followed by cooperative stand-alone deployment."""
    plan, leftovers = deploy_piggyback(g, instances, chains, k_limit)
    return deploy_standalone(plan, leftovers, distances)


def _delivery_tag(n, v, chains):
    key = (n.server, v)
    return PIGGYBACK if any(key in c.segments for c in chains) else STANDALONE


def deploy_random(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    k_limit: int,
    rng: np.random.Generator | int | None = None,
) -> DeploymentPlan:
    """Each instance, in random order, backs up on a uniformly random available server."""
    rng = as_rng(rng)
    plan = DeploymentPlan.empty(g, k_limit)
    ordered = sorted(instances)
    for i in rng.permutation(len(ordered)):
        n = ordered[i]
        opts = [v for v in plan.available(n.ftype, g.servers) if v != n.server]
        if not opts:
            plan.mark_uncovered(n)
            continue
        v = int(opts[rng.integers(len(opts))])
        plan.associate(n, v, _delivery_tag(n, v, chains))
    return plan


def deploy_shortest_path(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    k_limit: int,
    distances: DistanceTable,
    rng: np.random.Generator | int | None = None,
) -> DeploymentPlan:
    """Each instance, in random order, takes its closest available server."""
    rng = as_rng(rng)
    plan = DeploymentPlan.empty(g, k_limit)
    ordered = sorted(instances)
    for i in rng.permutation(len(ordered)):
        n = ordered[i]
        opts = _options(plan, n, distances)
        if not opts:
            plan.mark_uncovered(n)
            continue
        v = opts[0][1]
        plan.associate(n, v, _delivery_tag(n, v, chains))
    return plan
