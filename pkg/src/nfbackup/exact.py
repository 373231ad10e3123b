"""Exact minimum-cost plans for tiny instances.

Because the objective is a sum of independent per-(instance, server) terms and
an installed-but-unused backup only consumes capacity, an optimal plan always
installs exactly the backups its associations use. The search therefore runs
over associations only; installations are implied.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from nfbackup.costmodel import CostParams, pair_terms
from nfbackup.netgraph import DistanceTable, NetworkGraph
from nfbackup.planner import PIGGYBACK, STANDALONE, DeploymentPlan
from nfbackup.workload import PrimaryInstance, ServiceChain


class InfeasibleError(Exception):
    """No plan covers every instance under the given capacities."""


class GuardError(ValueError):
    """Input too large for exhaustive search."""


@dataclass(frozen=True)
class ExactGuard:
    max_instances: int = 8
    max_servers: int = 6
    max_types: int = 3

    def check(self, g: NetworkGraph, instances: Sequence[PrimaryInstance]) -> None:
        sizes = (
            ("instances", len(instances), self.max_instances),
            ("servers", len(g.servers), self.max_servers),
            ("function types", len({n.ftype for n in instances}), self.max_types),
        )
        over = [f"{name}={have} > {cap}" for name, have, cap in sizes if have > cap]
        if over:
            raise GuardError("exact solver size guard exceeded: " + ", ".join(over))


def cost_table(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    distances: DistanceTable,
    params: CostParams,
) -> dict[int, dict[int, Fraction]]:
    """Exact rational cost of every admissible (instance, server) pair."""
    pg, alone = Fraction(params.piggyback_bytes), Fraction(params.standalone_bytes)
    m = len(chains)
    table = {}
    for n in instances:
        row = {}
        for v in g.servers:
            if v == n.server:
                continue
            seg_sum, _, others, lmin = pair_terms(n.server, v, chains, distances)
            if m == 0:
                row[v] = lmin * alone
            else:
                row[v] = (seg_sum * pg + others * lmin * alone) / m
        table[n.id] = row
    return table


def _fits(state, n, v, capacity, k_limit):
    types_on, load = state
    key = (n.ftype, v)
    if key in load:
        return load[key] < k_limit
    return len(types_on.get(v, ())) < capacity[v]


def _push(state, n, v):
    types_on, load = state
    key = (n.ftype, v)
    load[key] = load.get(key, 0) + 1
    types_on.setdefault(v, set()).add(n.ftype)


def _pop(state, n, v):
    types_on, load = state
    key = (n.ftype, v)
    load[key] -= 1
    if not load[key]:
        del load[key]
        types_on[v].discard(n.ftype)


def _build_plan(g, instances, chains, k_limit, choice):
    plan = DeploymentPlan.empty(g, k_limit)
    for n in sorted(instances):
        v = choice[n.id]
        key = (n.server, v)
        tag = PIGGYBACK if any(key in c.segments for c in chains) else STANDALONE
        plan.associate(n, v, tag)
    return plan


def solve_exact(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    k_limit: int,
    distances: DistanceTable,
    params: CostParams = CostParams(),
    guard: ExactGuard = ExactGuard(),
) -> tuple[DeploymentPlan, Fraction]:
    """Depth-first branch and bound over backup associations.

    The bound adds, for every undecided instance, its cheapest server cost
    ignoring capacity. Returns the plan and its exact objective value.
    """
    guard.check(g, instances)
    table = cost_table(g, instances, chains, distances, params)
    order = sorted(instances, key=lambda n: (len(table[n.id]), n.id))
    options = [sorted(table[n.id].items(), key=lambda kv: (kv[1], kv[0])) for n in order]
    floor = [opts[0][1] if opts else None for opts in options]
    if any(f is None for f in floor):
        raise InfeasibleError("an instance has no server other than its own")
    rest = [Fraction(0)] * (len(order) + 1)
    for i in range(len(order) - 1, -1, -1):
        rest[i] = rest[i + 1] + floor[i]

    capacity = g.backup_capacity
    state: tuple[dict, dict] = ({}, {})
    best: list = [None, None]
    chosen: list[int] = [0] * len(order)

    def dfs(i: int, acc: Fraction) -> None:
        if best[0] is not None and acc + rest[i] >= best[0]:
            return
        if i == len(order):
            best[0], best[1] = acc, list(chosen)
            return
        n = order[i]
        for v, cost in options[i]:
            if not _fits(state, n, v, capacity, k_limit):
                continue
            _push(state, n, v)
            chosen[i] = v
            dfs(i + 1, acc + cost)
            _pop(state, n, v)

    dfs(0, Fraction(0))
    if best[0] is None:
        raise InfeasibleError("no plan backs up every instance within capacity")
    choice = {n.id: v for n, v in zip(order, best[1])}
    return _build_plan(g, instances, chains, k_limit, choice), best[0]


def enumerate_optimum(
    g: NetworkGraph,
    instances: Sequence[PrimaryInstance],
    chains: Sequence[ServiceChain],
    k_limit: int,
    distances: DistanceTable,
    params: CostParams = CostParams(),
    guard: ExactGuard = ExactGuard(),
) -> tuple[DeploymentPlan, Fraction]:
    """Plain enumeration of every association; reference for ``solve_exact``."""
    guard.check(g, instances)
    table = cost_table(g, instances, chains, distances, params)
    ordered = sorted(instances)
    best_cost, best_choice = None, None
    for combo in itertools.product(*(sorted(table[n.id]) for n in ordered)):
        state: tuple[dict, dict] = ({}, {})
        ok = True
        for n, v in zip(ordered, combo):
            if not _fits(state, n, v, g.backup_capacity, k_limit):
                ok = False
                break
            _push(state, n, v)
        if not ok:
            continue
        cost = sum((table[n.id][v] for n, v in zip(ordered, combo)), Fraction(0))
        if best_cost is None or cost < best_cost:
            best_cost, best_choice = cost, combo
    if best_cost is None:
        raise InfeasibleError("no plan backs up every instance within capacity")
    choice = {n.id: v for n, v in zip(ordered, best_choice)}
    return _build_plan(g, instances, chains, k_limit, choice), best_cost
