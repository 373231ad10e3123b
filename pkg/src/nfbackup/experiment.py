"""Seeded scenarios, parameter sweeps and result tables."""

from __future__ import annotations

import csv
import dataclasses
import math
import time
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Iterable, Sequence, TextIO

import numpy as np

from nfbackup.config import ConfigError, ExperimentConfig, derive_seed
from nfbackup.costmodel import CostParams, total_expected_cost
from nfbackup.exact import ExactGuard, solve_exact
from nfbackup.netgraph import (
    DistanceTable,
    NetworkGraph,
    all_pairs_shortest,
    build_fat_tree,
    build_random_graph,
)
from nfbackup.planner import (
    DeploymentPlan,
    check_plan,
    deploy_random,
    deploy_shortest_path,
    deploy_two_phase,
)
from nfbackup.simcore import SimParams, generate_arrivals, run_simulation
from nfbackup.workload import PrimaryInstance, ServiceChain, generate_chains, place_primary_instances

SWEEP_AXES = (
    "num_chains",
    "backup_capacity",
    "primary_capacity",
    "k_limit",
    "connect_prob",
    "rate",
    "num_types",
    "pods",
    "num_servers",
    "epoch_length",
)

METRICS = (
    "piggyback_ratio",
    "piggyback_hops",
    "standalone_hops",
    "total_hops",
    "total_bytes",
    "byte_hops",
    "expected_cost",
    "uncovered",
    "sim_success_prob",
    "sim_mean_hops",
    "sim_mean_piggyback_hops",
    "runtime",
)


@dataclass
class Workload:
    graph: NetworkGraph
    distances: DistanceTable
    instances: list[PrimaryInstance]
    chains: list[ServiceChain]


@dataclass
class ResultRow:
    scenario: str
    strategy: str
    seed: int
    piggyback_ratio: float
    piggyback_hops: int
    standalone_hops: int
    total_hops: int
    total_bytes: float
    byte_hops: float
    expected_cost: float
    uncovered: int
    sim_success_prob: float = math.nan
    sim_mean_hops: float = math.nan
    sim_mean_piggyback_hops: float = math.nan
    runtime: float = 0.0

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def key(self) -> tuple:
        return (self.scenario, self.strategy, self.seed)


CSV_COLUMNS = tuple(f.name for f in dataclasses.fields(ResultRow))


def build_graph(config: ExperimentConfig, seed: int) -> NetworkGraph:
    if config.topology == "fat_tree":
        return build_fat_tree(config.pods, config.primary_capacity, config.backup_capacity)
    return build_random_graph(
        config.num_servers,
        config.connect_prob,
        derive_seed(seed, "topo"),
        config.primary_capacity,
        config.backup_capacity,
    )


def build_workload(config: ExperimentConfig, seed: int) -> Workload:
    g = build_graph(config, seed)
    dist = all_pairs_shortest(g)
    instances = place_primary_instances(g, config.num_types, derive_seed(seed, "place"))
    chains = generate_chains(
        g,
        instances,
        config.num_chains,
        dist,
        (config.chain_len_min, config.chain_len_max),
        derive_seed(seed, "chains"),
        config.rate,
    )
    return Workload(g, dist, instances, chains)


def make_plan(strategy: str, wl: Workload, config: ExperimentConfig, seed: int) -> DeploymentPlan:
    sub = derive_seed(seed, f"strategy:{strategy}")
    if strategy == "piggybackup":
        return deploy_two_phase(wl.graph, wl.instances, wl.chains, config.k_limit, wl.distances)
    if strategy == "random":
        return deploy_random(wl.graph, wl.instances, wl.chains, config.k_limit, sub)
    if strategy == "shortest_path":
        return deploy_shortest_path(wl.graph, wl.instances, wl.chains, config.k_limit, wl.distances, sub)
    if strategy == "exact":
        plan, _ = solve_exact(
            wl.graph, wl.instances, wl.chains, config.k_limit, wl.distances, cost_params(config)
        )
        return plan
    raise ConfigError([f"strategies: unknown strategy {strategy!r}"])


def cost_params(config: ExperimentConfig) -> CostParams:
    return CostParams(config.piggyback_bytes, config.standalone_bytes)


def sim_params(config: ExperimentConfig) -> SimParams:
    return SimParams(config.epoch_length, config.num_epochs, config.selection_mode, cost_params(config))


def run_scenario(config: ExperimentConfig, seed: int, scenario: str = "default") -> list[ResultRow]:
    """Every configured strategy on one seeded workload."""
    config.validate()
    wl = build_workload(config, seed)
    if "exact" in config.strategies:
        ExactGuard().check(wl.graph, wl.instances)
    params = cost_params(config)
    arrivals = None
    if config.simulate:
        sp = sim_params(config)
        arrivals = generate_arrivals(wl.chains, sp.horizon, derive_seed(seed, "sim"))

    rows = []
    for strategy in config.strategies:
        t0 = time.perf_counter()
        plan = make_plan(strategy, wl, config, seed)
        check_plan(plan, wl.graph, wl.instances)
        rep = total_expected_cost(plan, wl.instances, wl.chains, wl.distances, params)
        row = ResultRow(
            scenario=scenario,
            strategy=strategy,
            seed=seed,
            piggyback_ratio=rep.piggyback_ratio,
            piggyback_hops=rep.piggyback_hops,
            standalone_hops=rep.standalone_hops,
            total_hops=rep.total_hops,
            total_bytes=rep.total_bytes,
            byte_hops=rep.byte_hops,
            expected_cost=rep.total_expected,
            uncovered=rep.num_uncovered,
        )
        if arrivals is not None:
            sim = run_simulation(plan, wl.instances, wl.chains, arrivals, wl.distances, sim_params(config))
            row.sim_success_prob = sim.success_probability
            row.sim_mean_hops = sim.mean_hops
            row.sim_mean_piggyback_hops = sim.mean_piggyback_hops
        row.runtime = time.perf_counter() - t0
        rows.append(row)
    return rows


def _cell(args):
    config, seed, scenario = args
    return run_scenario(config, seed, scenario)


def run_cells(cells: Sequence[tuple[ExperimentConfig, int, str]], workers: int = 1) -> list[ResultRow]:
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_cell, cells))
    else:
        chunks = [_cell(c) for c in cells]
    return [row for chunk in chunks for row in chunk]


@dataclass
class SweepResult:
    axis: str
    rows: list[ResultRow]
    summary: list[dict[str, Any]]


def run_sweep(
    base: ExperimentConfig, axis: str, values: Iterable[Any], workers: int = 1
) -> SweepResult:
    """Run ``base`` for each value of one config field, over all configured seeds."""
    if axis not in SWEEP_AXES:
        raise ConfigError([f"axis: unknown sweep axis {axis!r}; expected one of {SWEEP_AXES}"])
    cells = []
    order = {}
    for i, value in enumerate(values):
        cfg = base.replace(**{axis: value}).validate()
        scenario = f"{axis}={value}"
        order[scenario] = i
        cells.extend((cfg, seed, scenario) for seed in cfg.seeds)
    rows = run_cells(cells, workers)
    strat_rank = {s: i for i, s in enumerate(base.strategies)}
    rows.sort(key=lambda r: (order[r.scenario], strat_rank.get(r.strategy, 99), r.seed))
    return SweepResult(axis, rows, summarize(rows))


def summarize(rows: Sequence[ResultRow]) -> list[dict[str, Any]]:
    """Mean and sample standard deviation per (scenario, strategy)."""
    groups: dict[tuple[str, str], list[ResultRow]] = defaultdict(list)
    for r in rows:
        groups[(r.scenario, r.strategy)].append(r)
    out = []
    for (scenario, strategy), rs in groups.items():
        entry: dict[str, Any] = {"scenario": scenario, "strategy": strategy, "n": len(rs)}
        for m in METRICS:
            vals = np.array([getattr(r, m) for r in rs], dtype=float)
            entry[f"{m}_mean"] = float(vals.mean())
            entry[f"{m}_std"] = float(vals.std(ddof=1)) if len(vals) > 1 else 0.0
        out.append(entry)
    return out


def mean_of(rows: Sequence[ResultRow], metric: str, **match) -> float:
    vals = [getattr(r, metric) for r in rows if all(getattr(r, k) == v for k, v in match.items())]
    return float(np.mean(vals)) if vals else math.nan


def write_rows_csv(rows: Sequence[ResultRow], fh: TextIO, timing: bool = True) -> None:
    cols = [c for c in CSV_COLUMNS if timing or c != "runtime"]
    w = csv.DictWriter(fh, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in sorted(rows, key=ResultRow.key):
        w.writerow(r.as_dict())


def read_rows_csv(fh: TextIO) -> list[dict[str, Any]]:
    out = []
    for rec in csv.DictReader(fh):
        row: dict[str, Any] = {}
        for k, v in rec.items():
            if k in ("scenario", "strategy"):
                row[k] = v
            else:
                try:
                    row[k] = float(v)
                except (TypeError, ValueError):
                    row[k] = v
        out.append(row)
    return out


def compare_tables(
    a: Sequence[dict[str, Any]], b: Sequence[dict[str, Any]], metrics: Sequence[str] = ("byte_hops", "total_bytes", "total_hops", "expected_cost")
) -> list[dict[str, Any]]:
    """Percentage reduction of table ``a`` relative to ``b`` per scenario and metric.

    Rows are matched on scenario only; each side is averaged over its rows.
    """

    def means(rows):
        acc = defaultdict(lambda: defaultdict(list))
        for r in rows:
            for m in metrics:
                if m in r:
                    acc[r.get("scenario", "")][m].append(float(r[m]))
        return {s: {m: float(np.mean(v)) for m, v in ms.items()} for s, ms in acc.items()}

    ma, mb = means(a), means(b)
    out = []
    for scenario in sorted(set(ma) & set(mb)):
        for m in metrics:
            if m in ma[scenario] and m in mb[scenario]:
                base = mb[scenario][m]
                red = 100.0 * (base - ma[scenario][m]) / base if base else math.nan
                out.append(
                    {"scenario": scenario, "metric": m, "a_mean": ma[scenario][m],
                     "b_mean": base, "reduction_pct": red}
                )
    return out
