"""Plan and evaluate piggybacked backups for network function state.

Exit codes: 0 success, 1 validation error, 2 infeasible input or size-guard violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

from nfbackup.config import ConfigError, ExperimentConfig, coerce_field, load_config
from nfbackup.costmodel import total_expected_cost
from nfbackup.exact import GuardError, InfeasibleError
from nfbackup.experiment import (
    SWEEP_AXES,
    Workload,
    build_workload,
    compare_tables,
    cost_params,
    make_plan,
    read_rows_csv,
    run_sweep,
    sim_params,
    write_rows_csv,
)
from nfbackup.netgraph import NetworkGraph, all_pairs_shortest
from nfbackup.planner import DeploymentPlan, PlanError, check_plan
from nfbackup.simcore import generate_arrivals, run_simulation
from nfbackup.workload import workload_from_dict, workload_to_dict

log = logging.getLogger("nfbackup")

EXIT_OK, EXIT_INVALID, EXIT_INFEASIBLE = 0, 1, 2


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            yield fh


def _dump_json(obj, path):
    with _output(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def resolve_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    problems = []
    for f in dataclasses.fields(ExperimentConfig):
        raw = getattr(args, f"cfg_{f.name}", None)
        if raw is None:
            continue
        try:
            overrides[f.name] = coerce_field(f.name, raw)
        except (TypeError, ValueError) as exc:
            problems.append(f"{f.name}: {exc}")
    if getattr(args, "strategy", None):
        overrides["strategies"] = (args.strategy,)
    if getattr(args, "seeds", None) is not None:
        overrides["seeds"] = tuple(range(args.seed, args.seed + args.seeds))
    if problems:
        raise ConfigError(problems)
    return cfg.replace(**overrides).validate()


def _workload(args, cfg) -> Workload:
    if args.graph_file and args.workload_file:
        g = NetworkGraph.from_dict(_load_json(args.graph_file))
        instances, chains = workload_from_dict(_load_json(args.workload_file))
        return Workload(g, all_pairs_shortest(g), instances, chains)
    if args.graph_file or args.workload_file:
        raise ConfigError(["--graph-file and --workload-file must be given together"])
    return build_workload(cfg, args.seed)


def cmd_generate(args) -> int:
    cfg = resolve_config(args)
    wl = build_workload(cfg, args.seed)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(wl.graph.to_dict(), out / "topology.json")
    _dump_json(workload_to_dict(wl.instances, wl.chains), out / "workload.json")
    log.info("wrote %s and %s", out / "topology.json", out / "workload.json")
    return EXIT_OK


def cmd_deploy(args) -> int:
    cfg = resolve_config(args)
    wl = _workload(args, cfg)
    plan = make_plan(cfg.strategies[0], wl, cfg, args.seed)
    check_plan(plan, wl.graph, wl.instances)
    _dump_json(plan.to_dict(), args.out)
    return EXIT_OK


def _plan(args, cfg, wl) -> DeploymentPlan:
    plan = DeploymentPlan.from_dict(_load_json(args.plan), wl.graph, wl.instances)
    check_plan(plan, wl.graph, wl.instances)
    return plan


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    wl = _workload(args, cfg)
    plan = _plan(args, cfg, wl)
    rep = total_expected_cost(plan, wl.instances, wl.chains, wl.distances, cost_params(cfg))
    if args.format == "csv":
        summary = rep.summary()
        with _output(args.out) as fh:
            fh.write(",".join(summary) + "\n")
            fh.write(",".join(str(v) for v in summary.values()) + "\n")
    else:
        _dump_json(rep.to_dict(), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = resolve_config(args)
    wl = _workload(args, cfg)
    plan = _plan(args, cfg, wl)
    sp = sim_params(cfg)
    arrivals = generate_arrivals(wl.chains, sp.horizon, args.seed)
    rep = run_simulation(plan, wl.instances, wl.chains, arrivals, wl.distances, sp)
    if args.format == "csv":
        with _output(args.out) as fh:
            rep.write_csv(fh)
    else:
        _dump_json(rep.summary(), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = resolve_config(args)
    if not args.axis:
        res = run_sweep(cfg, "num_chains", [cfg.num_chains], workers=args.workers)
    else:
        values = [coerce_field(args.axis, v) for v in args.values.split(",")] if args.values else []
        if not values:
            raise ConfigError(["values: at least one value is required with --axis"])
        res = run_sweep(cfg, args.axis, values, workers=args.workers)
    if args.format == "json":
        _dump_json({"axis": res.axis, "summary": res.summary,
                    "rows": [r.as_dict() for r in res.rows]}, args.out)
    else:
        with _output(args.out) as fh:
            write_rows_csv(res.rows, fh, timing=not args.no_timing)
    return EXIT_OK


def cmd_compare(args) -> int:
    with open(args.a) as fa, open(args.b) as fb:
        table = compare_tables(read_rows_csv(fa), read_rows_csv(fb))
    if args.format == "json":
        _dump_json(table, args.out)
    else:
        with _output(args.out) as fh:
            fh.write("scenario,metric,a_mean,b_mean,reduction_pct\n")
            for t in table:
                fh.write(f"{t['scenario']},{t['metric']},{t['a_mean']},{t['b_mean']},{t['reduction_pct']:.2f}\n")
    return EXIT_OK


def _add_common(p, fmt="json"):
    p.add_argument("--config", help="experiment config (JSON)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=fmt)
    g = p.add_argument_group("config overrides")
    for f in dataclasses.fields(ExperimentConfig):
        if f.name in ("strategies", "seeds"):
            continue
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f"cfg_{f.name}", metavar="V")


def _add_inputs(p, plan=False):
    p.add_argument("--graph-file", help="topology JSON from `generate`")
    p.add_argument("--workload-file", help="workload JSON from `generate`")
    if plan:
        p.add_argument("--plan", required=True, help="plan JSON from `deploy`")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nfbackup", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="emit topology and workload files")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("deploy", help="run one strategy and write its plan")
    _add_common(p)
    _add_inputs(p)
    p.add_argument("--strategy", default="piggybackup")
    p.set_defaults(func=cmd_deploy)

    p = sub.add_parser("evaluate", help="cost report of a plan")
    _add_common(p)
    _add_inputs(p, plan=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("simulate", help="simulate update delivery for a plan")
    _add_common(p)
    _add_inputs(p, plan=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="seeded sweep over one config field")
    _add_common(p, fmt="csv")
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", help="comma separated axis values")
    p.add_argument("--seeds", type=int, help="number of seeds, starting at --seed")
    p.add_argument("--strategy", help="run a single strategy")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-timing", action="store_true", help="omit the runtime column")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="percentage reduction of CSV A relative to CSV B")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_compare)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (GuardError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, PlanError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
