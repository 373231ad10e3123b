import io
import math

import pytest

from nfbackup.config import ConfigError, ExperimentConfig
from nfbackup.exact import GuardError
from nfbackup.experiment import (
    build_workload,
    compare_tables,
    mean_of,
    read_rows_csv,
    run_scenario,
    run_sweep,
    write_rows_csv,
)

SMALL = ExperimentConfig(num_chains=10, seeds=(0, 1))


def test_workload_is_seeded():
    a, b = build_workload(SMALL, 3), build_workload(SMALL, 3)
    assert a.instances == b.instances and a.chains == b.chains
    assert build_workload(SMALL, 4).chains != a.chains


def test_scenario_rows():
    rows = run_scenario(SMALL.replace(simulate=True, num_epochs=20), 0)
    assert [r.strategy for r in rows] == list(SMALL.strategies)
    for r in rows:
        assert 0 <= r.piggyback_ratio <= 1
        assert r.total_hops == r.piggyback_hops + r.standalone_hops
        assert not math.isnan(r.sim_mean_hops)


def test_exact_guard_enforced():
    with pytest.raises(GuardError):
        run_scenario(SMALL.replace(strategies=("exact",)), 0)
    tiny = ExperimentConfig(
        topology="random", num_servers=5, primary_capacity=1, num_types=2,
        num_chains=4, chain_len_max=3, backup_capacity=2, k_limit=2,
        strategies=("exact", "piggybackup"),
    )
    rows = run_scenario(tiny, 0)
    assert rows[0].expected_cost <= rows[1].expected_cost + 1e-9 or rows[1].uncovered


def test_sweep_csv_deterministic_and_compare():
    res = run_sweep(SMALL, "num_chains", [5, 10])
    assert [r.scenario for r in res.rows][:1] == ["num_chains=5"]
    assert len(res.rows) == 2 * 2 * 3
    bufs = []
    for _ in range(2):
        buf = io.StringIO()
        write_rows_csv(run_sweep(SMALL, "num_chains", [5, 10]).rows, buf, timing=False)
        bufs.append(buf.getvalue())
    assert bufs[0] == bufs[1]
    assert "runtime" not in bufs[0].splitlines()[0]
    rows = read_rows_csv(io.StringIO(bufs[0]))
    pb = [r for r in rows if r["strategy"] == "piggybackup"]
    rnd = [r for r in rows if r["strategy"] == "random"]
    table = compare_tables(pb, rnd, ("byte_hops",))
    assert {t["scenario"] for t in table} == {"num_chains=5", "num_chains=10"}
    for t in table:
        assert t["reduction_pct"] == pytest.approx(100 * (t["b_mean"] - t["a_mean"]) / t["b_mean"])
    assert mean_of(res.rows, "piggyback_ratio", strategy="piggybackup") >= 0
    assert {e["n"] for e in res.summary} == {2}


def test_bad_axis():
    with pytest.raises(ConfigError):
        run_sweep(SMALL, "colour", [1])
