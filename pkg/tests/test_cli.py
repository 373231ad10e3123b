import json

from nfbackup.cli import main
from nfbackup.netgraph import NetworkGraph
from nfbackup.workload import workload_from_dict

FAST = ["--num-chains", "8", "--seed", "1"]


def test_generate_deploy_evaluate_simulate(tmp_path, capsys):
    assert main(["generate", "--out", str(tmp_path), *FAST]) == 0
    g = NetworkGraph.from_dict(json.loads((tmp_path / "topology.json").read_text()))
    inst, chains = workload_from_dict(json.loads((tmp_path / "workload.json").read_text()))
    assert len(g.servers) == 20 and len(inst) == 160 and len(chains) == 8

    files = ["--graph-file", str(tmp_path / "topology.json"),
             "--workload-file", str(tmp_path / "workload.json")]
    plan = tmp_path / "plan.json"
    assert main(["deploy", *files, "--out", str(plan), *FAST]) == 0
    doc = json.loads(plan.read_text())
    assert doc["K"] == 5 and len(doc["J"]) + len([t for t in doc["provenance"].values() if t == "uncovered"]) == 160

    rep = tmp_path / "rep.json"
    assert main(["evaluate", *files, "--plan", str(plan), "--out", str(rep)]) == 0
    assert set(json.loads(rep.read_text())) >= {"byte_hops", "piggyback_ratio", "per_instance"}

    sim = tmp_path / "sim.csv"
    assert main(["simulate", *files, "--plan", str(plan), "--num-epochs", "5",
                 "--format", "csv", "--out", str(sim)]) == 0
    assert sim.read_text().startswith("instance,epoch,mode")


def test_sweep_and_compare(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    common = ["sweep", "--axis", "num_chains", "--values", "5,10", "--seeds", "2", "--no-timing"]
    assert main([*common, "--strategy", "piggybackup", "--out", str(a)]) == 0
    assert main([*common, "--strategy", "random", "--out", str(b)]) == 0
    out = tmp_path / "cmp.csv"
    assert main(["compare", str(a), str(b), "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "scenario,metric,a_mean,b_mean,reduction_pct"
    assert len(lines) == 1 + 2 * 4


def test_exit_codes(tmp_path, capsys):
    assert main(["deploy", "--pods", "3"]) == 1
    assert "pods" in capsys.readouterr().err
    assert main(["deploy", "--strategy", "exact"]) == 2
    assert main(["deploy", "--graph-file", str(tmp_path / "x.json")]) == 1
    assert main(["evaluate", "--plan", str(tmp_path / "missing.json")]) == 1
    assert main(["sweep", "--axis", "num_chains"]) == 1
