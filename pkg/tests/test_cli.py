import json

import pytest

from gossipsim import cli
from gossipsim.experiment import (
    PRESETS,
    ExperimentError,
    ExperimentPlan,
    derive_seed,
    emit_curves,
    execute,
    load_graphs,
    parse_graph_spec,
    resolve_preset,
    run_experiment,
    sweep_v0,
)
from gossipsim.metrics import read_aggregate, read_results
from gossipsim.topology import Graph

SMALL = dict(graphs="gen:n=30,count=2,seed=5", steps=400, mean_intergen=30.0, seeds=2)


def test_sweep_values():
    assert sweep_v0(100)[:3] == [0.01, 0.02, 0.03] and sweep_v0(100)[-1] == 1.0
    assert len(sweep_v0(100)) == 100
    assert sweep_v0(1) == [1.0]
    with pytest.raises(ValueError):
        sweep_v0(0)


def test_presets():
    assert resolve_preset("alg1-paper") == dict(t_mon=100, sigma=0.2, delta=300, alpha=1 / 3)
    assert resolve_preset("alg3-setup5") == dict(t_mon=30, sigma=0.25, delta=10000, alpha=1.0)
    assert len([p for p in PRESETS if p.startswith("alg3-setup")]) == 6
    for name in PRESETS:
        assert len(resolve_preset(name)) == 4
    with pytest.raises(ValueError):
        resolve_preset("alg4")


def test_seed_derivation_is_stable_and_distinct():
    seeds = {derive_seed(0, g, p, v, r) for g in range(5) for p in ("a", "b") for v in range(5) for r in range(3)}
    assert len(seeds) == 150
    assert derive_seed(1, 2, "x", 3, 4) == derive_seed(1, 2, "x", 3, 4)
    assert all(0 <= s < 2**63 for s in seeds)


def test_graph_spec():
    assert parse_graph_spec("gen:n=50,count=3") == dict(n=50, epn=2, dmax=8, count=3, seed=0)
    with pytest.raises(ValueError):
        parse_graph_spec("gen:size=4")
    gs = load_graphs("gen:n=30,count=2,seed=5")
    assert [g.graph_id for g in gs] == ["g5", "g6"]


def test_run_count_accounting(tmp_path):
    plan = ExperimentPlan(policies=["fixed-prob", "adaptive2"], v0_values=sweep_v0(3), preset="alg2-paper", **SMALL)
    reports = run_experiment(plan, tmp_path)
    rows = read_results((tmp_path / "runs.csv").read_text())
    assert len(rows) == len(reports) == 2 * 3 * 2 * 2
    agg = read_aggregate((tmp_path / "aggregated.csv").read_text())
    assert len(agg) == 6 and all(r["runs"] == 4 for r in agg)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert len(man["runs"]) == 24 and man["plan"]["sigma"] == 0.5


def test_baselines_echo_no_stimulus_parameters():
    plan = ExperimentPlan(preset="alg1-paper", **SMALL)
    cfg = plan.config("prob-bcast", 0.5, 30, 1)
    assert (cfg.sigma, cfg.delta, cfg.alpha) == (0.0, 0.0, 0.0)
    assert plan.config("adaptive1", 0.5, 30, 1).delta == 300.0


def test_parallel_equals_serial(tmp_path):
    plan = ExperimentPlan(policies=["prob-bcast", "adaptive3"], v0_values=[0.3, 0.9], preset="alg3-setup6", **SMALL)
    run_experiment(plan, tmp_path / "serial", jobs=1)
    run_experiment(plan, tmp_path / "par", jobs=3)
    for f in ("runs.csv", "aggregated.csv", "manifest.json"):
        assert (tmp_path / "serial" / f).read_bytes() == (tmp_path / "par" / f).read_bytes()


def test_manifest_replay_is_byte_identical(tmp_path):
    args = ["run", "--graphs", SMALL["graphs"], "--policy", "adaptive1,fixed-prob", "--preset", "alg1-paper",
            "--sweep-v0", "2", "--steps", "400", "--mean-intergen", "30", "--seeds", "2", "--jobs", "1"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--manifest", str(tmp_path / "a" / "manifest.json"), "--out", str(tmp_path / "b"),
                     "--jobs", "2"]) == 0
    for f in ("runs.csv", "aggregated.csv", "manifest.json"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_failed_run_names_the_point():
    plan = ExperimentPlan(policies=["fixed-prob"], v0_values=[0.5], ttl=1, **SMALL)
    with pytest.raises(ExperimentError, match=r"graph g5 .*run_seed"):
        execute(plan)


def agg_row(policy, rho, cov, v0=0.5):
    return dict(policy=policy, sigma=0.0, delta=0.0, alpha=0.0, t_mon=100, v0=v0, rho=rho, coverage=cov,
                coverage_sd=0.01, delay=3.0, delay_sd=0.1)


def test_curves_filter_and_sort():
    rows = [agg_row("fixed-prob", 2.0, 0.9), agg_row("fixed-prob", 0.8, 0.4), agg_row("fixed-prob", 1.2, 0.7)]
    cov, dl = emit_curves(rows, rho_min=1.0)
    lines = cov.splitlines()
    assert lines[0] == "policy,sigma,delta,alpha,t_mon,rho,coverage,coverage_sd"
    assert [float(x.split(",")[5]) for x in lines[1:]] == [1.2, 2.0]
    assert dl.splitlines()[0].endswith("delay,delay_sd") and len(dl.splitlines()) == 3
    cov, _ = emit_curves(rows, rho_min=None)
    assert len(cov.splitlines()) == 4


def test_curves_single_point_and_empty():
    cov, dl = emit_curves([agg_row("adaptive3", 1.5, 0.8)])
    assert len(cov.splitlines()) == 2 and len(dl.splitlines()) == 2
    cov, dl = emit_curves([])
    assert cov.count("\n") == 1 and dl.count("\n") == 1


def test_cli_end_to_end(tmp_path):
    gdir = tmp_path / "graphs"
    assert cli.main(["gen-graphs", "--n", "30", "--count", "2", "--seed", "3", "--out-dir", str(gdir)]) == 0
    assert sorted(p.name for p in gdir.iterdir()) == ["g3.dot", "g4.dot"]
    out = tmp_path / "res"
    assert cli.main(["run", "--graphs", str(gdir), "--policy", "fixed-prob", "--v0", "0.6", "--v0", "1.0",
                     "--steps", "300", "--mean-intergen", "30", "--seeds", "1", "--out", str(out), "--jobs", "1"]) == 0
    assert len(read_results((out / "runs.csv").read_text())) == 4
    assert cli.main(["curves", "--in", str(out), "--rho-min", "-1", "--out", str(tmp_path / "curves")]) == 0
    assert len((tmp_path / "curves" / "coverage_curves.csv").read_text().splitlines()) == 3


@pytest.mark.parametrize(
    "argv, code",
    [
        (["frobnicate"], 1),
        (["run", "--out", "x", "--policy", "gossip"], 1),
        (["run", "--out", "x", "--policy", "adaptive1"], 1),
        (["run", "--out", "x", "--preset", "alg1-paper", "--sigma", "0.1"], 1),
        (["run", "--out", "x", "--v0", "0.5", "--sweep-v0", "4"], 1),
        (["curves", "--in", "/nonexistent", "--out", "y"], 1),
        (["gen-graphs", "--n", "10", "--d-max", "1", "--count", "1", "--out-dir", "z"], 3),
    ],
)
def test_exit_codes(argv, code, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert exit_code(argv) == code


def exit_code(argv):
    # argparse errors leave through SystemExit, everything else returns
    try:
        return cli.main(argv)
    except SystemExit as e:
        return e.code


def test_run_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    argv = ["run", "--graphs", SMALL["graphs"], "--v0", "0.5", "--ttl", "1", "--steps", "100", "--out", "o",
            "--jobs", "1"]
    assert exit_code(argv) == 2


def test_loaded_dot_graphs_match_generated(tmp_path):
    cli.main(["gen-graphs", "--n", "30", "--count", "2", "--seed", "5", "--out-dir", str(tmp_path)])
    from_dir = load_graphs(str(tmp_path))
    generated = load_graphs("gen:n=30,count=2,seed=5")
    assert [g.adjacency for g in from_dir] == [g.adjacency for g in generated]
    assert all(isinstance(g, Graph) for g in from_dir)
