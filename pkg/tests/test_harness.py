import csv
import json

import numpy as np
import pytest

from rffso.config import ConfigError, load_config
from rffso.harness import Aggregate, Scenario, emit_outputs, read_trials, run_experiment, run_trial, scaled_counts
from rffso.harness import cli
from rffso.harness.run import TrialResult
from rffso.network import draw_network, link_stats


def _small():
    return load_config().replace(network={"num_aps": 8, "num_ues": 3, "num_ans": 2, "cluster_size": 2})


def test_scaled_counts():
    assert scaled_counts("A", 200) == (20, 20, 160)
    assert scaled_counts("D", 40) == (16, 16, 8)
    assert sum(scaled_counts("B", 37)) == 37
    assert scaled_counts("custom", 40) == (40, 0, 0)
    with pytest.raises(ConfigError):
        scaled_counts("Z", 40)


@pytest.mark.parametrize("kw", [{"policy": "laser"}, {"solver": "cvx"}, {"mode": "mesh"}, {"weather": "hail"},
                                {"trials": 0}, {"alignment": (1, 1, 1)}])
def test_scenario_validation(kw):
    with pytest.raises(ConfigError):
        Scenario(**kw)


def test_scenario_aliases():
    sc = Scenario(policy="both", mode="uc")
    assert sc.policy == "rf_and_fso" and sc.mode == "user_centric"
    assert sc.config.network.mode == "user_centric"


def test_fso_only_trial():
    sc = Scenario(config=_small(), trials=1)
    r = run_trial(sc, 0)
    assert (r.n_fso, r.n_rf, r.n_hybrid) == (8, 0, 0)
    assert r.bw0 == sc.config.network.rf_bandwidth
    assert r.ee >= 0


def test_rf_and_fso_trial():
    r = run_trial(Scenario(config=_small(), policy="rf_and_fso", trials=1), 0)
    assert (r.n_fso, r.n_rf, r.n_hybrid) == (0, 0, 8)


def test_trial_replay_is_bit_identical():
    sc = Scenario(config=_small(), policy="cognitive", name="B", solver="wmmse", trials=1)
    a, b = run_trial(sc, 3), run_trial(sc, 3)
    assert a.sinr.tobytes() == b.sinr.tobytes()
    assert a.ee == b.ee and a.assignment.eps.tolist() == b.assignment.eps.tolist()


def test_link_stats_requires_a_link():
    cfg = _small()
    d = draw_network(cfg, np.random.default_rng(0))
    with pytest.raises(ValueError):
        link_stats(cfg, d, np.zeros(8), np.zeros(8))


def test_alignment_counts_must_sum():
    with pytest.raises(ValueError):
        draw_network(_small(), np.random.default_rng(0), (1, 1, 1))


def test_single_trial_cdf_is_a_step():
    agg = run_experiment(Scenario(config=_small(), trials=1))
    x, p = agg.cdf()
    assert x.size == 1 and p.tolist() == [1.0]


def test_aggregate_independent_of_order():
    sc = Scenario(config=_small(), trials=5, policy="cognitive", name="C")
    a = run_experiment(sc)
    b = run_experiment(sc, order=[4, 2, 0, 3, 1])
    assert a.summary() == b.summary()
    assert a.ee.tobytes() == b.ee.tobytes()


def test_process_pool_matches_serial():
    sc = Scenario(config=_small(), trials=3)
    assert run_experiment(sc, jobs=2).ee.tobytes() == run_experiment(sc).ee.tobytes()


def test_cdf_nondecreasing():
    agg = run_experiment(Scenario(config=_small(), trials=6))
    x, p = agg.cdf()
    assert np.all(np.diff(x) >= 0) and np.all(np.diff(p) > 0) and p[-1] == 1.0


# -------------------------------------------------------------- output -----

def test_empty_aggregate_headers_only(tmp_path):
    paths = emit_outputs([Aggregate(None, [])], tmp_path, figures=False)
    for name in ("trials.csv", "cdf.csv", "assignment.csv"):
        lines = paths[name].read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1, name
    assert paths["assignment.csv"].read_text().startswith("weather,scenario,n_fso,n_rf,n_hybrid")
    assert "ee_bits_per_joule,cumulative_probability" in paths["cdf.csv"].read_text()


def test_outputs_round_trip(tmp_path):
    agg = run_experiment(Scenario(config=_small(), trials=4, policy="cognitive", name="A"))
    paths = emit_outputs([agg], tmp_path, {"k": 1}, figures=True)
    rows = read_trials(paths["trials.csv"])
    assert np.mean([r["ee_bits_per_joule"] for r in rows]) == pytest.approx(agg.mean_ee(), rel=1e-15)
    with open(paths["cdf.csv"], encoding="utf-8") as fh:
        cdf = list(csv.DictReader(fh))
    assert float(cdf[-1]["cumulative_probability"]) == 1.0
    raw = paths["trials.csv"].read_bytes()
    assert b"\r\n" not in raw
    rep = json.loads(paths["report.json"].read_text(encoding="utf-8"))
    assert rep["runs"][0]["trials"] == 4 and rep["config"] == {"k": 1}
    assert rep["runs"][0]["mean_ee"] == pytest.approx(agg.mean_ee())
    for fig in ("ee_cdf.png", "assignment.png"):
        assert paths[fig].stat().st_size > 0
    links = paths["links.csv"].read_text(encoding="utf-8").splitlines()
    assert len(links) == 1 + 8


def test_convergence_file_for_iterative_solver(tmp_path):
    agg = run_experiment(Scenario(config=_small(), trials=1, solver="wmmse"))
    paths = emit_outputs([agg], tmp_path, figures=True)
    lines = paths["convergence.csv"].read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1 + agg.results[0].iterations
    assert (tmp_path / "convergence.png").exists()


# ----------------------------------------------------------------- CLI -----

def _write_cfg(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps({"network": {"num_aps": 8, "num_ues": 3, "num_ans": 2, "cluster_size": 2}}),
                 encoding="utf-8")
    return str(p)


def test_cli_success(tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["--config", _write_cfg(tmp_path), "--trials", "2", "--policy", "fso,cognitive",
                     "--out", str(out), "--no-figures"])
    assert code == cli.EXIT_OK
    assert len(read_trials(out / "trials.csv")) == 4
    assert capsys.readouterr().out.count("mean_ee=") == 2


@pytest.mark.parametrize("args", [["--policy", "laser"], ["--config", "/nonexistent.json"], ["--trials", "0"]])
def test_cli_config_errors(tmp_path, args):
    assert cli.main(args + ["--out", str(tmp_path / "o"), "--no-figures"]) == cli.EXIT_CONFIG


def test_cli_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{", encoding="utf-8")
    assert cli.main(["--config", str(p), "--out", str(tmp_path / "o")]) == cli.EXIT_CONFIG


def test_cli_infeasible_budget(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"power": {"p_total": 1.0}}), encoding="utf-8")
    assert cli.main(["--config", str(p), "--trials", "1", "--out", str(tmp_path / "o"), "--no-figures"]) == cli.EXIT_CONFIG


def test_cli_nonconvergence(tmp_path, monkeypatch):
    def fake(sc, jobs=1):
        r = TrialResult(0, np.ones(3), np.ones(3), 1.0, 1.0, 1.0, 8, 0, 0, 500, False)
        return Aggregate(sc, [r])
    monkeypatch.setattr(cli, "run_experiment", fake)
    code = cli.main(["--config", _write_cfg(tmp_path), "--trials", "1", "--out", str(tmp_path / "o"), "--no-figures"])
    assert code == cli.EXIT_SOLVER
