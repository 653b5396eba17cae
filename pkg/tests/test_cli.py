import csv
import io
import json
from pathlib import Path

import pytest

from settrig import cli
from settrig.errors import NumericalError
from settrig.tolerance import default_tolerance

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_config(tmp_path, **overrides):
    cfg = json.loads((CONFIGS / "pilot_1d.json").read_text())
    cfg.update(overrides)
    path = tmp_path / "config.json"
    path.write_text(json.dumps(cfg))
    return path


def run(*argv):
    return cli.main([str(a) for a in argv])


def test_contract(tmp_path):
    out = tmp_path / "out"
    assert run("contract", "--config", write_config(tmp_path), "--out", out) == 0
    S = json.loads((out / "contractive_set.json").read_text())
    assert set(S) >= {"H", "h", "vertices", "lambda_target", "lambda_certified", "iterations_used"}
    assert sorted(v[0] for v in S["vertices"]) == pytest.approx([-1.0, 1.0])
    report = json.loads((out / "contract_report.json").read_text())
    assert report["lambda_certified"] == 0.5 and report["n_vertices"] == 2


def test_explicit_map_table(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("explicit-map", "--config", write_config(tmp_path), "--out", out) == 0
    rows = list(csv.DictReader(io.StringIO((out / "shell_table_w1_0_w2_1.csv").read_text())))
    assert [(r["ell"], r["J"], r["j_star"]) for r in rows] == [("1", "1 2 3", "3"), ("2", "1 2 3", "3")]
    obj = json.loads((out / "explicit_map_w1_0_w2_1.json").read_text())
    assert set(obj) >= {"rho", "j_star", "solutions", "contractive_set"}
    assert "ell,rho,J,j_star,eps" in capsys.readouterr().out


def test_single_shell(tmp_path):
    out = tmp_path / "out"
    assert run("explicit-map", "--config", write_config(tmp_path, rho=[1.0]), "--out", out) == 0
    assert json.loads((out / "explicit_map_w1_0_w2_1.json").read_text())["rho"] == [1.0]


@pytest.mark.parametrize("algorithm", [1, 2])
def test_simulate(tmp_path, algorithm):
    out = tmp_path / "out"
    assert run("simulate", "--config", write_config(tmp_path), "--out", out, "--algorithm", algorithm) == 0
    m = json.loads((out / f"metrics_alg{algorithm}_w1_0_w2_1.json").read_text())
    assert m["constraint_violations"] == 0 and m["convergence_step"] == 3
    header = (out / f"trace_alg{algorithm}_w1_0_w2_1.csv").read_text().splitlines()[0]
    assert header == "k,x_1,u_1,is_transmission,j_m,eps_m,psi"


def test_simulate_deterministic(tmp_path):
    texts = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("simulate", "--config", write_config(tmp_path), "--out", out) == 0
        texts.append((out / "metrics_alg1_w1_0_w2_1.json").read_bytes())
    assert texts[0] == texts[1]


def test_sweep(tmp_path):
    out = tmp_path / "out"
    assert run("sweep", "--config", write_config(tmp_path), "--out", out, "--workers", 2) == 0
    rows = list(csv.DictReader(io.StringIO((out / "sweep_alg1.csv").read_text())))
    assert [(r["w1"], r["w2"]) for r in rows] == [("0", "1"), ("1", "0")]
    assert (out / "sweep" / "alg1_w1_1_w2_0" / "metrics_alg1_w1_1_w2_0.json").exists()


def test_sweep_empty_grid(tmp_path):
    assert run("sweep", "--config", write_config(tmp_path, sweep_weights=[]), "--out", tmp_path / "o") == 2


def test_outside_initial_state(tmp_path, capsys):
    out = tmp_path / "out"
    assert run("simulate", "--config", write_config(tmp_path, x0=[1.5]), "--out", out) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "AssumptionViolated"
    assert json.loads((out / "error.json").read_text())["exit_code"] == 2


def test_degenerate_iterate(tmp_path, capsys):
    # one input cannot steer two states to the origin in one step
    cfg = write_config(tmp_path, system={"discrete": {"A": [[1.1, 0.3], [0.0, 0.95]], "B": [[0.1], [0.5]]}},
                       constraints={"X": {"inf_norm_bound": 1}, "U": {"inf_norm_bound": 1}},
                       x0=[0.0, 0.0], **{"lambda": 0.0})
    assert run("contract", "--config", cfg, "--out", tmp_path / "o") == 2
    assert json.loads(capsys.readouterr().err)["error"] == "EmptyIterate"


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalError("pivot breakdown")

    monkeypatch.setattr(cli, "compute_contractive_set", boom)
    assert run("contract", "--config", write_config(tmp_path), "--out", tmp_path / "o") == 3


@pytest.mark.parametrize("bad", [
    {"system": {}},
    {"x0": [1.0, 2.0]},
    {"lambda": 1.5},
    {"rho": [0.5, 0.9]},
    {"weights": [-1, 1]},
])
def test_bad_config(tmp_path, bad):
    assert run("contract", "--config", write_config(tmp_path, **bad), "--out", tmp_path / "o") == 2


def test_missing_config(tmp_path):
    assert run("contract", "--config", tmp_path / "nope.json", "--out", tmp_path / "o") == 2


def test_verify_round_trip(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path)
    assert run("explicit-map", "--config", cfg, "--out", out) == 0
    assert run("verify", "--config", cfg, "--out", out) == 0
    report = json.loads((out / "verify_report.json").read_text())
    assert report["passed"] and report["contractive_set"]["certified"]


def test_verify_detects_tampering(tmp_path):
    out = tmp_path / "out"
    cfg = write_config(tmp_path)
    assert run("contract", "--config", cfg, "--out", out) == 0
    path = out / "contractive_set.json"
    S = json.loads(path.read_text())
    S["lambda_certified"] = 0.1
    path.write_text(json.dumps(S))
    assert run("verify", "--config", cfg, "--out", out) == 2


def test_verify_needs_set(tmp_path):
    assert run("verify", "--config", write_config(tmp_path), "--out", tmp_path / "o") == 2


def test_tolerance_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SETTRIG_TOL", "1e-5")
    assert default_tolerance().feas_tol == 1e-5
    monkeypatch.setenv("SETTRIG_TOL", "-1")
    assert run("contract", "--config", write_config(tmp_path), "--out", tmp_path / "o") == 2


def test_batch_reactor_config_parses():
    cfg = cli.ExperimentConfig.load(CONFIGS / "batch_reactor.json")
    assert cfg.system.A.shape == (4, 4) and cfg.system.B.shape == (4, 2)
    assert cfg.rho[0] == 0.1 and len(cfg.rho) == 10
    assert cfg.sweep_weights == [(0, 1), (50, 1), (100, 1)]
