"""CLI verbs, exit codes, and output files."""

import json

import pytest

from heatgrid import cli
from heatgrid.scenarios import SCENARIOS, CheckResult, ScenarioOutcome

TINY_CONFIG = {
    "scenario": "mini",
    "environment": "interval41",
    "env_params": {"temperature": 1},
    "algorithms": ["q"],
    "alphas": [0.1],
    "gamma": 0.9,
    "epsilon": 0.1,
    "population": 16,
    "frame_budget": 300,
    "checkpoints": [300],
    "eval_cutoff": 150,
    "rollouts_per_agent": 1,
}


def write_config(tmp_path, overrides=None):
    data = dict(TINY_CONFIG)
    if overrides:
        data.update(overrides)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(data))
    return path


def test_list_scenarios(capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in SCENARIOS:
        assert name in out


def test_run_json_config(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out_dir = tmp_path / "run"
    rc = cli.main(["run", str(cfg), "--out", str(out_dir), "--threads", "1",
                   "--check"])
    assert rc == 0
    assert (out_dir / "results.csv").is_file()
    assert (out_dir / "manifest.json").is_file()
    text = capsys.readouterr().out
    assert "wrote" in text
    assert "no checks defined" in text


def test_run_json_refuses_overwrite(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out_dir = tmp_path / "run"
    assert cli.main(["run", str(cfg), "--out", str(out_dir),
                     "--threads", "1"]) == 0
    assert cli.main(["run", str(cfg), "--out", str(out_dir),
                     "--threads", "1"]) == 1
    assert cli.main(["run", str(cfg), "--out", str(out_dir),
                     "--threads", "1", "--force"]) == 0


def test_run_json_seed_override_changes_manifest(tmp_path):
    cfg = write_config(tmp_path)
    out_dir = tmp_path / "run"
    assert cli.main(["run", str(cfg), "--out", str(out_dir), "--threads", "1",
                     "--seed", "7"]) == 0
    manifest = json.loads((out_dir / "manifest.json").read_text())
    assert manifest["master_seed"] == 7


def test_run_missing_config_file(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "nope.json")]) == 1
    assert "not found" in capsys.readouterr().err


def test_run_malformed_json(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert cli.main(["run", str(path)]) == 1
    assert capsys.readouterr().err.strip()


def test_run_invalid_config_value(tmp_path, capsys):
    cfg = write_config(tmp_path, {"population": -3})
    assert cli.main(["run", str(cfg)]) == 1
    assert "config error at population" in capsys.readouterr().err


def test_run_unknown_scenario(capsys):
    assert cli.main(["run", "no_such_thing"]) == 1
    assert "unknown scenario" in capsys.readouterr().err


def test_run_scenario_with_passing_checks(tmp_path, capsys):
    out_dir = tmp_path / "scatter"
    rc = cli.main(["run", "fig2_scatter", "--out", str(out_dir),
                   "--threads", "1", "--check"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "[PASS]" in text
    assert "[FAIL]" not in text
    assert (out_dir / "results.csv").is_file()


def test_run_check_flag_fails_on_bad_check(tmp_path, monkeypatch, capsys):
    outcome = ScenarioOutcome(
        rows=[], checks=[CheckResult("rigged", False, "boom")],
        out_dir=tmp_path)
    monkeypatch.setattr(cli, "run_scenario",
                        lambda *a, **k: outcome)
    assert cli.main(["run", "fig2_scatter", "--check"]) == 2
    assert "[FAIL] rigged" in capsys.readouterr().out
    # without --check the same failure still exits 0
    assert cli.main(["run", "fig2_scatter"]) == 0


def test_validate_theory(tmp_path, capsys):
    out_dir = tmp_path / "theory"
    rc = cli.main(["validate-theory", "--out", str(out_dir),
                   "--mc-runs", "20000", "--seed", "20260815"])
    assert rc == 0
    assert (out_dir / "results.csv").is_file()
    text = capsys.readouterr().out
    assert "[PASS]" in text and "[FAIL]" not in text


def test_validate_theory_exit_2_on_failure(monkeypatch, capsys):
    monkeypatch.setattr(
        cli, "_run_theory",
        lambda *a, **k: ([], [CheckResult("rigged", False, "boom")]))
    assert cli.main(["validate-theory"]) == 2
    assert "[FAIL] rigged" in capsys.readouterr().out


def test_report_run_dir(tmp_path, capsys):
    cfg = write_config(tmp_path)
    out_dir = tmp_path / "run"
    assert cli.main(["run", str(cfg), "--out", str(out_dir),
                     "--threads", "1"]) == 0
    capsys.readouterr()
    assert cli.main(["report", str(out_dir)]) == 0
    text = capsys.readouterr().out
    assert "environment" in text
    assert "interval41" in text


def test_report_shows_check_marks(tmp_path, capsys):
    out_dir = tmp_path / "scatter"
    assert cli.main(["run", "fig2_scatter", "--out", str(out_dir),
                     "--threads", "1"]) == 0
    capsys.readouterr()
    assert cli.main(["report", str(out_dir)]) == 0
    assert "[PASS]" in capsys.readouterr().out


def test_report_missing_dir(tmp_path, capsys):
    assert cli.main(["report", str(tmp_path / "ghost")]) == 1
    assert "no results.csv" in capsys.readouterr().err


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv("HEATGRID_THREADS", "3")
    assert cli._default_threads() == 3
    monkeypatch.setenv("HEATGRID_THREADS", "0")
    assert cli._default_threads() == 1
    monkeypatch.setenv("HEATGRID_THREADS", "abc")
    with pytest.raises(SystemExit):
        cli._default_threads()
    monkeypatch.delenv("HEATGRID_THREADS")
    assert cli._default_threads() >= 1
