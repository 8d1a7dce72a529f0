"""Command-line surface: outputs, determinism, and failure behaviour."""

import json
import math
import subprocess
import sys

import numpy as np
import pytest

from seqrank import load_csv, write_csv
from seqrank.cli import main

from conftest import constant_growth_panel, dominance_panel


def run_cli(*args):
    return main([str(a) for a in args])


def synth(out_dir, **overrides):
    flags = {
        "--assets": 6, "--steps": 120, "--seed": 7, "--vol": 0.01,
        "--drift": 0.0005, "--out-dir": out_dir,
    }
    flags.update(overrides)
    argv = ["synth"]
    for key, value in flags.items():
        argv += [key, value]
    assert run_cli(*argv) == 0
    return out_dir / "panel.csv"


class TestSynth:
    def test_writes_panel_and_manifest(self, tmp_path):
        path = synth(tmp_path)
        assert path.exists()
        manifest = json.loads((tmp_path / "panel.manifest.json").read_text())
        assert manifest["command"] == "synth"
        assert manifest["seed"] == 7
        assert manifest["version"]
        panel = load_csv(path)
        assert panel.n_assets == 6
        assert panel.n_dates == 121

    def test_repeat_runs_byte_identical(self, tmp_path):
        a = synth(tmp_path / "one")
        b = synth(tmp_path / "two")
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "one/panel.manifest.json").read_bytes() == (
            tmp_path / "two/panel.manifest.json"
        ).read_bytes()

    def test_single_asset_rejected(self, tmp_path, capsys):
        code = run_cli("synth", "--assets", 1, "--out-dir", tmp_path)
        assert code == 1
        assert "error:" in capsys.readouterr().err
        assert not (tmp_path / "panel.csv").exists()

    def test_constant_return_flags(self, tmp_path):
        path = synth(tmp_path, **{"--vol": 0.0, "--jumps": 0.0, "--drift": 0.001})
        panel = load_csv(path)
        assert np.allclose(panel.returns, math.exp(0.001) - 1.0, atol=1e-12)

    def test_sector_cycling(self, tmp_path):
        path = synth(tmp_path, **{"--sectors": "tech,energy"})
        panel = load_csv(path)
        assert panel.sectors == ("tech", "energy", "tech", "energy", "tech", "energy")


class TestStationarity:
    def test_report_written(self, tmp_path):
        path = synth(tmp_path, **{"--steps": 300, "--assets": 4})
        assert run_cli("stationarity", path, "--max-shift", 3, "--out-dir", tmp_path) == 0
        payload = json.loads((tmp_path / "stationarity.json").read_text())
        assert len(payload["report"]["rejection_by_shift"]) == 3
        assert payload["manifest"]["command"] == "stationarity"
        assert list(payload["manifest"]["inputs"]) == ["panel.csv"]
        text = (tmp_path / "stationarity.txt").read_text()
        assert "reject H0" in text

    def test_random_walk_prices_vs_returns(self, tmp_path):
        path = synth(tmp_path, **{"--steps": 400, "--assets": 5, "--vol": 0.015})
        assert run_cli("stationarity", path, "--max-shift", 2, "--out-dir", tmp_path) == 0
        report = json.loads((tmp_path / "stationarity.json").read_text())["report"]
        assert report["price_nonstationary_fraction"] >= 0.6
        assert report["return_stationary_fraction"] == 1.0

    def test_missing_file(self, tmp_path, capsys):
        code = run_cli("stationarity", tmp_path / "absent.csv", "--out-dir", tmp_path)
        assert code == 1
        assert "absent.csv" in capsys.readouterr().err


class TestBacktest:
    def test_default_run_outputs(self, tmp_path):
        path = synth(tmp_path)
        assert run_cli("backtest", path, "--out-dir", tmp_path) == 0
        payload = json.loads((tmp_path / "backtest.json").read_text())
        assert payload["config"]["strategy"] == "curds-whey"
        assert payload["metrics"]["strategy"]["days"] == len(payload["days"])
        assert payload["metrics"]["benchmark"]["days"] == len(payload["days"])
        assert (tmp_path / "equity.csv").read_text().startswith("date,cum_net_strategy")
        assert "<svg" in (tmp_path / "equity.svg").read_text()

    def test_zero_cost_differs_by_exactly_the_cost_column(self, tmp_path):
        path = synth(tmp_path)
        assert run_cli("backtest", path, "--out-dir", tmp_path / "priced") == 0
        assert run_cli("backtest", path, "--cost", "zero", "--out-dir", tmp_path / "free") == 0
        priced = json.loads((tmp_path / "priced/backtest.json").read_text())["days"]
        free = json.loads((tmp_path / "free/backtest.json").read_text())["days"]
        for a, b in zip(priced, free):
            assert a["gross"] == b["gross"]
            assert a["net"] == b["net"] - a["cost"]

    def test_long_short_nbar_populates_short_leg(self, tmp_path):
        panel = dominance_panel(d=10, n_dates=80)
        path = tmp_path / "panel.csv"
        write_csv(panel, path)
        assert run_cli(
            "backtest", path, "--mode", "long-short", "--strategy", "nbar",
            "--nbar-input", "realised", "--out-dir", tmp_path,
        ) == 0
        payload = json.loads((tmp_path / "backtest.json").read_text())
        assert all(day["n_short"] >= 1 for day in payload["days"])

    def test_flag_validation(self, tmp_path, capsys):
        path = synth(tmp_path)
        code = run_cli("backtest", path, "--decile", 0.9, "--out-dir", tmp_path / "bad")
        assert code == 1
        assert "decile" in capsys.readouterr().err
        assert not (tmp_path / "bad/backtest.json").exists()

    def test_hyperparameter_flags_echoed(self, tmp_path):
        path = synth(tmp_path)
        assert run_cli(
            "backtest", path, "--tau", 0.99, "--lambda", 2.5, "--decile", 0.2,
            "--out-dir", tmp_path,
        ) == 0
        config = json.loads((tmp_path / "backtest.json").read_text())["config"]
        assert config["tau"] == 0.99
        assert config["ridge_lambda"] == 2.5
        assert config["decile_fraction"] == 0.2


class TestRank:
    def test_dominant_asset_leads(self, tmp_path):
        panel = dominance_panel(d=6, n_dates=30)
        path = tmp_path / "panel.csv"
        write_csv(panel, path)
        assert run_cli("rank", path, "--out-dir", tmp_path) == 0
        lines = (tmp_path / "rank.jsonl").read_text().strip().splitlines()
        assert len(lines) == 29
        for line in lines[1:]:
            day = json.loads(line)
            assert day["order_index"][0] == 0
            assert day["order"][0] == "A000"

    def test_uniform_panel_identity_order(self, tmp_path):
        panel = constant_growth_panel(d=5, n_dates=20)
        path = tmp_path / "panel.csv"
        write_csv(panel, path)
        assert run_cli("rank", path, "--out-dir", tmp_path) == 0
        for line in (tmp_path / "rank.jsonl").read_text().strip().splitlines():
            assert json.loads(line)["order_index"] == [0, 1, 2, 3, 4]

    def test_tau_one_keeps_uniform_posterior(self, tmp_path):
        panel = dominance_panel(d=5, n_dates=20)
        path = tmp_path / "panel.csv"
        write_csv(panel, path)
        assert run_cli("rank", path, "--tau", 1.0, "--out-dir", tmp_path) == 0
        for line in (tmp_path / "rank.jsonl").read_text().strip().splitlines():
            assert np.allclose(json.loads(line)["posterior"], 0.2, atol=1e-12)


class TestEntryPoint:
    def test_module_invocation(self, tmp_path):
        result = subprocess.run(
            [sys.executable, "-m", "seqrank", "synth", "--assets", "4", "--steps", "30",
             "--seed", "1", "--out-dir", str(tmp_path)],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        assert (tmp_path / "panel.csv").exists()

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "seqrank" in capsys.readouterr().out
