"""Run configuration and the command-line entry point"""
import json

import numpy as np
import pytest
import yaml

from includes.config import RESOLVED_CONFIG, RunConfig
from includes.exceptions import ConfigError
from main import Main

SMALL_RUN = {
    "synth": {"num_users": 40, "num_items": 30, "horizon_days": 60, "num_trends": 3,
              "trend_window": 10, "trend_pool_size": 5, "min_events": 6, "max_events": 10},
    "data": {"min_user": 3, "min_item": 2},
    "model": {"hidden_dim": 8, "num_layers": 1, "max_len": 8, "clip_time": 8},
    "train": {"epochs": 1, "batch_size": 16, "num_negatives": 5, "k": 3, "lr": "1e-3",
              "prefetch": 0},
    "analysis": {"top_u": 10},
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.yaml"
    path.write_text(yaml.safe_dump(SMALL_RUN))
    return path


class TestRunConfig:
    def test_defaults(self):
        cfg = RunConfig.load(None).resolve()
        assert cfg.train.lam == 0.3 and cfg.model.hidden_dim == 64

    def test_yaml_then_overrides(self, config_file):
        cfg = RunConfig.load(config_file).override({"train.delta": 15, "seed": 4,
                                                    "train.tau": None}).resolve()
        assert cfg.train.lr == 1e-3 and isinstance(cfg.train.lr, float)
        assert cfg.train.delta == 15 and cfg.train.tau == 0.1
        assert cfg.train.seed == cfg.synth.seed == 4

    def test_unknown_section_and_key(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("optimizer: {lr: 1}\n")
        with pytest.raises(ConfigError):
            RunConfig.load(path)
        with pytest.raises(ConfigError):
            RunConfig.from_dict({"train": {"learning_rate": 1.0}})
        with pytest.raises(ConfigError):
            RunConfig().override({"train.nope": 1})

    def test_validation_runs_on_resolve(self):
        with pytest.raises(ConfigError, match="train.tau"):
            RunConfig().override({"train.tau": 0.0}).resolve()

    def test_dump_reloads_identically(self, config_file, tmp_path):
        cfg = RunConfig.load(config_file).override({"seed": 2}).resolve()
        path = cfg.dump(tmp_path / "out")
        assert path.name == RESOLVED_CONFIG
        assert RunConfig.load(path).resolve() == cfg

    def test_preset(self):
        data = RunConfig.from_dict({"data": {"preset": "book"}}).data.with_preset()
        assert (data.min_user, data.min_item) == (30, 20)
        assert data.date_range == ["2011-01-01", "2013-12-31"]


class TestMain:
    def run(self, *argv):
        return Main([str(a) for a in argv]).run()

    def test_end_to_end(self, config_file, tmp_path):
        csv = tmp_path / "synthetic.csv"
        assert self.run("synth", "--config", config_file, "--out", csv, "--seed", 3) == 0
        assert csv.exists() and (tmp_path / RESOLVED_CONFIG).exists()

        data_dir = tmp_path / "data"
        assert self.run("preprocess", "--config", config_file, "--in", csv, "--out", data_dir) == 0
        stats = json.loads((data_dir / "stats.json").read_text())
        assert stats["num_users"] > 0

        train_dir = tmp_path / "train"
        assert self.run("train", "--config", config_file, "--data", data_dir / "dataset.npz",
                        "--out", train_dir, "--delta", 7, "--lambda", 0.2, "--quiet") == 0
        resolved = yaml.safe_load((train_dir / RESOLVED_CONFIG).read_text())
        assert resolved["train"]["delta"] == 7 and resolved["train"]["lam"] == 0.2
        assert len((train_dir / "metrics.jsonl").read_text().splitlines()) == 1
        test_report = json.loads((train_dir / "test.json").read_text())
        assert resolved["data"]["path"] == str(data_dir / "dataset.npz")

        rerun_dir = tmp_path / "rerun"
        assert self.run("train", "--config", train_dir / RESOLVED_CONFIG, "--out", rerun_dir) == 0
        assert json.loads((rerun_dir / "test.json").read_text()) == test_report

        eval_dir = tmp_path / "eval"
        assert self.run("evaluate", "--config", config_file, "--data", data_dir / "dataset.npz",
                        "--checkpoint", train_dir / "checkpoint.npz", "--out", eval_dir,
                        "--split", "test") == 0
        report = json.loads((eval_dir / "eval_test.json").read_text())
        assert report["hr_at_k"] == test_report["hr_at_k"]
        assert report["k"] == 3
        snapshot = yaml.safe_load((eval_dir / RESOLVED_CONFIG).read_text())
        assert snapshot["evaluate"] == {"checkpoint": str(train_dir / "checkpoint.npz"),
                                        "split": "test"}

        analysis_dir = tmp_path / "analysis"
        assert self.run("analyze", "overlap", "--data", data_dir / "dataset.npz", "--out",
                        analysis_dir, "--delta", 10, "--deltas", "5,10") == 0
        summary = json.loads((analysis_dir / "overlap_summary.json").read_text())
        assert summary["window_radius_days"] == 10
        assert summary["curve"]["10"] == pytest.approx(summary["average_overlap"])
        assert self.run("analyze", "intervals", "--data", csv, "--out", analysis_dir) == 0
        assert (analysis_dir / "intervals.csv").exists()

    def test_usage_error(self, capsys):
        assert self.run("train", "--no-such-flag") == 2
        assert self.run() == 2

    def test_runtime_error(self, tmp_path, capsys):
        assert self.run("train", "--data", tmp_path / "missing.npz", "--out", tmp_path) == 1
        assert "error:" in capsys.readouterr().err

    def test_bad_config_value(self, tmp_path, capsys):
        assert self.run("analyze", "intervals", "--data", tmp_path / "x.csv", "--out", tmp_path,
                        "--top-u", 0) == 1
        assert "analysis.top_u" in capsys.readouterr().err

    def test_missing_dataset(self, tmp_path, capsys):
        assert self.run("train", "--out", tmp_path) == 1
        assert "--data" in capsys.readouterr().err

    def test_bad_date_range(self, tmp_path, capsys):
        path = tmp_path / "run.yaml"
        path.write_text(yaml.safe_dump({"data": {"date_range": ["2011-13-01", "2012-01-01"]}}))
        assert self.run("preprocess", "--config", path, "--in", tmp_path / "x.csv",
                        "--out", tmp_path) == 1
        assert "data.date_range" in capsys.readouterr().err

    def test_log_that_is_not_utf8(self, tmp_path, capsys):
        csv = tmp_path / "log.csv"
        csv.write_bytes(b"user_id,item_id,timestamp\nu1,a,100\nu2,\xff\xfe,200\n")
        assert self.run("preprocess", "--in", csv, "--out", tmp_path) == 1
        assert "line 3" in capsys.readouterr().err

    def test_ablate_variants_are_recorded(self, tmp_path, capsys):
        assert self.run("ablate", "--variants", "full,bogus", "--out", tmp_path) == 1
        assert "ablate.variants" in capsys.readouterr().err
