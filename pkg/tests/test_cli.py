import json
import shutil
from pathlib import Path

import pytest

from loadbench.cli import main

BASE_CONFIG = {
    "datasets": [
        {
            "dataset_id": "synthetic",
            "synthetic": {"n_households": 3, "days": 40, "seed": 11},
        }
    ],
    "models": [{"model_id": "SeasonalAverage", "kind": "Baseline"}],
    "baseline_model_id": "SeasonalAverage",
    "backtest": {"input_sizes": [24], "horizons": [24], "calibration_days": 365},
    "output_dir": "out",
}


def write_config(tmp_path, overrides=None, name="config.json"):
    config = json.loads(json.dumps(BASE_CONFIG))
    config["output_dir"] = str(tmp_path / "out")
    for key, value in (overrides or {}).items():
        config[key] = value
    path = tmp_path / name
    path.write_text(json.dumps(config))
    return path


class TestRun:
    def test_smoke(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["run", "--config", str(config)]) == 0
        out = tmp_path / "out"
        for name in (
            "records.csv", "metrics.csv", "table6.csv", "table7.csv",
            "heatmap.csv", "heatmap.png", "split_specs.csv", "audit.csv",
            "summary.csv", "preprocess_report.csv", "run_manifest.json",
        ):
            assert (out / name).exists(), name
        manifest = json.loads((out / "run_manifest.json").read_text())
        for name in manifest["outputs"]:
            assert (out / name).exists(), name

    def test_rerun_byte_identical_records(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["run", "--config", str(config)]) == 0
        first = (tmp_path / "out" / "records.csv").read_bytes()
        shutil.rmtree(tmp_path / "out")
        assert main(["run", "--config", str(config)]) == 0
        assert (tmp_path / "out" / "records.csv").read_bytes() == first

    def test_invalid_q_split_exits_1(self, tmp_path, capsys):
        config = write_config(
            tmp_path,
            {"datasets": [dict(BASE_CONFIG["datasets"][0], split_overrides={"q_split": 1.5})]},
        )
        assert main(["run", "--config", str(config)]) == 1

    def test_dead_endpoint_exits_2(self, tmp_path):
        config = write_config(
            tmp_path,
            {
                "models": [
                    {"model_id": "SeasonalAverage", "kind": "Baseline"},
                    {
                        "model_id": "dead",
                        "kind": "ZeroShot",
                        "transport": "Subprocess",
                        "command": ["false"],
                    },
                ]
            },
        )
        assert main(["run", "--config", str(config)]) == 2

    def test_missing_config_exits_1(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == 1


class TestStageCommands:
    def test_split_command(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["split", "--config", str(config)]) == 0
        assert (tmp_path / "out" / "split_specs.csv").exists()
        assert (tmp_path / "out" / "audit.csv").exists()
        assert "PASS" in (tmp_path / "out" / "audit.csv").read_text()

    def test_eda_command(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["eda", "--config", str(config)]) == 0
        for name in ("summary.csv", "eda_profiles.csv", "acf.csv", "hourly_profile.png"):
            assert (tmp_path / "out" / name).exists()

    def test_report_command_reaggregates(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["run", "--config", str(config)]) == 0
        metrics_first = (tmp_path / "out" / "metrics.csv").read_bytes()
        (tmp_path / "out" / "metrics.csv").unlink()
        assert main(["report", "--config", str(config)]) == 0
        assert (tmp_path / "out" / "metrics.csv").read_bytes() == metrics_first

    def test_report_missing_records_exits_1(self, tmp_path):
        config = write_config(tmp_path)
        assert main(["report", "--config", str(config)]) == 1


class TestAdapterThroughCli:
    def test_in_process_adapter_model(self, tmp_path):
        config = write_config(
            tmp_path,
            {
                "models": [
                    {"model_id": "SeasonalAverage", "kind": "Baseline"},
                    {"model_id": "mock", "kind": "ZeroShot", "transport": "InProcess"},
                ]
            },
        )
        assert main(["run", "--config", str(config)]) == 0
        records = (tmp_path / "out" / "records.csv").read_text()
        assert ",mock," in records
        assert ",SeasonalAverage," in records
