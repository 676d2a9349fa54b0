"""End-to-end toy benchmark with the shipped toy config (minutes on a CPU)."""

import json
from pathlib import Path

import pytest

from pcsvs.config import resolve_config
from pcsvs.drivers.runs import run_directory
from pcsvs.drivers.toy import PITCH_VARIANTS, run_toy_benchmark

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


@pytest.mark.slow
def test_toy_benchmark_reports_every_variant(tmp_path):
    cfg = resolve_config(CONFIGS / "toy.yaml", [f"paths.work_dir={tmp_path / 'runs'}"])
    with run_directory(cfg, "toy-benchmark", []) as run:
        summary = run_toy_benchmark(cfg, tmp_path / "bench", run)
    assert set(summary["variants"]) == set(PITCH_VARIANTS)
    assert set(summary["checks"]) >= {"full_gender_target", "full_volume_target", "full_rffe_target"}
    assert all(summary["checks"].values()), summary["checks"]
    saved = json.loads((tmp_path / "bench" / "benchmark.json").read_text())
    assert saved["checks"] == summary["checks"]
    assert (tmp_path / "bench" / "benchmark.txt").is_file()
    assert (run.path / "codec.metrics.ndjson").is_file()
    assert (run.path / "full.train_report.json").is_file()
