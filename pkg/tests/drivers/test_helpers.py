import json
import logging

import numpy as np
import pytest

from pcsvs.config import resolve_config
from pcsvs.drivers.runs import open_run, run_directory, standard_hooks
from pcsvs.drivers.synthesize import fit_frames, parse_labels
from pcsvs.drivers.toy import benchmark_table, summarize
from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.prompts.labels import AttributeLabels


def test_parse_labels():
    assert parse_labels("gender=female, volume=high") == AttributeLabels(gender="female", volume="high")
    assert parse_labels("vocal-range=high,gender=male") == AttributeLabels(gender="male", vocal_range="high")
    assert parse_labels("") == AttributeLabels()


@pytest.mark.parametrize("text", ["gender", "tempo=fast", "gender=robot", "vocal_range=high"])
def test_parse_labels_rejects(text):
    with pytest.raises(ConfigError):
        parse_labels(text)


def test_fit_frames_crops_and_pads_within_tolerance():
    ids = np.arange(10)
    assert fit_frames(ids, 9).tolist() == list(range(9))
    assert fit_frames(ids, 12).tolist() == list(range(10)) + [9, 9]
    with pytest.raises(InvalidInputError):
        fit_frames(ids, 13)


def test_run_directory_records_config_meta_and_log(tmp_path):
    cfg = resolve_config(None, [f"paths.work_dir={tmp_path}", "seed=11"])
    with run_directory(cfg, "train-codec", ["pcsvs", "train-codec"]) as run:
        logging.getLogger("pcsvs.tests").warning("inside the run")
        assert run.file("x.json") == run.path / "x.json"
    assert run.path.parent == tmp_path
    assert run.path.name.startswith("train-codec-")
    meta = json.loads((run.path / "meta.json").read_text())
    assert meta["seed"] == 11
    assert meta["argv"] == ["pcsvs", "train-codec"]
    assert meta["version"]
    assert "seed: 11" in (run.path / "config.yaml").read_text()
    assert "inside the run" in (run.path / "run.log").read_text()

    logging.getLogger("pcsvs.tests").warning("after the run")
    assert "after the run" not in (run.path / "run.log").read_text()


def test_run_directories_never_collide(tmp_path):
    cfg = resolve_config(None, [f"paths.work_dir={tmp_path}"])
    a = open_run(cfg, "evaluate", [])
    b = open_run(cfg, "evaluate", [])
    a.close()
    b.close()
    assert a.path != b.path


def test_standard_hooks_follow_config(tmp_path):
    cfg = resolve_config(None, [f"paths.work_dir={tmp_path}", "hooks.timing=false"])
    assert standard_hooks(None, cfg) == ()
    with run_directory(cfg, "train-model", []) as run:
        hooks = standard_hooks(run, cfg)
        run.prefix = "full."
        more = standard_hooks(run, {**cfg, "hooks": {"loss_window": 5, "timing": True}})
    assert len(hooks) == 1
    assert len(more) == 2
    assert (run.path / "metrics.ndjson").exists()
    assert (run.path / "full.timing.csv").exists()


def _variant(gender, volume, vocal_range, rffe):
    return {"gender": {"female": gender, "male": gender}, "volume": volume,
            "vocal_range": vocal_range, "rffe": rffe}


def test_toy_summary_checks_targets_and_ablation_order():
    results = {
        "full": _variant(95.0, 93.0, 90.0, 0.10),
        "no_range_factor": _variant(95.0, 93.0, 80.0, 0.10),
        "no_range_factor_no_rescale": _variant(95.0, 93.0, 70.0, 0.30),
    }
    checks = summarize(results)["checks"]
    assert all(checks.values())

    results["no_range_factor"] = _variant(95.0, 93.0, 88.0, 0.10)
    results["full"] = _variant(80.0, 93.0, 90.0, 0.20)
    checks = summarize(results)["checks"]
    assert checks["full_gender_target"] is False
    assert checks["full_rffe_target"] is False
    assert checks["range_factor_ablation"] is False


def test_toy_summary_with_unscored_attributes():
    results = {"full": {"gender": {"female": None, "male": None}, "volume": None,
                        "vocal_range": None, "rffe": None}}
    checks = summarize(results)["checks"]
    assert checks["full_gender_target"] is None
    assert "range_factor_ablation" not in checks


def test_benchmark_table_lists_variants():
    table = benchmark_table({"full": _variant(95.0, 93.0, 90.0, 0.1), "no_range_factor": _variant(None, 50.0, 60.0, None)})
    lines = table.splitlines()
    assert lines[2].startswith("full")
    assert "93.0" in lines[2] and "0.100" in lines[2]
    assert lines[3].startswith("no_range_factor") and " - " in lines[3]
