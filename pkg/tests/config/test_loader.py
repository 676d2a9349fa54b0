from pathlib import Path

import pytest
import yaml

from pcsvs.config import (cache_dir, default_config, dump_config,
                          parse_overrides, resolve_config)
from pcsvs.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def _write(path: Path, data) -> Path:
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return path


def test_no_layers_gives_defaults():
    assert resolve_config() == default_config()


def test_defaults_are_copied():
    cfg = default_config()
    cfg["train"]["steps"] = -1
    assert default_config()["train"]["steps"] != -1


def test_file_layer_overrides_only_what_it_names(tmp_path):
    path = _write(tmp_path / "run.yaml", {"seed": 3, "train": {"steps": 7}})
    cfg = resolve_config(path)
    assert cfg["seed"] == 3
    assert cfg["train"]["steps"] == 7
    assert cfg["train"]["batch_size"] == default_config()["train"]["batch_size"]


def test_base_chain_resolves_relative_to_the_file(tmp_path):
    (tmp_path / "sub").mkdir()
    _write(tmp_path / "base.yaml", {"seed": 1, "train": {"steps": 10, "lr": 0.1}})
    child = _write(tmp_path / "sub" / "child.yaml", {"base": "../base.yaml", "train": {"steps": 20}})
    cfg = resolve_config(child)
    assert cfg["seed"] == 1
    assert cfg["train"]["steps"] == 20
    assert cfg["train"]["lr"] == 0.1
    assert "base" not in cfg


def test_base_cycle_is_reported(tmp_path):
    _write(tmp_path / "a.yaml", {"base": "b.yaml"})
    _write(tmp_path / "b.yaml", {"base": "a.yaml"})
    with pytest.raises(ConfigError, match="deeper"):
        resolve_config(tmp_path / "a.yaml")


def test_flags_win_over_the_file(tmp_path):
    path = _write(tmp_path / "run.yaml", {"train": {"steps": 7}})
    cfg = resolve_config(path, ["train.steps=50", "data_mix.speech_hours=null", "sampling.greedy=true"])
    assert cfg["train"]["steps"] == 50
    assert cfg["data_mix"]["speech_hours"] is None
    assert cfg["sampling"]["greedy"] is True


def test_parse_overrides_reads_yaml_scalars():
    assert parse_overrides(["a.b=1.5", "a.c=text", "a.d="]) == [("a.b", 1.5), ("a.c", "text"), ("a.d", None)]
    with pytest.raises(ConfigError):
        parse_overrides(["no_equals_sign"])
    with pytest.raises(ConfigError):
        parse_overrides(["=1"])


@pytest.mark.parametrize(
    "layer",
    [{"nosuch": 1}, {"train": {"nosuch": 1}}],
)
def test_unknown_file_keys_are_rejected(tmp_path, layer):
    with pytest.raises(ConfigError, match="unknown config key"):
        resolve_config(_write(tmp_path / "run.yaml", layer))


def test_unknown_flag_section_is_rejected():
    with pytest.raises(ConfigError):
        resolve_config(None, ["nosuch.key=1"])


def test_flag_through_a_scalar_is_rejected():
    with pytest.raises(ConfigError):
        resolve_config(None, ["train.steps.inner=1"])


def test_unreadable_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        resolve_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("train: [unclosed", encoding="utf-8")
    with pytest.raises(ConfigError, match="invalid YAML"):
        resolve_config(bad)
    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError, match="mapping"):
        resolve_config(listing)


@pytest.mark.parametrize(
    "flags",
    [["model.n_q=2"], ["codec.hop=240"], ["codec.codebook_size=32"]],
)
def test_cross_section_mismatch_is_a_config_error(flags):
    with pytest.raises(ConfigError):
        resolve_config(None, flags)


@pytest.mark.parametrize("path", sorted(CONFIGS.rglob("*.yaml")), ids=lambda p: p.stem)
def test_shipped_configs_resolve(path):
    cfg = resolve_config(path)
    assert isinstance(cfg["seed"], int)


def test_ablation_configs_layer_on_the_defaults():
    base = resolve_config(CONFIGS / "default.yaml")
    a = resolve_config(CONFIGS / "pitch_ablation" / "no_range_factor.yaml")
    b = resolve_config(CONFIGS / "pitch_ablation" / "no_range_factor_no_rescale.yaml")
    assert base["model"]["use_range_factor"] and base["model"]["rescale_melody"]
    assert not a["model"]["use_range_factor"] and a["model"]["rescale_melody"]
    assert not b["model"]["use_range_factor"] and not b["model"]["rescale_melody"]
    assert a["model"]["hidden"] == b["model"]["hidden"] == base["model"]["hidden"]


def test_data_mix_configs_set_hour_caps():
    cfg = resolve_config(CONFIGS / "data_mix" / "svs_1h_tts_100h.yaml")
    assert cfg["data_mix"]["singing_hours"] == 1
    assert cfg["data_mix"]["speech_hours"] == 100


def test_dump_is_loadable_yaml():
    cfg = resolve_config(None, ["seed=5"])
    assert yaml.safe_load(dump_config(cfg))["seed"] == 5


def test_cache_dir_reads_environment(monkeypatch, tmp_path):
    monkeypatch.delenv("PCSVS_CACHE_DIR", raising=False)
    assert cache_dir() is None
    monkeypatch.setenv("PCSVS_CACHE_DIR", str(tmp_path))
    assert cache_dir() == tmp_path
