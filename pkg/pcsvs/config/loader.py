"""
Layered run configuration: DEFAULT_CONFIG <- YAML file <- --set flags.

A YAML file may name another file under `base:` (relative to itself); the
base is resolved first, so ablation configs only list what they change.
Flag values are parsed as YAML scalars ("--set train.steps=50",
"--set data_mix.speech_hours=null").
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any, Mapping, Sequence

import yaml

from pcsvs.config.defaults import default_config
from pcsvs.errors import ConfigError
from pcsvs.utils.io import PathLike
from pcsvs.utils.struct import merge_nested, set_nested

logger = logging.getLogger(__name__)

CACHE_ENV = "PCSVS_CACHE_DIR"
_MAX_BASE_DEPTH = 8


def load_yaml(path: PathLike, _depth: int = 0) -> dict[str, Any]:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        data = yaml.safe_load(p.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"{p}: invalid YAML: {e}") from e
    if not isinstance(data, Mapping):
        raise ConfigError(f"{p}: top level must be a mapping")
    data = dict(data)
    base = data.pop("base", None)
    if base is None:
        return data
    if _depth >= _MAX_BASE_DEPTH:
        raise ConfigError(f"{p}: 'base' chain deeper than {_MAX_BASE_DEPTH}")
    return merge_nested(load_yaml(p.parent / str(base), _depth + 1), data)


def parse_overrides(items: Sequence[str]) -> list[tuple[str, Any]]:
    out = []
    for item in items:
        key, sep, raw = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects section.key=value, got {item!r}")
        try:
            value = yaml.safe_load(raw) if raw.strip() else None
        except yaml.YAMLError as e:
            raise ConfigError(f"--set {key}: cannot parse value {raw!r}: {e}") from e
        out.append((key.strip(), value))
    return out


def _check_unknown(cfg: Mapping[str, Any], ref: Mapping[str, Any], prefix: str = "") -> None:
    for key, value in cfg.items():
        if key not in ref:
            raise ConfigError(f"unknown config key {prefix}{key}")
        if isinstance(value, Mapping) and isinstance(ref[key], Mapping) and ref[key]:
            _check_unknown(value, ref[key], f"{prefix}{key}.")


def resolve_config(
    config_path: PathLike | None = None,
    overrides: Sequence[str] = (),
) -> dict[str, Any]:
    """Merge the three layers and run cross-section consistency checks."""
    defaults = default_config()
    cfg = defaults
    if config_path is not None:
        file_cfg = load_yaml(config_path)
        _check_unknown(file_cfg, defaults)
        cfg = merge_nested(cfg, file_cfg)
    for key, value in parse_overrides(overrides):
        _check_unknown({key.split(".")[0]: {}}, defaults)
        try:
            set_nested(cfg, key, value)
        except TypeError as e:
            raise ConfigError(f"--set {key}: {e}") from e
    _cross_check(cfg)
    return cfg


def _cross_check(cfg: Mapping[str, Any]) -> None:
    data, codec, model = cfg["data"], cfg["codec"], cfg["model"]
    if data["hop"] != codec["hop"] or data["sample_rate"] != codec["sample_rate"]:
        raise ConfigError(
            f"data (sr {data['sample_rate']}, hop {data['hop']}) and codec "
            f"(sr {codec['sample_rate']}, hop {codec['hop']}) framing differ"
        )
    if model["n_q"] != codec["n_q"]:
        raise ConfigError(f"model.n_q={model['n_q']} but codec.n_q={codec['n_q']}")
    if model["codebook_size"] != codec["codebook_size"]:
        raise ConfigError(
            f"model.codebook_size={model['codebook_size']} but codec.codebook_size={codec['codebook_size']}"
        )


def dump_config(cfg: Mapping[str, Any]) -> str:
    return yaml.safe_dump(_plain(cfg), sort_keys=False, default_flow_style=False)


def _plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def cache_dir() -> Path | None:
    value = os.environ.get(CACHE_ENV)
    return Path(value) if value else None
