from __future__ import annotations

from .defaults import DEFAULT_CONFIG, default_config
from .loader import (CACHE_ENV, cache_dir, dump_config, load_yaml,
                     parse_overrides, resolve_config)
from .schema import (COMMAND_REQUIREMENTS, RUN_CONFIG_REQUIREMENTS,
                     validate_run_config)

__all__ = [
    "CACHE_ENV",
    "COMMAND_REQUIREMENTS",
    "DEFAULT_CONFIG",
    "RUN_CONFIG_REQUIREMENTS",
    "cache_dir",
    "default_config",
    "dump_config",
    "load_yaml",
    "parse_overrides",
    "resolve_config",
    "validate_run_config",
]
