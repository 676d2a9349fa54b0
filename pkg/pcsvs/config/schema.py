"""
Declarative checks on a resolved RunConfig.

Each command validates the shared requirements plus its own list before doing
any work; violations surface as RequirementError (exit code 2).
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Mapping, Sequence

from pcsvs.utils.requirements import Requirement, check_requirements


def _prob(v: Any) -> bool:
    return isinstance(v, (int, float)) and 0.0 <= float(v) <= 1.0


def _cap(v: Any) -> bool:
    return v is None or (isinstance(v, (int, float)) and v >= 0)


def _exists(v: Any) -> bool:
    return v is not None and Path(str(v)).exists()


RUN_CONFIG_REQUIREMENTS: tuple[Requirement, ...] = (
    Requirement("config", "prompts.p1", predicate=_prob, message="prompts.p1 must lie in [0, 1]"),
    Requirement("config", "prompts.p2", predicate=_prob, message="prompts.p2 must lie in [0, 1]"),
    Requirement("config", "data.hop", type=int, predicate=lambda v: v > 0),
    Requirement("config", "data.sample_rate", type=int, predicate=lambda v: v > 0),
    Requirement("config", "data_mix.singing_hours", predicate=_cap, message="hour caps must be >= 0 or null"),
    Requirement("config", "data_mix.speech_hours", predicate=_cap, message="hour caps must be >= 0 or null"),
    Requirement("config", "codec.hop", predicate=lambda v: v > 0),
    Requirement("config", "model.hidden", type=int, predicate=lambda v: v > 0),
    Requirement("config", "sampling.temperature", predicate=lambda v: v > 0),
    Requirement("config", "prompt_encoder.backend", type=str),
)

SEED_REQUIRED = Requirement(
    "config", "seed", type=int, message="train runs need an integer seed (set seed: in the config or --set seed=N)"
)


def path_exists(path: str) -> Requirement:
    return Requirement("config", path, predicate=_exists, message=f"{path} must name an existing file")


COMMAND_REQUIREMENTS: dict[str, tuple[Requirement, ...]] = {
    "prepare-data": (path_exists("paths.singing_manifest"), Requirement("config", "paths.data_dir", type=str)),
    "train-codec": (SEED_REQUIRED, path_exists("paths.data_dir"), Requirement("config", "paths.codec", type=str)),
    "train-model": (
        SEED_REQUIRED,
        path_exists("paths.data_dir"),
        path_exists("paths.codec"),
        Requirement("config", "paths.checkpoint", type=str),
    ),
    "finetune-encoder": (SEED_REQUIRED, Requirement("config", "paths.encoder_checkpoint", type=str)),
    "synthesize": (path_exists("paths.checkpoint"), path_exists("paths.codec")),
    "evaluate": (),
    "encode": (path_exists("paths.codec"),),
    "decode": (path_exists("paths.codec"),),
    "make-toy-corpus": (),
    "toy-benchmark": (SEED_REQUIRED,),
}


def validate_run_config(cfg: Mapping[str, Any], command: str | None = None, extra: Sequence[Requirement] = ()) -> None:
    reqs = RUN_CONFIG_REQUIREMENTS + COMMAND_REQUIREMENTS.get(command or "", ()) + tuple(extra)
    check_requirements(reqs, config=cfg)
