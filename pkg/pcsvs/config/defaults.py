"""Built-in run configuration; YAML files and --set flags layer on top."""

from __future__ import annotations

import copy
from typing import Any

from pcsvs.codec.model import CodecConfig
from pcsvs.codec.train import CODEC_TRAIN_DEFAULTS
from pcsvs.model.config import ModelConfig
from pcsvs.model.sampling import SamplingConfig
from pcsvs.model.train import MODEL_TRAIN_DEFAULTS
from pcsvs.prompts.pipeline import RANGE_THRESHOLDS_HZ, VOLUME_BANDS
from pcsvs.text.finetune import FINETUNE_DEFAULTS

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": None,
    "device": None,
    "paths": {
        "singing_manifest": None,
        "speech_manifest": None,
        "work_dir": "runs",
        "data_dir": None,
        "codec": None,
        "checkpoint": None,
        "encoder_checkpoint": None,
        "gender_classifier": None,
        "keywords": None,
        "templates": None,
        "eval_templates": None,
    },
    "data": {
        "sample_rate": 24000,
        "hop": 480,
        "f0_method": "pyin",
        "workers": 1,
        "strict": False,
    },
    "data_mix": {
        "singing_hours": None,
        "speech_hours": None,
        "weights": None,
    },
    "codec": CodecConfig().to_dict(),
    "codec_train": dict(CODEC_TRAIN_DEFAULTS),
    "model": ModelConfig().to_dict(),
    "train": dict(MODEL_TRAIN_DEFAULTS),
    "prompts": {
        "p1": 0.05,
        "p2": 0.05,
        "volume_bands": {k: list(v) for k, v in VOLUME_BANDS.items()},
        "range_thresholds": dict(RANGE_THRESHOLDS_HZ),
    },
    "prompt_encoder": {
        "backend": "toy",
        "pooled": False,
        "width": 128,
    },
    "finetune": {**FINETUNE_DEFAULTS, "n_pairs": 2000, "n_heldout": 300},
    "sampling": SamplingConfig().to_dict(),
    "eval": {
        "f0_method": "pyin",
        "n_items": None,
    },
    "hooks": {
        "loss_window": 50,
        "timing": True,
    },
    "toy": {
        "n_utterances": 200,
        "n_eval": 40,
        "eval_seed": 1000,
    },
}


def default_config() -> dict[str, Any]:
    return copy.deepcopy(DEFAULT_CONFIG)
