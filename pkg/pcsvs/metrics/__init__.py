from __future__ import annotations

from .accuracy import (RANGE_DECAY, VOLUME_DECAY, EvalItem, EvalReport,
                       evaluate_batch, range_band, score_item, soft_accuracy)
from .gender import GenderClassifier, LogMelGenderClassifier, gender_classify
from .pitch import FFE_THRESHOLD, ffe, rffe

__all__ = [
    "FFE_THRESHOLD",
    "RANGE_DECAY",
    "VOLUME_DECAY",
    "EvalItem",
    "EvalReport",
    "GenderClassifier",
    "LogMelGenderClassifier",
    "evaluate_batch",
    "ffe",
    "gender_classify",
    "range_band",
    "rffe",
    "score_item",
    "soft_accuracy",
]
