from __future__ import annotations

from .bank import (KeywordBank, PromptTemplate, check_disjoint,
                   load_keyword_bank, load_templates)
from .labels import ABSENT, ATTRIBUTES, CATEGORIES, AttributeLabels
from .pipeline import (RANGE_THRESHOLDS_HZ, VOLUME_BANDS, PromptFetcher,
                       PromptSample, assemble_prompt, categorize,
                       categorize_range, categorize_volume, drop_labels,
                       infer_labels, rescale_volume_augment)

__all__ = [
    "ABSENT",
    "ATTRIBUTES",
    "CATEGORIES",
    "AttributeLabels",
    "KeywordBank",
    "PromptTemplate",
    "PromptSample",
    "PromptFetcher",
    "VOLUME_BANDS",
    "RANGE_THRESHOLDS_HZ",
    "load_keyword_bank",
    "load_templates",
    "check_disjoint",
    "categorize",
    "categorize_volume",
    "categorize_range",
    "drop_labels",
    "assemble_prompt",
    "rescale_volume_augment",
    "infer_labels",
]
