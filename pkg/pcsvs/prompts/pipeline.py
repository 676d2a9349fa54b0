"""
Prompt generation and fetching: categorize -> (augment) -> drop -> assemble.

All randomness comes from an explicit numpy Generator, so every operation is
deterministic given its seed and safe to run with per-worker streams.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.ops.pitch import voiced_mean
from pcsvs.ops.signal import rms
from pcsvs.prompts.bank import KeywordBank, PromptTemplate
from pcsvs.prompts.labels import (ABSENT, ATTRIBUTES, CATEGORIES, PLACEHOLDERS,
                                  AttributeLabels)

logger = logging.getLogger(__name__)

# Closed amplitude-RMS bands; values between bands carry no volume label
VOLUME_BANDS: dict[str, tuple[float, float]] = {
    "low": (0.02, 0.04),
    "medium": (0.07, 0.10),
    "high": (0.16, 0.20),
}
# Average voiced F0 at or below the threshold is "low"
RANGE_THRESHOLDS_HZ: dict[str, float] = {"male": 125.0, "female": 305.0}
SILENCE_RMS = 1e-6


@dataclass(frozen=True)
class PromptSample:
    labels: AttributeLabels
    sentence: str
    template_id: str
    keyword_choices: Mapping[str, str] = field(default_factory=dict)


def categorize_volume(
    value: float, bands: Mapping[str, tuple[float, float]] = VOLUME_BANDS
) -> str:
    if value < 0:
        raise InvalidInputError(f"rms must be >= 0, got {value}")
    for category, (lo, hi) in bands.items():
        if lo <= value <= hi:
            return category
    return ABSENT


def categorize_range(
    avg_f0: float, gender: str, thresholds: Mapping[str, float] = RANGE_THRESHOLDS_HZ
) -> str:
    if gender not in thresholds:
        raise InvalidInputError(f"vocal range is undefined for gender {gender!r}")
    if avg_f0 <= 0:
        raise InvalidInputError(f"average F0 must be positive, got {avg_f0}")
    return "low" if avg_f0 <= thresholds[gender] else "high"


def categorize(
    waveform: np.ndarray,
    f0: np.ndarray,
    gender: str,
    *,
    bands: Mapping[str, tuple[float, float]] = VOLUME_BANDS,
    thresholds: Mapping[str, float] = RANGE_THRESHOLDS_HZ,
) -> AttributeLabels:
    """Full labels for one utterance from its audio, F0 and annotated gender."""
    volume = categorize_volume(rms(waveform), bands)
    vocal_range = ABSENT
    if gender != ABSENT and np.any(np.asarray(f0) > 0):
        vocal_range = categorize_range(voiced_mean(f0), gender, thresholds)
    return AttributeLabels(gender=gender, volume=volume, vocal_range=vocal_range)


def _present(values: Mapping[str, str]) -> list[str]:
    return [a for a in ATTRIBUTES if values[a] != ABSENT]


def drop_labels(
    labels: AttributeLabels, p1: float, p2: float, rng: np.random.Generator
) -> AttributeLabels:
    """
    Randomly drop up to two present labels.

    Two sequential, independent draws (p1 then p2) each drop one uniformly
    chosen present label. Losing gender also removes vocal_range. A drop that
    would leave nothing is reverted.
    """
    if not (0.0 <= p1 <= 1.0 and 0.0 <= p2 <= 1.0):
        raise InvalidInputError(f"drop probabilities must lie in [0, 1], got {p1}, {p2}")
    current = labels.to_dict()
    for p in (p1, p2):
        if rng.random() >= p:
            continue
        present = _present(current)
        if not present:
            break
        snapshot = dict(current)
        current[present[int(rng.integers(len(present)))]] = ABSENT
        if current["gender"] == ABSENT:
            current["vocal_range"] = ABSENT
        if not _present(current):
            current = snapshot
    return AttributeLabels(**current)


def assemble_prompt(
    labels: AttributeLabels,
    bank: KeywordBank,
    templates: Sequence[PromptTemplate],
    rng: np.random.Generator,
) -> PromptSample:
    present = labels.present()
    categories = labels.to_dict()
    pool = [t for t in templates if t.matches(present, categories)]
    if not pool:
        raise ConfigError(
            f"no template covers attribute combination {sorted(present)} ({labels.describe()})"
        )
    template = pool[int(rng.integers(len(pool)))]
    sentence = template.text
    choices: dict[str, str] = {}
    for attr in template.placeholders:
        words = bank.words(attr, categories[attr])
        word = words[int(rng.integers(len(words)))]
        choices[attr] = word
        sentence = sentence.replace(PLACEHOLDERS[attr], word)
    return PromptSample(
        labels=labels, sentence=sentence, template_id=template.id, keyword_choices=choices
    )


def rescale_volume_augment(
    waveform: np.ndarray,
    target_category: str,
    rng: np.random.Generator,
    bands: Mapping[str, tuple[float, float]] = VOLUME_BANDS,
) -> tuple[np.ndarray, float]:
    """
    Scale a waveform so its RMS lands uniformly inside a volume band.

    A draw that would clip (|sample| > 1) is redrawn from the band's lower
    half; if even the band's lower edge clips the input cannot be placed.
    """
    x = np.asarray(waveform, dtype=np.float64)
    current = rms(x)
    if current <= SILENCE_RMS:
        raise InvalidInputError("cannot rescale a silent waveform")
    if target_category not in bands:
        raise InvalidInputError(f"unknown volume category {target_category!r}")
    lo, hi = bands[target_category]
    peak = float(np.max(np.abs(x)))
    for upper in (hi, (lo + hi) / 2.0, lo):
        target = float(rng.uniform(lo, upper)) if upper > lo else lo
        scale = target / current
        if peak * scale <= 1.0:
            out = x * scale
            return out.astype(np.asarray(waveform).dtype, copy=False), rms(out)
    raise InvalidInputError(
        f"waveform too peaky for {target_category} volume: peak/rms = {peak / current:.1f}"
    )


def infer_labels(sentence: str, bank: KeywordBank) -> AttributeLabels:
    """
    Recover intended labels from a free-form prompt by keyword lookup.

    An attribute is labeled only when keywords of exactly one category occur.
    Matching is on word boundaries, so "female-sung" still yields gender.
    """
    lowered = sentence.lower()
    found: dict[str, str] = {}
    for attr in ATTRIBUTES:
        hits = set()
        for cat in CATEGORIES[attr]:
            for word in bank.words(attr, cat):
                if re.search(rf"\b{re.escape(word)}\b", lowered):
                    hits.add(cat)
        if len(hits) == 1:
            found[attr] = hits.pop()
    if "gender" not in found:
        found.pop("vocal_range", None)
    return AttributeLabels.from_mapping(found)


class PromptFetcher:
    """
    Training-time prompt flow for one data item (one rng stream per worker).

    fetch() categorizes the utterance, optionally rescales it into a random
    volume band, drops labels and assembles a sentence.
    """

    def __init__(
        self,
        bank: KeywordBank,
        templates: Sequence[PromptTemplate],
        *,
        p1: float = 0.05,
        p2: float = 0.05,
        augment_prob: float = 0.0,
        bands: Mapping[str, tuple[float, float]] = VOLUME_BANDS,
        thresholds: Mapping[str, float] = RANGE_THRESHOLDS_HZ,
        seed: int = 0,
    ) -> None:
        self.bank = bank
        self.templates = list(templates)
        self.p1, self.p2 = p1, p2
        self.augment_prob = augment_prob
        self.bands = dict(bands)
        self.thresholds = dict(thresholds)
        self.rng = np.random.default_rng(seed)

    def fetch(
        self, waveform: np.ndarray, f0: np.ndarray, gender: str
    ) -> tuple[np.ndarray, PromptSample, bool]:
        """Returns (waveform, prompt, augmented)."""
        augmented = False
        if self.augment_prob > 0 and self.rng.random() < self.augment_prob and rms(waveform) > SILENCE_RMS:
            target = list(self.bands)[int(self.rng.integers(len(self.bands)))]
            try:
                waveform, _ = rescale_volume_augment(waveform, target, self.rng, self.bands)
                augmented = True
            except InvalidInputError as e:
                logger.debug("volume augmentation skipped: %s", e)
        labels = categorize(
            waveform, f0, gender, bands=self.bands, thresholds=self.thresholds
        )
        if not labels.present():
            raise InvalidInputError("utterance has no usable attribute label")
        dropped = drop_labels(labels, self.p1, self.p2, self.rng)
        return waveform, assemble_prompt(dropped, self.bank, self.templates, self.rng), augmented
