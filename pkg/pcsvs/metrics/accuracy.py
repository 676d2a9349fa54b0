"""
Soft-margin attribute accuracy and batch evaluation.

A measured value inside its target band scores 100; outside, the score decays
as 100 * exp(-k * eps) with eps the distance to the nearest band edge.
Volume is measured as the RMS of the raw synthesized waveform, vocal range as
the mean voiced F0 of the synthesized audio against the gender's threshold
("high" is [threshold, inf), "low" is (0, threshold]).
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.metrics.gender import GenderClassifier
from pcsvs.metrics.pitch import rffe
from pcsvs.ops.pitch import voiced_mean
from pcsvs.ops.signal import rms
from pcsvs.prompts.labels import ABSENT, AttributeLabels
from pcsvs.prompts.pipeline import RANGE_THRESHOLDS_HZ, VOLUME_BANDS

logger = logging.getLogger(__name__)

VOLUME_DECAY: dict[str, float] = {"high": 10.0, "medium": 20.0, "low": 30.0}
RANGE_DECAY = 0.05
FRAME_TOLERANCE = 2


def soft_accuracy(value: float, band: tuple[float, float], k: float) -> float:
    lo, hi = band
    if lo > hi:
        raise InvalidInputError(f"band lower edge {lo} exceeds upper edge {hi}")
    if k <= 0:
        raise InvalidInputError(f"decay rate must be positive, got {k}")
    if lo <= value <= hi:
        return 100.0
    eps = lo - value if value < lo else value - hi
    return 100.0 * math.exp(-k * eps)


def range_band(category: str, gender: str, thresholds: Mapping[str, float] = RANGE_THRESHOLDS_HZ) -> tuple[float, float]:
    if gender not in thresholds:
        raise InvalidInputError(f"vocal range is undefined for gender {gender!r}")
    thr = thresholds[gender]
    return (thr, math.inf) if category == "high" else (0.0, thr)


@dataclass
class EvalItem:
    utt_id: str
    audio: np.ndarray
    sample_rate: int
    labels: AttributeLabels
    f0_syn: np.ndarray | None = None  # F0 measured on the synthesized audio
    f0_ref: np.ndarray | None = None  # reference melody F0


def _mean(values: Sequence[float]) -> float | None:
    return float(np.mean(values)) if values else None


@dataclass
class EvalReport:
    gender_female: float | None
    gender_male: float | None
    volume: float | None
    vocal_range: float | None
    rffe: float | None
    counts: dict[str, int]
    items: list[dict[str, Any]] = field(default_factory=list)
    by_attribute_count: dict[int, dict[str, float | None]] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "gender": {"female": self.gender_female, "male": self.gender_male},
            "volume": self.volume,
            "vocal_range": self.vocal_range,
            "rffe": self.rffe,
            "counts": dict(self.counts),
            "by_attribute_count": {str(k): v for k, v in sorted(self.by_attribute_count.items())},
            "items": list(self.items),
        }

    def to_table(self) -> str:
        def pct(v: float | None) -> str:
            return "-" if v is None else f"{v:.1f}"

        rows = [("all", self.gender_female, self.gender_male, self.volume, self.vocal_range, self.rffe)]
        for n, acc in sorted(self.by_attribute_count.items()):
            rows.append((f"{n} attr", acc.get("gender_female"), acc.get("gender_male"),
                         acc.get("volume"), acc.get("vocal_range"), acc.get("rffe")))
        lines = [f"{'prompts':<8} | {'Gender (F/M)':>13} | {'Volume':>6} | {'Range':>6} | {'R-FFE':>6}"]
        lines.append("-" * len(lines[0]))
        for name, gf, gm, vol, rng, ffe in rows:
            r = "-" if ffe is None else f"{ffe:.3f}"
            lines.append(f"{name:<8} | {pct(gf) + ' / ' + pct(gm):>13} | {pct(vol):>6} | {pct(rng):>6} | {r:>6}")
        lines.append(
            "items: " + ", ".join(f"{k}={v}" for k, v in sorted(self.counts.items()))
        )
        return "\n".join(lines)


def score_item(
    item: EvalItem,
    *,
    classifier: GenderClassifier | None,
    bands: Mapping[str, tuple[float, float]] = VOLUME_BANDS,
    thresholds: Mapping[str, float] = RANGE_THRESHOLDS_HZ,
) -> dict[str, Any]:
    """Per-item scores; attributes that cannot be scored are listed under "skipped"."""
    labels = item.labels
    out: dict[str, Any] = {"utt_id": item.utt_id, "n_attributes": len(labels.present()), "skipped": []}
    if labels.volume != ABSENT:
        value = rms(item.audio)
        out["rms"] = value
        out["volume"] = soft_accuracy(value, bands[labels.volume], VOLUME_DECAY[labels.volume])
    if labels.vocal_range != ABSENT:
        if item.f0_syn is None or not np.any(np.asarray(item.f0_syn) > 0):
            out["skipped"].append("vocal_range: synthesized audio has no voiced frame")
        else:
            avg = voiced_mean(item.f0_syn)
            out["avg_f0"] = avg
            out["vocal_range"] = soft_accuracy(avg, range_band(labels.vocal_range, labels.gender, thresholds), RANGE_DECAY)
    if labels.gender != ABSENT:
        predicted, confidence = classifier.predict(item.audio, item.sample_rate)  # type: ignore[union-attr]
        out["gender_pred"] = predicted
        out["gender_confidence"] = confidence
        out[f"gender_{labels.gender}"] = 100.0 if predicted == labels.gender else 0.0
    if item.f0_ref is None:
        out["skipped"].append("rffe: no reference F0")
    elif item.f0_syn is None:
        out["skipped"].append("rffe: no synthesized F0")
    else:
        syn, ref = np.asarray(item.f0_syn), np.asarray(item.f0_ref)
        if abs(syn.shape[0] - ref.shape[0]) > FRAME_TOLERANCE:
            out["skipped"].append(f"rffe: length {syn.shape[0]} vs reference {ref.shape[0]}")
        else:
            T = min(syn.shape[0], ref.shape[0])
            try:
                out["rffe"] = rffe(syn[:T], ref[:T])
            except InvalidInputError as e:
                out["skipped"].append(f"rffe: {e}")
    return out


METRIC_KEYS = ("gender_female", "gender_male", "volume", "vocal_range", "rffe")


def _aggregate(rows: Sequence[Mapping[str, Any]]) -> dict[str, float | None]:
    return {k: _mean([r[k] for r in rows if k in r]) for k in METRIC_KEYS}


def evaluate_batch(
    items: Sequence[EvalItem],
    *,
    classifier: GenderClassifier | None = None,
    bands: Mapping[str, tuple[float, float]] = VOLUME_BANDS,
    thresholds: Mapping[str, float] = RANGE_THRESHOLDS_HZ,
    f0_fn: Callable[[np.ndarray, int], np.ndarray] | None = None,
) -> EvalReport:
    """
    Score every item and average per attribute (order-independent).

    f0_fn(audio, sample_rate) fills in missing synthesized F0. A gender
    classifier is required when any item prompts gender.
    """
    if classifier is None and any(i.labels.gender != ABSENT for i in items):
        raise ConfigError("gender accuracy needs a trained gender classifier")
    rows = []
    for item in items:
        if item.f0_syn is None and f0_fn is not None:
            item = EvalItem(item.utt_id, item.audio, item.sample_rate, item.labels,
                            f0_fn(item.audio, item.sample_rate), item.f0_ref)
        row = score_item(item, classifier=classifier, bands=bands, thresholds=thresholds)
        for reason in row["skipped"]:
            logger.info("%s: skipped %s", item.utt_id, reason)
        rows.append(row)

    overall = _aggregate(rows)
    grouped: dict[int, list[Mapping[str, Any]]] = defaultdict(list)
    for r in rows:
        grouped[r["n_attributes"]].append(r)
    counts = {k: sum(1 for r in rows if k in r) for k in METRIC_KEYS}
    counts["items"] = len(rows)
    counts["skipped"] = sum(1 for r in rows if r["skipped"])
    return EvalReport(
        gender_female=overall["gender_female"],
        gender_male=overall["gender_male"],
        volume=overall["volume"],
        vocal_range=overall["vocal_range"],
        rffe=overall["rffe"],
        counts=counts,
        items=rows,
        by_attribute_count={n: _aggregate(g) for n, g in grouped.items()},
    )
