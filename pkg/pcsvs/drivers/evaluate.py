"""evaluate: evaluation manifest (as written by synthesize --manifest) -> EvalReport."""

from __future__ import annotations

import logging
from functools import partial
from pathlib import Path
from typing import Any, Mapping

from pcsvs.adapters.f0 import extract_f0
from pcsvs.errors import DataError
from pcsvs.metrics.accuracy import EvalItem, EvalReport, evaluate_batch
from pcsvs.metrics.gender import LogMelGenderClassifier
from pcsvs.prompts.labels import ABSENT, AttributeLabels
from pcsvs.utils.io import (PathLike, atomic_open, read_f0, read_jsonl,
                            read_wav, write_json)

from .prepare import GENDER_FILE
from .train import prompt_bands

logger = logging.getLogger(__name__)


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def load_eval_items(manifest: PathLike, *, n_items: int | None = None) -> list[EvalItem]:
    path = Path(manifest)
    if not path.is_file():
        raise DataError(f"evaluation manifest not found: {path}")
    rows = read_jsonl(path)
    if n_items is not None:
        rows = rows[:n_items]
    items = []
    for row in rows:
        utt = str(row.get("id", "?"))
        if "audio" not in row or "labels" not in row:
            raise DataError("evaluation row needs 'audio' and 'labels'", utterance=utt)
        audio, sr = read_wav(_resolve(path.parent, row["audio"]))
        items.append(
            EvalItem(
                utt_id=utt,
                audio=audio,
                sample_rate=sr,
                labels=AttributeLabels.from_mapping(row["labels"]),
                f0_syn=read_f0(_resolve(path.parent, row["f0_syn"])) if row.get("f0_syn") else None,
                f0_ref=read_f0(_resolve(path.parent, row["f0_ref"])) if row.get("f0_ref") else None,
            )
        )
    if not items:
        raise DataError(f"{path}: no evaluation rows")
    return items


def classifier_path(cfg: Mapping[str, Any]) -> Path | None:
    paths = cfg["paths"]
    if paths.get("gender_classifier"):
        return Path(paths["gender_classifier"])
    if paths.get("data_dir") and (Path(paths["data_dir"]) / GENDER_FILE).is_file():
        return Path(paths["data_dir"]) / GENDER_FILE
    return None


def run_evaluate(cfg: Mapping[str, Any], manifest: PathLike, report: PathLike | None = None) -> EvalReport:
    n_items = cfg["eval"].get("n_items")
    items = load_eval_items(manifest, n_items=None if n_items is None else int(n_items))
    classifier = None
    if any(i.labels.gender != ABSENT for i in items):
        path = classifier_path(cfg)
        if path is not None:
            classifier = LogMelGenderClassifier.load(path)
    bands, thresholds = prompt_bands(cfg)
    result = evaluate_batch(
        items,
        classifier=classifier,
        bands=bands,
        thresholds=thresholds,
        f0_fn=partial(_syn_f0, hop=int(cfg["data"]["hop"]), method=cfg["eval"]["f0_method"]),
    )
    table = result.to_table()
    logger.info("evaluation of %s\n%s", manifest, table)
    if report is not None:
        write_json(report, result.to_dict())
        with atomic_open(Path(report).with_suffix(".txt")) as fh:
            fh.write(table + "\n")
    return result


def _syn_f0(audio: Any, sample_rate: int, *, hop: int, method: str) -> Any:
    return extract_f0(audio, sample_rate, hop=hop, method=method)
