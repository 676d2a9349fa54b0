"""
prepare-data: manifests -> validated, capped, tabulated corpus in paths.data_dir.

Writes
    records.jsonl     selected UtteranceRecords (absolute paths)
    phonemes.json     PhonemeTable symbols
    summary.json      counts and hours per corpus kind, rejections
    gender.joblib     gender classifier fitted on the selection (when both genders occur)
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from pcsvs.adapters.f0 import extract_f0
from pcsvs.errors import ConfigError, DataError
from pcsvs.features.manifest import (UtteranceRecord, build_phoneme_table,
                                     ingest_corpus)
from pcsvs.features.mixing import select_by_hours
from pcsvs.features.regulate import PhonemeTable
from pcsvs.metrics.gender import LogMelGenderClassifier
from pcsvs.prompts.labels import ABSENT
from pcsvs.utils.io import (PathLike, atomic_open, read_jsonl, read_wav,
                            write_f0, write_json, write_jsonl)

from .runs import seed_of

logger = logging.getLogger(__name__)

RECORDS_FILE = "records.jsonl"
PHONEMES_FILE = "phonemes.json"
SUMMARY_FILE = "summary.json"
GENDER_FILE = "gender.joblib"
MAX_CLASSIFIER_ITEMS = 400


def fill_missing_f0(
    manifest: PathLike,
    out_dir: PathLike,
    *,
    method: str = "pyin",
    hop: int = 480,
) -> Path:
    """
    Copy a manifest into out_dir with absolute paths, extracting an F0 sidecar
    for every row whose `f0` is missing. Returns the rewritten manifest.
    """
    src = Path(manifest)
    out = Path(out_dir)
    base = src.parent.resolve()
    rows = read_jsonl(src)
    n_extracted = 0
    for row in rows:
        for key in ("audio", "phn", "f0"):
            if row.get(key):
                p = Path(row[key])
                row[key] = str(p if p.is_absolute() else base / p)
        if row.get("f0") and Path(row["f0"]).is_file():
            continue
        if "id" not in row or "audio" not in row:
            continue
        try:
            audio, sr = read_wav(row["audio"])
        except DataError as e:
            logger.warning("cannot extract F0 for %s: %s", row["id"], e)
            continue
        f0_path = out / "f0" / f"{row['id']}.f0"
        f0_path.parent.mkdir(parents=True, exist_ok=True)
        write_f0(f0_path, extract_f0(audio, sr, hop=hop, method=method))
        row["f0"] = str(f0_path)
        n_extracted += 1
    if n_extracted:
        logger.info("extracted %d missing F0 sidecars with %s", n_extracted, method)
    target = out / f"{src.stem}.resolved.jsonl"
    write_jsonl(target, rows)
    return target


def fit_gender_classifier(
    records: list[UtteranceRecord], *, hop: int, seed: int = 0
) -> LogMelGenderClassifier | None:
    labelled = [r for r in records if r.gender != ABSENT]
    if len({r.gender for r in labelled}) < 2:
        logger.warning("gender classifier not fitted: the corpus lacks one of the genders")
        return None
    rng = np.random.default_rng(seed)
    if len(labelled) > MAX_CLASSIFIER_ITEMS:
        labelled = [labelled[int(i)] for i in sorted(rng.choice(len(labelled), MAX_CLASSIFIER_ITEMS, replace=False))]
    audios, genders = [], []
    for r in labelled:
        audio, _ = read_wav(r.audio_path)
        audios.append(audio)
        genders.append(r.gender)
    sr = labelled[0].sample_rate
    return LogMelGenderClassifier(hop=hop, seed=seed).fit(audios, sr, genders)


def prepare_data(
    cfg: Mapping[str, Any],
    *,
    manifests: Mapping[str, PathLike | None] | None = None,
) -> dict[str, Any]:
    paths, data = cfg["paths"], cfg["data"]
    if not paths.get("data_dir"):
        raise ConfigError("paths.data_dir is not set")
    out = Path(paths["data_dir"])
    out.mkdir(parents=True, exist_ok=True)
    sources = dict(manifests) if manifests is not None else {
        "singing": paths.get("singing_manifest"),
        "speech": paths.get("speech_manifest"),
    }
    seed = seed_of(cfg)

    records: list[UtteranceRecord] = []
    rejected: list[DataError] = []
    for kind, manifest in sources.items():
        if manifest is None:
            continue
        resolved = fill_missing_f0(manifest, out, method=data["f0_method"], hop=data["hop"])
        records.extend(
            ingest_corpus(
                resolved,
                kind,
                hop=data["hop"],
                sample_rate=data["sample_rate"],
                strict=data["strict"],
                rejected=rejected,
                workers=data["workers"],
            )
        )
    if not records:
        raise DataError("no utterance survived ingestion")

    mix = cfg["data_mix"]
    selected = select_by_hours(
        records,
        {"singing": mix["singing_hours"], "speech": mix["speech_hours"]},
        np.random.default_rng(seed),
    )
    if not selected:
        raise DataError("data_mix caps leave no utterance")
    table = build_phoneme_table(selected)

    write_jsonl(out / RECORDS_FILE, [r.to_dict() for r in selected])
    write_json(out / PHONEMES_FILE, {"symbols": table.to_list()})
    summary: dict[str, Any] = {
        "n_records": len(selected),
        "n_rejected": len(rejected),
        "n_phonemes": len(table),
        "kinds": {},
    }
    for kind in sorted({r.corpus_kind for r in selected}):
        pool = [r for r in selected if r.corpus_kind == kind]
        summary["kinds"][kind] = {
            "utterances": len(pool),
            "hours": sum(r.duration_sec for r in pool) / 3600.0,
        }

    classifier = fit_gender_classifier(selected, hop=data["hop"], seed=seed)
    if classifier is not None:
        classifier.save(out / GENDER_FILE)
        summary["gender_classifier"] = str(out / GENDER_FILE)
    write_json(out / SUMMARY_FILE, summary)
    if rejected:
        with atomic_open(out / "rejected.txt") as fh:
            fh.writelines(f"{e}\n" for e in rejected)
    logger.info("prepared %d utterances (%d rejected) into %s", len(selected), len(rejected), out)
    return summary


def load_prepared(data_dir: PathLike) -> tuple[list[UtteranceRecord], PhonemeTable]:
    d = Path(data_dir)
    if not (d / RECORDS_FILE).is_file():
        raise DataError(f"{d} holds no prepared corpus; run prepare-data first")
    records = [UtteranceRecord.from_dict(row) for row in read_jsonl(d / RECORDS_FILE)]
    with open(d / PHONEMES_FILE, encoding="utf-8") as fh:
        table = PhonemeTable.from_list(json.load(fh)["symbols"])
    return records, table
