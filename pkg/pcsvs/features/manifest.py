"""
Corpus manifests and utterance records.

A manifest is a JSON-lines file, one utterance per line:

    {"id": "utt0001", "audio": "wav/utt0001.wav", "f0": "f0/utt0001.f0",
     "gender": "female", "phn": "phn/utt0001.phn"}

Phonemes come either inline ("phonemes" + "durations") or from a .phn file
("phn"). Relative paths resolve against the manifest's directory. Singing and
speech manifests share this schema; the corpus kind is supplied at ingestion.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Literal, Mapping, Sequence

import numpy as np

from pcsvs.errors import DataError, InvalidInputError
from pcsvs.features.regulate import (PhonemeFrameSequence, PhonemeTable,
                                     frame_counts, read_phoneme_file, regulate)
from pcsvs.ops.signal import frame_count
from pcsvs.prompts.labels import ABSENT, CATEGORIES
from pcsvs.utils.io import PathLike, read_f0, read_jsonl, wav_num_samples

logger = logging.getLogger(__name__)

CorpusKind = Literal["singing", "speech"]
CORPUS_KINDS: tuple[str, ...] = ("singing", "speech")
FRAME_TOLERANCE = 2


@dataclass(frozen=True)
class UtteranceRecord:
    utt_id: str
    audio_path: str
    phonemes: tuple[str, ...]
    durations: tuple[float, ...]
    f0_path: str
    gender: str
    corpus_kind: str
    sample_rate: int
    num_samples: int

    @property
    def duration_sec(self) -> float:
        return self.num_samples / self.sample_rate

    def num_frames(self, hop: int) -> int:
        return frame_count(self.num_samples, hop)

    def frames(self, hop: int, table: PhonemeTable | None = None) -> PhonemeFrameSequence:
        return regulate(self.phonemes, self.durations, self.sample_rate / hop, table=table)

    def load_f0(self) -> np.ndarray:
        return read_f0(self.f0_path)

    def to_dict(self) -> dict[str, Any]:
        row = asdict(self)
        row["phonemes"] = list(self.phonemes)
        row["durations"] = list(self.durations)
        return row

    @classmethod
    def from_dict(cls, row: Mapping[str, Any]) -> "UtteranceRecord":
        return cls(
            utt_id=str(row["utt_id"]),
            audio_path=str(row["audio_path"]),
            phonemes=tuple(row["phonemes"]),
            durations=tuple(float(d) for d in row["durations"]),
            f0_path=str(row["f0_path"]),
            gender=str(row["gender"]),
            corpus_kind=str(row["corpus_kind"]),
            sample_rate=int(row["sample_rate"]),
            num_samples=int(row["num_samples"]),
        )


def _resolve(base: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base / p


def _record_from_row(
    row: Mapping[str, Any],
    base: Path,
    kind: str,
    hop: int,
    sample_rate: int | None,
) -> UtteranceRecord:
    utt = str(row.get("id", "?"))
    if "id" not in row or "audio" not in row:
        raise DataError("row needs 'id' and 'audio'", utterance=utt)
    if row.get("kind", kind) != kind:
        raise DataError(f"row kind {row['kind']!r} conflicts with corpus kind {kind!r}", utterance=utt)

    gender = row.get("gender") or ABSENT
    if gender != ABSENT and gender not in CATEGORIES["gender"]:
        raise DataError(f"unknown gender {gender!r}", utterance=utt)

    if "phn" in row:
        try:
            phonemes, durations = read_phoneme_file(_resolve(base, row["phn"]))
        except OSError as e:
            raise DataError(f"cannot read phoneme file: {e}", utterance=utt) from e
        except InvalidInputError as e:
            raise DataError(str(e), utterance=utt) from e
    elif "phonemes" in row and "durations" in row:
        phonemes, durations = list(row["phonemes"]), [float(d) for d in row["durations"]]
    else:
        raise DataError("row has neither 'phn' nor 'phonemes'/'durations'", utterance=utt)
    if len(phonemes) != len(durations):
        raise DataError(f"{len(phonemes)} phonemes but {len(durations)} durations", utterance=utt)

    if not row.get("f0"):
        raise DataError("missing F0 sidecar reference", utterance=utt)
    f0_path = _resolve(base, row["f0"])
    if not f0_path.is_file():
        raise DataError(f"F0 sidecar not found: {f0_path}", utterance=utt)

    audio_path = _resolve(base, row["audio"])
    n_samples, sr = wav_num_samples(audio_path)
    if sample_rate is not None and sr != sample_rate:
        raise DataError(f"sample rate {sr} Hz, expected {sample_rate} Hz", utterance=utt)

    n_audio = frame_count(n_samples, hop)
    try:
        n_dur = int(frame_counts(durations, sr / hop).sum())
    except InvalidInputError as e:
        raise DataError(str(e), utterance=utt) from e
    if abs(n_dur - n_audio) > FRAME_TOLERANCE:
        raise DataError(
            f"phoneme durations span {n_dur} frames but audio has {n_audio}", utterance=utt
        )
    n_f0 = read_f0(f0_path).shape[0]
    if abs(n_f0 - n_audio) > FRAME_TOLERANCE:
        raise DataError(f"F0 sidecar has {n_f0} frames but audio has {n_audio}", utterance=utt)

    return UtteranceRecord(
        utt_id=utt,
        audio_path=str(audio_path),
        phonemes=tuple(phonemes),
        durations=tuple(durations),
        f0_path=str(f0_path),
        gender=gender,
        corpus_kind=kind,
        sample_rate=sr,
        num_samples=n_samples,
    )


def ingest_corpus(
    manifest: PathLike,
    kind: str,
    *,
    hop: int = 480,
    sample_rate: int | None = None,
    strict: bool = False,
    rejected: list[DataError] | None = None,
    workers: int = 1,
) -> list[UtteranceRecord]:
    """
    Parse and validate a manifest into UtteranceRecords, in manifest order.

    Invalid rows are rejected with a logged diagnostic (and appended to
    `rejected` when given); strict=True raises the first rejection instead.
    """
    if kind not in CORPUS_KINDS:
        raise InvalidInputError(f"corpus kind must be one of {CORPUS_KINDS}, got {kind!r}")
    path = Path(manifest)
    if not path.is_file():
        raise DataError(f"manifest not found: {path}")
    rows = read_jsonl(path)
    base = path.parent

    def one(row: Mapping[str, Any]) -> UtteranceRecord | DataError:
        try:
            return _record_from_row(row, base, kind, hop, sample_rate)
        except DataError as e:
            return e

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, rows))
    else:
        results = [one(r) for r in rows]

    records: list[UtteranceRecord] = []
    seen: set[str] = set()
    for res in results:
        if isinstance(res, UtteranceRecord) and res.utt_id in seen:
            res = DataError("duplicate utterance id", utterance=res.utt_id)
        if isinstance(res, DataError):
            if strict:
                raise res
            logger.warning("rejected: %s", res)
            if rejected is not None:
                rejected.append(res)
            continue
        seen.add(res.utt_id)
        records.append(res)
    logger.info("ingested %d/%d %s utterances from %s", len(records), len(rows), kind, path)
    return records


def build_phoneme_table(records: Sequence[UtteranceRecord]) -> PhonemeTable:
    return PhonemeTable.build([r.phonemes for r in records])
