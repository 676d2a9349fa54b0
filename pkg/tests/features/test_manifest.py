import json

import numpy as np
import pytest

from pcsvs.errors import DataError, InvalidInputError
from pcsvs.features.manifest import (UtteranceRecord, build_phoneme_table,
                                     ingest_corpus)
from pcsvs.utils.io import read_jsonl, write_f0, write_wav


def _utterance(tmp_path, utt="u1", n_frames=10, f0_frames=None):
    write_wav(tmp_path / f"{utt}.wav", np.zeros(n_frames * 480, dtype=np.float32), 24000)
    write_f0(tmp_path / f"{utt}.f0", np.full(f0_frames or n_frames, 200.0))
    return {
        "id": utt,
        "audio": f"{utt}.wav",
        "f0": f"{utt}.f0",
        "gender": "female",
        "phonemes": ["sil", "a"],
        "durations": [0.04, (n_frames - 2) / 50.0],
    }


def _manifest(tmp_path, rows):
    path = tmp_path / "m.jsonl"
    path.write_text("".join(json.dumps(r) + "\n" for r in rows))
    return path


def test_ingest_toy_corpus(toy_corpus, toy_records):
    rows = read_jsonl(toy_corpus)
    assert [r.utt_id for r in toy_records] == [r["id"] for r in rows]
    rec = toy_records[0]
    assert rec.corpus_kind == "singing"
    assert rec.sample_rate == 24000
    assert abs(len(rec.frames(480)) - rec.num_frames(480)) <= 2
    assert abs(rec.load_f0().shape[0] - rec.num_frames(480)) <= 2


def test_record_dict_round_trip(toy_records):
    rec = toy_records[1]
    assert UtteranceRecord.from_dict(json.loads(json.dumps(rec.to_dict()))) == rec


def test_inline_phonemes_and_relative_paths(tmp_path):
    records = ingest_corpus(_manifest(tmp_path, [_utterance(tmp_path)]), "singing", strict=True)
    assert records[0].phonemes == ("sil", "a")
    assert records[0].audio_path == str(tmp_path / "u1.wav")
    assert records[0].duration_sec == pytest.approx(0.2)


def test_invalid_rows_are_rejected_with_diagnostics(tmp_path):
    good = _utterance(tmp_path, "good")
    no_f0 = {**_utterance(tmp_path, "nof0"), "f0": None}
    bad_gender = {**_utterance(tmp_path, "g"), "gender": "robot"}
    short_f0 = _utterance(tmp_path, "short", n_frames=10, f0_frames=4)
    no_phonemes = {k: v for k, v in _utterance(tmp_path, "nophn").items() if k != "phonemes"}
    rejected: list = []
    records = ingest_corpus(
        _manifest(tmp_path, [good, no_f0, bad_gender, short_f0, no_phonemes, good]),
        "singing",
        rejected=rejected,
    )
    assert [r.utt_id for r in records] == ["good"]
    assert [e.utterance for e in rejected] == ["nof0", "g", "short", "nophn", "good"]
    assert "duplicate" in str(rejected[-1])


def test_strict_ingestion_raises_first_rejection(tmp_path):
    row = {**_utterance(tmp_path), "durations": [0.04, 1.0]}
    with pytest.raises(DataError) as ei:
        ingest_corpus(_manifest(tmp_path, [row]), "singing", strict=True)
    assert ei.value.utterance == "u1"


def test_kind_conflict_and_sample_rate_check(tmp_path):
    row = {**_utterance(tmp_path), "kind": "speech"}
    with pytest.raises(DataError):
        ingest_corpus(_manifest(tmp_path, [row]), "singing", strict=True)
    with pytest.raises(DataError):
        ingest_corpus(_manifest(tmp_path, [_utterance(tmp_path)]), "singing",
                      sample_rate=16000, strict=True)
    with pytest.raises(InvalidInputError):
        ingest_corpus(_manifest(tmp_path, []), "humming")
    with pytest.raises(DataError):
        ingest_corpus(tmp_path / "missing.jsonl", "singing")


def test_parallel_ingestion_keeps_manifest_order(toy_corpus, toy_records):
    parallel = ingest_corpus(toy_corpus, "singing", workers=4)
    assert parallel == toy_records


def test_build_phoneme_table(toy_records):
    table = build_phoneme_table(toy_records)
    assert "sil" in table
    assert all(p in table for r in toy_records for p in r.phonemes)
