"""prepare-data -> train-codec -> train-model -> synthesize -> evaluate on a tiny toy setup."""

import json

import numpy as np
import pytest

from pcsvs.codec.units import read_units
from pcsvs.config import resolve_config
from pcsvs.drivers import (decode_files, encode_files, prepare_data,
                           run_evaluate, run_train_codec, run_train_model,
                           synthesize_manifest, synthesize_one)
from pcsvs.errors import ConfigError
from pcsvs.features.regulate import write_phoneme_file
from pcsvs.features.synthetic import make_toy_corpus
from pcsvs.utils.io import read_jsonl, read_wav, write_f0, write_jsonl

TINY = [
    "seed=0",
    "codec.n_mels=32",
    "codec.hidden=32",
    "codec.latent_dim=16",
    "codec.n_levels=4",
    "codec.n_q=2",
    "codec.codebook_size=16",
    "codec.griffin_lim_iters=4",
    "codec_train.steps=20",
    "codec_train.batch_size=4",
    "codec_train.segment_frames=24",
    "model.hidden=32",
    "model.global_heads=2",
    "model.local_heads=2",
    "model.global_layers=1",
    "model.local_layers=1",
    "model.n_q=2",
    "model.codebook_size=16",
    "model.phoneme_vocab=16",
    "model.max_pitch_hz=600",
    "train.steps=4",
    "train.batch_size=2",
    "train.max_frames=40",
    "prompt_encoder.width=16",
    "sampling.greedy=true",
    "sampling.allow_end=false",
    "eval.n_items=2",
]


def _lyrics(rec, directory):
    path = directory / f"{rec.utt_id}.phn"
    write_phoneme_file(path, rec.phonemes, rec.durations)
    return path


@pytest.fixture(scope="module")
def pipeline(toy_corpus, tmp_path_factory):
    root = tmp_path_factory.mktemp("pipeline")
    cfg = resolve_config(None, TINY + [
        f"paths.singing_manifest={toy_corpus}",
        f"paths.data_dir={root / 'data'}",
        f"paths.codec={root / 'codec.pt'}",
        f"paths.checkpoint={root / 'model.pt'}",
        f"paths.work_dir={root / 'runs'}",
    ])
    prepare_data(cfg)
    codec_report = run_train_codec(cfg)
    train_report = run_train_model(cfg)
    return cfg, root, codec_report, train_report


def test_training_reports(pipeline):
    cfg, root, codec_report, train_report = pipeline
    assert (root / "codec.pt").is_file()
    assert (root / "model.pt").is_file()
    assert train_report["n_examples"] >= 12
    assert train_report["checkpoint"] == str(root / "model.pt")
    assert json.dumps(codec_report)


def test_encode_decode_files(pipeline, toy_records, tmp_path):
    cfg, root, _, _ = pipeline
    [units_path] = encode_files(root / "codec.pt", [toy_records[0].audio_path], tmp_path)
    units, K = read_units(units_path)
    assert K == 16
    assert units.shape == (toy_records[0].num_frames(480), 2)
    [wav] = decode_files(root / "codec.pt", [units_path], tmp_path / "wav")
    audio, sr = read_wav(wav)
    assert sr == 24000
    assert audio.shape[0] == units.shape[0] * 480


def test_synthesize_one_writes_wav_units_and_sidecar(pipeline, toy_records, tmp_path):
    cfg, _, _, _ = pipeline
    rec = toy_records[1]
    melody = tmp_path / "melody.f0"
    write_f0(melody, rec.load_f0())
    out = tmp_path / "song.wav"
    sidecar = synthesize_one(cfg, prompt="Generate a song by a male singer.", melody=melody,
                             lyrics=_lyrics(rec, tmp_path), out=out, labels="gender=male")
    assert out.is_file() and out.with_suffix(".units").is_file()
    assert json.loads(out.with_suffix(".json").read_text()) == sidecar
    assert sidecar["labels"]["gender"] == "male"
    assert sidecar["n_frames"] == rec.num_frames(480)
    assert isinstance(sidecar["range_factor"], int)


def test_synthesize_without_labels_uses_keyword_lookup(pipeline, toy_records, tmp_path):
    cfg, _, _, _ = pipeline
    rec = toy_records[0]
    melody = tmp_path / "melody.f0"
    write_f0(melody, rec.load_f0())
    sidecar = synthesize_one(cfg, prompt="Generate a song by a lady singer.", melody=melody,
                             lyrics=_lyrics(rec, tmp_path), out=tmp_path / "a.wav")
    assert sidecar["labels"]["gender"] == "female"


def test_melody_lyrics_length_mismatch_is_rejected(pipeline, toy_records, tmp_path):
    cfg, _, _, _ = pipeline
    rec = toy_records[0]
    melody = tmp_path / "short.f0"
    write_f0(melody, rec.load_f0()[:-10])
    with pytest.raises(ValueError):
        synthesize_one(cfg, prompt="A song.", melody=melody, lyrics=_lyrics(rec, tmp_path), out=tmp_path / "x.wav")


def test_batch_synthesis_feeds_evaluation(pipeline, toy_corpus, tmp_path):
    cfg, _, _, _ = pipeline
    manifest = synthesize_manifest(cfg, toy_corpus, tmp_path / "synth")
    rows = read_jsonl(manifest)
    assert len(rows) == 2
    for row in rows:
        assert (tmp_path / "synth" / row["audio"]).is_file()
        assert row["template_id"]
    report = run_evaluate(cfg, manifest, tmp_path / "report.json")
    assert report.counts["items"] == 2
    assert (tmp_path / "report.txt").is_file()
    saved = json.loads((tmp_path / "report.json").read_text())
    assert len(saved["items"]) == 2
    for key in ("volume", "rffe"):
        value = saved[key]
        assert value is None or np.isfinite(value)


def test_batch_synthesis_reads_speech_manifests(pipeline, tmp_path):
    cfg, _, _, _ = pipeline
    manifest = make_toy_corpus(tmp_path / "speech", 2, seed=3, kind="speech")
    write_jsonl(manifest, [{**row, "kind": "speech"} for row in read_jsonl(manifest)])
    rows = read_jsonl(synthesize_manifest(cfg, manifest, tmp_path / "synth", kind="speech"))
    assert [row["corpus_kind"] for row in rows] == ["speech", "speech"]
    # speech rows do not ingest as singing
    assert read_jsonl(synthesize_manifest(cfg, manifest, tmp_path / "sung")) == []


def test_mismatched_model_and_codec_are_refused(pipeline, tmp_path):
    cfg, root, _, _ = pipeline
    bad = resolve_config(None, TINY + [
        "codec.codebook_size=8", "model.codebook_size=8",
        f"paths.data_dir={root / 'data'}", f"paths.codec={root / 'codec.pt'}",
        f"paths.checkpoint={tmp_path / 'm.pt'}",
    ])
    with pytest.raises(ConfigError):
        run_train_model(bad)
