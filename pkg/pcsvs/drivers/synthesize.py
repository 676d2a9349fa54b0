"""
synthesize: prompt + melody + lyrics -> waveform.

Every synthesized file `x.wav` comes with `x.units` (the generated unit grid)
and `x.json` (prompt, intended labels, the sampled range factor, timing).
Batch mode (`--manifest`) draws prompts from the held-out evaluation
templates and writes `eval.jsonl`, the input of `evaluate`.
"""

from __future__ import annotations

import dataclasses
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from pcsvs.codec.model import ToyCodec
from pcsvs.codec.units import write_units
from pcsvs.errors import ConfigError, DecodingError, InvalidInputError
from pcsvs.features.manifest import FRAME_TOLERANCE, ingest_corpus
from pcsvs.features.regulate import read_phoneme_file, regulate
from pcsvs.model.layout import build_sequence
from pcsvs.model.sampling import SamplingConfig, infer
from pcsvs.model.train import LoadedCheckpoint, load_checkpoint
from pcsvs.ops.pitch import melody_tokens
from pcsvs.prompts.bank import KeywordBank
from pcsvs.prompts.labels import ATTRIBUTES, AttributeLabels
from pcsvs.prompts.pipeline import assemble_prompt, infer_labels
from pcsvs.text.encoder import encode_prompt
from pcsvs.text.finetune import random_labels
from pcsvs.utils.io import (PathLike, read_f0, write_json, write_jsonl,
                            write_wav)

from .encoder import load_prompt_assets
from .runs import seed_of

logger = logging.getLogger(__name__)

EVAL_MANIFEST = "eval.jsonl"


def parse_labels(text: str) -> AttributeLabels:
    """"gender=female,volume=high" -> AttributeLabels."""
    values: dict[str, str] = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, value = part.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in ATTRIBUTES:
            raise ConfigError(f"--labels expects attr=category pairs over {ATTRIBUTES}, got {part!r}")
        values[key] = value.strip()
    try:
        return AttributeLabels.from_mapping(values)
    except InvalidInputError as e:
        raise ConfigError(f"--labels: {e}") from e


def fit_frames(ids: np.ndarray, n_frames: int) -> np.ndarray:
    """Crop or edge-pad frame-level phoneme ids to the melody length."""
    if abs(ids.shape[0] - n_frames) > FRAME_TOLERANCE:
        raise InvalidInputError(f"lyrics span {ids.shape[0]} frames but the melody has {n_frames}")
    if ids.shape[0] >= n_frames:
        return ids[:n_frames]
    return np.pad(ids, (0, n_frames - ids.shape[0]), mode="edge")


@dataclass
class SynthesisResult:
    audio: np.ndarray
    sample_rate: int
    units: np.ndarray
    range_factor: int | None
    prompt: str
    labels: AttributeLabels
    seconds: float
    codebook_size: int

    @property
    def n_frames(self) -> int:
        return int(self.units.shape[0])

    @property
    def duration_sec(self) -> float:
        return self.audio.shape[0] / self.sample_rate

    def sidecar(self) -> dict[str, Any]:
        return {
            "prompt": self.prompt,
            "labels": self.labels.to_dict(),
            "range_factor": self.range_factor,
            "n_frames": self.n_frames,
            "duration_sec": self.duration_sec,
            "sample_rate": self.sample_rate,
            "generation_sec": self.seconds,
        }


class Synthesizer:
    def __init__(
        self,
        checkpoint: LoadedCheckpoint,
        codec: ToyCodec,
        *,
        sampling: SamplingConfig | None = None,
        bank: KeywordBank | None = None,
    ) -> None:
        config = checkpoint.model.config
        if codec.config.n_q != config.n_q or codec.config.codebook_size != config.codebook_size:
            raise ConfigError("codec and transformer checkpoint disagree on n_q or codebook size")
        self.checkpoint = checkpoint
        self.codec = codec
        self.sampling = sampling or SamplingConfig()
        self.bank = bank

    @classmethod
    def from_config(cls, cfg: Mapping[str, Any]) -> "Synthesizer":
        bank, _, _ = load_prompt_assets(cfg)
        sampling = SamplingConfig.from_dict(cfg["sampling"])
        logger.info("sampling: %s", sampling.to_dict())
        return cls(
            load_checkpoint(cfg["paths"]["checkpoint"]),
            ToyCodec.load(cfg["paths"]["codec"]),
            sampling=sampling,
            bank=bank,
        )

    def frame_inputs(
        self, phonemes: Sequence[str], durations: Sequence[float], f0: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        f0 = np.asarray(f0, dtype=np.float64)
        frame_rate = self.codec.config.frame_rate
        ids = regulate(phonemes, durations, frame_rate, table=self.checkpoint.table).phoneme_ids
        melody = melody_tokens(f0, rescale=self.checkpoint.model.config.rescale_melody)
        return fit_frames(ids, f0.shape[0]), melody

    def synthesize(
        self,
        prompt: str,
        phonemes: Sequence[str],
        durations: Sequence[float],
        f0: np.ndarray,
        *,
        labels: AttributeLabels | None = None,
        seed: int | None = None,
    ) -> SynthesisResult:
        model = self.checkpoint.model
        ids, melody = self.frame_inputs(phonemes, durations, f0)
        embedding = encode_prompt(prompt, self.checkpoint.encoder)
        prefix = build_sequence(embedding, ids, melody, config=model.config)
        sampling = self.sampling if seed is None else dataclasses.replace(self.sampling, seed=seed)
        result = infer(model, embedding, prefix, sampling)
        if labels is None:
            labels = infer_labels(prompt, self.bank) if self.bank is not None else AttributeLabels()
        return SynthesisResult(
            audio=self.codec.decode(result.units),
            sample_rate=self.codec.config.sample_rate,
            units=result.units,
            range_factor=result.range_factor,
            prompt=prompt,
            labels=labels,
            seconds=result.seconds,
            codebook_size=self.codec.config.codebook_size,
        )


def write_result(out: PathLike, result: SynthesisResult) -> dict[str, Any]:
    """Write wav, units and JSON sidecar next to each other; returns the sidecar."""
    wav = Path(out)
    write_wav(wav, result.audio, result.sample_rate)
    write_units(wav.with_suffix(".units"), result.units, result.codebook_size)
    sidecar = {**result.sidecar(), "audio": wav.name, "units": wav.with_suffix(".units").name}
    write_json(wav.with_suffix(".json"), sidecar)
    return sidecar


def synthesize_one(
    cfg: Mapping[str, Any],
    *,
    prompt: str,
    melody: PathLike,
    lyrics: PathLike,
    out: PathLike,
    labels: str | None = None,
    synthesizer: Synthesizer | None = None,
) -> dict[str, Any]:
    synth = synthesizer or Synthesizer.from_config(cfg)
    phonemes, durations = read_phoneme_file(lyrics)
    result = synth.synthesize(
        prompt, phonemes, durations, read_f0(melody), labels=parse_labels(labels) if labels else None
    )
    sidecar = write_result(out, result)
    logger.info("wrote %s (%.2f s, range factor %s, labels %s)",
                out, result.duration_sec, result.range_factor, result.labels.describe())
    return sidecar


def synthesize_manifest(
    cfg: Mapping[str, Any],
    manifest: PathLike,
    out_dir: PathLike,
    *,
    synthesizer: Synthesizer | None = None,
    kind: str = "singing",
) -> Path:
    """
    Synthesize every utterance of a `kind` manifest with a random held-out prompt.

    Returns the evaluation manifest; rows carry the synthesized audio, the
    reference F0 and the intended labels. Items whose decoding hits the end
    token are skipped with a warning.
    """
    synth = synthesizer or Synthesizer.from_config(cfg)
    bank, _, held_out = load_prompt_assets(cfg)
    records = ingest_corpus(manifest, kind, hop=cfg["data"]["hop"])
    n_items = cfg["eval"].get("n_items")
    if n_items is not None:
        records = records[: int(n_items)]
    out = Path(out_dir)
    rng = np.random.default_rng(seed_of(cfg))
    rows = []
    for i, rec in enumerate(records):
        labels = random_labels(rng)
        sample = assemble_prompt(labels, bank, held_out, rng)
        try:
            result = synth.synthesize(
                sample.sentence, rec.phonemes, rec.durations, rec.load_f0(),
                labels=labels, seed=synth.sampling.seed + i,
            )
        except DecodingError as e:
            logger.warning("%s: %s; skipped", rec.utt_id, e)
            continue
        sidecar = write_result(out / "wav" / f"{rec.utt_id}.wav", result)
        rows.append(
            {
                "id": rec.utt_id,
                "corpus_kind": rec.corpus_kind,
                "audio": f"wav/{rec.utt_id}.wav",
                "f0_ref": rec.f0_path,
                "labels": labels.to_dict(),
                "prompt": sample.sentence,
                "template_id": sample.template_id,
                "range_factor": sidecar["range_factor"],
            }
        )
    target = out / EVAL_MANIFEST
    write_jsonl(target, rows)
    logger.info("synthesized %d/%d utterances into %s", len(rows), len(records), target)
    return target
