"""
Training examples and batches for the transformer.

An example is one utterance variant (the original, or a copy rescaled into a
random volume band) with its frame-aligned phoneme ids, F0 and codec units,
plus the full attribute labels measured on that variant. Prompts are redrawn
for every batch: labels are dropped and assembled into a fresh sentence.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, Mapping, Sequence

import numpy as np
import torch

from pcsvs.codec.model import ToyCodec
from pcsvs.errors import DataError, InvalidInputError
from pcsvs.features.manifest import UtteranceRecord
from pcsvs.features.mixing import MixedSampler
from pcsvs.features.regulate import PhonemeTable
from pcsvs.model.config import ModelConfig
from pcsvs.model.layout import build_sequence, pad_layouts
from pcsvs.ops.pitch import melody_tokens, voiced_mean
from pcsvs.ops.signal import rms, round_half_away
from pcsvs.prompts.bank import KeywordBank, PromptTemplate
from pcsvs.prompts.labels import AttributeLabels
from pcsvs.prompts.pipeline import (RANGE_THRESHOLDS_HZ, SILENCE_RMS,
                                    VOLUME_BANDS, assemble_prompt, categorize,
                                    drop_labels, rescale_volume_augment)
from pcsvs.text.encoder import PromptEncoder
from pcsvs.utils.io import read_wav

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingExample:
    utt_id: str
    corpus_kind: str
    phoneme_ids: np.ndarray  # (T,)
    f0: np.ndarray  # (T,)
    units: np.ndarray  # (T, n_q)
    labels: AttributeLabels
    augmented: bool = False

    @property
    def n_frames(self) -> int:
        return int(self.units.shape[0])


def align_frames(*arrays: np.ndarray) -> tuple[np.ndarray, ...]:
    """Crop frame-indexed arrays to their common length."""
    T = min(a.shape[0] for a in arrays)
    return tuple(a[:T] for a in arrays)


def build_examples(
    records: Sequence[UtteranceRecord],
    codec: ToyCodec,
    table: PhonemeTable,
    *,
    n_q: int,
    augment_copies: int = 0,
    bands: Mapping[str, tuple[float, float]] = VOLUME_BANDS,
    thresholds: Mapping[str, float] = RANGE_THRESHOLDS_HZ,
    seed: int = 0,
) -> list[TrainingExample]:
    """
    Encode every record (and `augment_copies` volume-rescaled copies) into
    TrainingExamples. Utterances without a voiced frame or without any usable
    label are skipped with a warning.
    """
    rng = np.random.default_rng(seed)
    hop = codec.config.hop
    out: list[TrainingExample] = []
    for rec in records:
        audio, sr = read_wav(rec.audio_path)
        f0 = rec.load_f0()
        if not np.any(f0 > 0):
            logger.warning("skipping %s: no voiced frame", rec.utt_id)
            continue
        phon = rec.frames(hop, table).phoneme_ids
        variants: list[tuple[np.ndarray, bool]] = [(audio, False)]
        for _ in range(augment_copies):
            if rms(audio) <= SILENCE_RMS:
                break
            target = list(bands)[int(rng.integers(len(bands)))]
            try:
                scaled, _ = rescale_volume_augment(audio, target, rng, bands)
            except InvalidInputError as e:
                logger.debug("augmentation of %s skipped: %s", rec.utt_id, e)
                continue
            variants.append((scaled, True))
        for wav, augmented in variants:
            labels = categorize(wav, f0, rec.gender, bands=bands, thresholds=thresholds)
            if not labels.present():
                logger.warning("skipping %s: no attribute label applies", rec.utt_id)
                continue
            units = codec.encode(wav, sr, n_q)
            p, f, u = align_frames(np.asarray(phon), f0, units)
            out.append(
                TrainingExample(
                    utt_id=rec.utt_id,
                    corpus_kind=rec.corpus_kind,
                    phoneme_ids=p.astype(np.int64),
                    f0=f.astype(np.float64),
                    units=u.astype(np.int64),
                    labels=labels,
                    augmented=augmented,
                )
            )
    if not out:
        raise DataError("no usable training examples")
    logger.info(
        "built %d training examples from %d utterances (%d augmented)",
        len(out), len(records), sum(e.augmented for e in out),
    )
    return out


def crop_example(ex: TrainingExample, max_frames: int, rng: np.random.Generator) -> TrainingExample:
    """Random window of at most max_frames frames that keeps a voiced frame."""
    if ex.n_frames <= max_frames:
        return ex
    voiced = np.flatnonzero(ex.f0 > 0)
    starts = rng.permutation(ex.n_frames - max_frames + 1)[:8]
    start = next(
        (int(s) for s in starts if np.any(ex.f0[s:s + max_frames] > 0)),
        int(min(voiced[0], ex.n_frames - max_frames)),
    )
    sl = slice(start, start + max_frames)
    return TrainingExample(
        utt_id=ex.utt_id,
        corpus_kind=ex.corpus_kind,
        phoneme_ids=ex.phoneme_ids[sl],
        f0=ex.f0[sl],
        units=ex.units[sl],
        labels=ex.labels,
        augmented=ex.augmented,
    )


class ModelBatcher:
    """
    Callable batch stream for run_fn: batch k draws examples through a
    MixedSampler, redraws their prompts and lays them out.
    """

    def __init__(
        self,
        examples: Sequence[TrainingExample],
        encoder: PromptEncoder,
        config: ModelConfig,
        *,
        bank: KeywordBank,
        templates: Sequence[PromptTemplate],
        batch_size: int = 8,
        max_frames: int = 256,
        p1: float = 0.05,
        p2: float = 0.05,
        kind_weights: Mapping[str, float] | None = None,
        seed: int = 0,
    ) -> None:
        self.examples = list(examples)
        self.encoder = encoder
        self.config = config
        self.bank = bank
        self.templates = list(templates)
        self.batch_size = batch_size
        self.max_frames = max_frames
        self.p1, self.p2 = p1, p2
        self.rng = np.random.default_rng(seed)
        self.sampler: MixedSampler[TrainingExample] = MixedSampler(
            self.examples, weights=kind_weights, seed=seed + 1
        )
        self._states = lru_cache(maxsize=8192)(self._backend_state)

    def _backend_state(self, sentence: str) -> tuple[torch.Tensor, torch.Tensor]:
        hidden, mask = self.encoder.backend_states([sentence])
        return hidden[0][mask[0]], mask[0][mask[0]]

    def prompt_for(self, labels: AttributeLabels) -> str:
        dropped = drop_labels(labels, self.p1, self.p2, self.rng)
        return assemble_prompt(dropped, self.bank, self.templates, self.rng).sentence

    def layout_inputs(self, ex: TrainingExample) -> tuple[np.ndarray, int]:
        melody = melody_tokens(ex.f0, rescale=self.config.rescale_melody)
        return melody, int(round_half_away(voiced_mean(ex.f0)))

    def __call__(self, k: int) -> dict[str, Any]:
        picked = [crop_example(ex, self.max_frames, self.rng) for ex in self.sampler.sample(self.batch_size)]
        sentences = [self.prompt_for(ex.labels) for ex in picked]
        states = [self._states(s) for s in sentences]
        layouts = []
        for ex, (hidden, _) in zip(picked, states):
            melody, range_factor = self.layout_inputs(ex)
            layouts.append(
                build_sequence(int(hidden.shape[0]), ex.phoneme_ids, melody, range_factor, ex.units, config=self.config)
            )
        tokens, loss_mask, prompt_mask = pad_layouts(layouts)
        L = max(int(h.shape[0]) for h, _ in states)
        width = states[0][0].shape[-1]
        prompt_hidden = torch.zeros(len(states), L, width)
        prompt_token_mask = torch.zeros(len(states), L, dtype=torch.bool)
        for b, (hidden, _) in enumerate(states):
            prompt_hidden[b, :hidden.shape[0]] = hidden
            prompt_token_mask[b, :hidden.shape[0]] = True
        return {
            "tokens": torch.as_tensor(tokens),
            "loss_mask": torch.as_tensor(loss_mask),
            "prompt_mask": torch.as_tensor(prompt_mask),
            "prompt_hidden": prompt_hidden,
            "prompt_token_mask": prompt_token_mask,
            "sentences": sentences,
            "utt_ids": [ex.utt_id for ex in picked],
        }
