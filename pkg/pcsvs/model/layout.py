"""
Single-sequence layout for the multi-scale transformer.

Conditions and targets are concatenated into one sequence of slots, one slot
per global-transformer step, each slot holding n_q positions:

    prompt(P) <sep> phoneme(T) <sep> melody(T) <sep> range(1) <sep> acoustic(T)

Every non-acoustic item fills its slot with n_q copies of the same token
(prompt slots carry the PROMPT id; their vectors are injected at embedding
time). Acoustic slot t holds the unit of codebook c at position c. The loss
mask is true exactly on the range and acoustic slots.

Built without units (inference mode) the sequence ends at the separator after
the melody and the loss mask is all false.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from pcsvs.errors import InvalidInputError
from pcsvs.model.config import (
    PAD,
    PROMPT,
    SEP_MELODY,
    SEP_PHONEME,
    SEP_PROMPT,
    SEP_RANGE,
    ModelConfig,
)
from pcsvs.ops.pitch import clamp_pitch_tokens

logger = logging.getLogger(__name__)

# (segment, separator that follows it)
SEGMENT_ORDER: tuple[tuple[str, int | None], ...] = (
    ("prompt", SEP_PROMPT),
    ("phoneme", SEP_PHONEME),
    ("melody", SEP_MELODY),
    ("range_factor", SEP_RANGE),
    ("acoustic", None),
)
TARGET_SEGMENTS = ("range_factor", "acoustic")


@dataclass(frozen=True)
class TokenLayoutSequence:
    tokens: np.ndarray  # (S, n_q) int64
    segments: Mapping[str, tuple[int, int]]  # name -> half-open slot span
    loss_mask: np.ndarray  # (S, n_q) bool
    n_q: int
    prompt_len: int = field(default=0)

    def __post_init__(self) -> None:
        if self.tokens.ndim != 2 or self.tokens.shape[1] != self.n_q:
            raise InvalidInputError(f"tokens must be (slots, {self.n_q}), got {self.tokens.shape}")
        if self.loss_mask.shape != self.tokens.shape:
            raise InvalidInputError("loss mask shape differs from tokens")
        acoustic = self.segments.get("acoustic")
        repeated = np.ones(len(self.tokens), dtype=bool)
        if acoustic is not None:
            repeated[acoustic[0]:acoustic[1]] = False
        bad = np.flatnonzero(repeated & np.any(self.tokens != self.tokens[:, :1], axis=1))
        if bad.size:
            raise InvalidInputError(
                f"non-acoustic slot {int(bad[0])} does not repeat one token {self.n_q} times"
            )
        expected = np.zeros_like(self.loss_mask)
        for name in TARGET_SEGMENTS:
            if name in self.segments:
                s, e = self.segments[name]
                expected[s:e] = True
        if not np.array_equal(expected, self.loss_mask):
            raise InvalidInputError("loss mask must cover exactly the range_factor and acoustic spans")

    @property
    def n_slots(self) -> int:
        return int(self.tokens.shape[0])

    @property
    def n_positions(self) -> int:
        return int(self.tokens.size)

    @property
    def is_training(self) -> bool:
        return "acoustic" in self.segments

    def span(self, name: str) -> tuple[int, int]:
        if name not in self.segments:
            raise KeyError(f"segment {name!r} not in layout (have {sorted(self.segments)})")
        return self.segments[name]

    def position_span(self, name: str) -> tuple[int, int]:
        s, e = self.span(name)
        return s * self.n_q, e * self.n_q

    def segment_tokens(self, name: str) -> np.ndarray:
        """Per-slot token ids; (T, n_q) for acoustic, (T,) otherwise."""
        s, e = self.span(name)
        block = self.tokens[s:e]
        return block if name == "acoustic" else block[:, 0]


def _require_1d(name: str, values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def build_sequence(
    prompt: int | object,
    phonemes: np.ndarray,
    melody: np.ndarray,
    range_factor: int | None = None,
    units: np.ndarray | None = None,
    *,
    config: ModelConfig,
) -> TokenLayoutSequence:
    """
    Lay out one utterance.

    prompt is a prompt length or anything with a length (a PromptEmbedding).
    phonemes are frame-level phoneme ids (T,), melody integer Hz (T,), units
    (T, n_q) codebook indices. Pass range_factor and units for training,
    neither for inference. With config.use_range_factor false the range slot
    and its separator are left out and range_factor is ignored.
    """
    n_q = config.n_q
    vocab = config.vocab
    prompt_len = prompt if isinstance(prompt, int) else len(prompt)  # type: ignore[arg-type]
    if prompt_len < 1:
        raise InvalidInputError("prompt must have at least one vector")

    phonemes = _require_1d("phoneme", phonemes)
    melody = _require_1d("melody", melody)
    T = phonemes.shape[0]
    if melody.shape[0] != T:
        raise InvalidInputError(f"segment lengths differ: phoneme={T}, melody={melody.shape[0]}")
    if T == 0:
        raise InvalidInputError("phoneme and melody segments are empty")

    training = units is not None
    if training:
        units = np.asarray(units, dtype=np.int64)
        if units.ndim != 2 or units.shape[1] != n_q:
            raise InvalidInputError(f"acoustic units must be (T, {n_q}), got {units.shape}")
        if units.shape[0] != T:
            raise InvalidInputError(f"segment lengths differ: phoneme={T}, acoustic={units.shape[0]}")
        if config.use_range_factor and range_factor is None:
            raise InvalidInputError("training layout needs a range factor")
    elif range_factor is not None and config.use_range_factor:
        raise InvalidInputError("range factor given without acoustic units")

    if np.any(phonemes < 0) or np.any(phonemes >= config.phoneme_vocab):
        raise InvalidInputError(f"phoneme ids must lie in [0, {config.phoneme_vocab})")
    melody, n_clamped = clamp_pitch_tokens(melody, config.max_pitch_hz)
    if n_clamped:
        logger.warning("clamped %d melody frames to %d Hz", n_clamped, config.max_pitch_hz)

    blocks: list[np.ndarray] = []
    segments: dict[str, tuple[int, int]] = {}
    cursor = 0

    def put(name: str, column: np.ndarray | None, grid: np.ndarray | None = None) -> None:
        nonlocal cursor
        block = grid if grid is not None else np.repeat(column[:, None], n_q, axis=1)  # type: ignore[index]
        segments[name] = (cursor, cursor + block.shape[0])
        blocks.append(block)
        cursor += block.shape[0]

    def sep(token: int) -> None:
        nonlocal cursor
        blocks.append(np.full((1, n_q), token, dtype=np.int64))
        cursor += 1

    put("prompt", np.full(prompt_len, PROMPT, dtype=np.int64))
    sep(SEP_PROMPT)
    put("phoneme", phonemes + vocab.phoneme_offset)
    sep(SEP_PHONEME)
    put("melody", melody + vocab.pitch_offset)
    sep(SEP_MELODY)
    if training:
        if config.use_range_factor:
            rf, _ = clamp_pitch_tokens(np.array([int(range_factor)]), config.max_pitch_hz)  # type: ignore[arg-type]
            if rf[0] <= 0:
                raise InvalidInputError(f"range factor must be positive, got {range_factor}")
            put("range_factor", rf + vocab.pitch_offset)
            sep(SEP_RANGE)
        if np.any(units < 0) or np.any(units >= config.codebook_size):  # type: ignore[operator]
            raise InvalidInputError(f"acoustic units must lie in [0, {config.codebook_size})")
        offsets = vocab.acoustic_offset + np.arange(n_q) * config.codebook_size
        put("acoustic", None, grid=units + offsets[None, :])  # type: ignore[operator]

    tokens = np.concatenate(blocks, axis=0)
    mask = np.zeros(tokens.shape, dtype=bool)
    for name in TARGET_SEGMENTS:
        if name in segments:
            s, e = segments[name]
            mask[s:e] = True
    return TokenLayoutSequence(tokens=tokens, segments=segments, loss_mask=mask, n_q=n_q, prompt_len=prompt_len)


def decode_segments(layout: TokenLayoutSequence, config: ModelConfig) -> dict[str, np.ndarray | int]:
    """Recover the raw inputs (ids, Hz, units) from a layout."""
    vocab = config.vocab
    out: dict[str, np.ndarray | int] = {"prompt": layout.segments["prompt"][1] - layout.segments["prompt"][0]}
    out["phoneme"] = layout.segment_tokens("phoneme") - vocab.phoneme_offset
    out["melody"] = layout.segment_tokens("melody") - vocab.pitch_offset
    if "range_factor" in layout.segments:
        out["range_factor"] = int(layout.segment_tokens("range_factor")[0] - vocab.pitch_offset)
    if "acoustic" in layout.segments:
        offsets = vocab.acoustic_offset + np.arange(layout.n_q) * config.codebook_size
        out["acoustic"] = layout.segment_tokens("acoustic") - offsets[None, :]
    return out


def pad_layouts(layouts: list[TokenLayoutSequence]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Right-pad to a batch: tokens (B, S, n_q), loss mask, prompt-slot mask (B, S)."""
    if not layouts:
        raise InvalidInputError("cannot batch zero layouts")
    n_q = layouts[0].n_q
    S = max(l.n_slots for l in layouts)
    tokens = np.full((len(layouts), S, n_q), PAD, dtype=np.int64)
    loss = np.zeros(tokens.shape, dtype=bool)
    prompt = np.zeros((len(layouts), S), dtype=bool)
    for b, l in enumerate(layouts):
        if l.n_q != n_q:
            raise InvalidInputError("layouts in one batch must share n_q")
        tokens[b, :l.n_slots] = l.tokens
        loss[b, :l.n_slots] = l.loss_mask
        s, e = l.span("prompt")
        prompt[b, s:e] = True
    return tokens, loss, prompt
