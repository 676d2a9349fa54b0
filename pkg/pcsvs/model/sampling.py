"""
Autoregressive decoding and chain-rule scoring.

The output factorizes as P(range factor) * prod_t prod_c P(a_t^c | ...). Each
step draws from a restricted distribution: voiced pitch tokens for the range
factor, codebook c's unit ids (plus the end token when allowed) for position
c of an acoustic slot. The range slot's remaining n_q - 1 positions are
copies of the first and carry no probability mass of their own.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from time import perf_counter
from typing import Any, Mapping

import numpy as np
import torch

from pcsvs.errors import ConfigError, DecodingError, InvalidInputError, NotTrainedError
from pcsvs.model.config import END, SEP_RANGE, ModelConfig
from pcsvs.model.layout import TokenLayoutSequence, build_sequence, decode_segments
from pcsvs.model.transformer import MultiScaleTransformer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SamplingConfig:
    temperature: float = 0.8
    top_k: int = 16
    greedy: bool = False
    range_greedy: bool = True
    allow_end: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ConfigError(f"sampling.temperature must be > 0, got {self.temperature}")
        if self.top_k < 0:
            raise ConfigError(f"sampling.top_k must be >= 0 (0 disables), got {self.top_k}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SamplingConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown sampling keys: {sorted(unknown)}")
        return cls(**dict(data))


@dataclass
class InferenceResult:
    range_factor: int | None
    units: np.ndarray  # (T, n_q) int64
    seconds: float

    @property
    def n_frames(self) -> int:
        return int(self.units.shape[0])


def candidates(config: ModelConfig, kind: str, c: int = 0, *, allow_end: bool) -> torch.Tensor:
    """Token ids a step may emit: kind is "range" or "acoustic"."""
    vocab = config.vocab
    if kind == "range":
        lo, hi = vocab.pitch_range(voiced_only=True)
        return torch.arange(lo, hi)
    lo, hi = vocab.acoustic_range(c)
    ids = torch.arange(lo, hi)
    return torch.cat([ids, torch.tensor([END])]) if allow_end else ids


def _choose(
    logits: torch.Tensor,
    cands: torch.Tensor,
    *,
    greedy: bool,
    temperature: float,
    top_k: int,
    generator: torch.Generator,
) -> int:
    sub = logits[cands]
    if greedy:
        return int(cands[int(sub.argmax())])
    sub = sub / temperature
    if 0 < top_k < sub.numel():
        kth = torch.topk(sub, top_k).values[-1]
        sub = sub.masked_fill(sub < kth, float("-inf"))
    probs = torch.softmax(sub, dim=-1)
    return int(cands[int(torch.multinomial(probs, 1, generator=generator))])


def _prompt_tensor(prompt: Any, hidden: int) -> torch.Tensor:
    vectors = getattr(prompt, "vectors", prompt)
    vectors = torch.as_tensor(vectors, dtype=torch.float32)
    if vectors.ndim != 2 or vectors.shape[1] != hidden or vectors.shape[0] == 0:
        raise InvalidInputError(f"prompt vectors must be (L, {hidden}), got {tuple(vectors.shape)}")
    return vectors


def _prompt_mask(layout: TokenLayoutSequence, n_slots: int) -> torch.Tensor:
    mask = torch.zeros(1, n_slots, dtype=torch.bool)
    s, e = layout.span("prompt")
    mask[0, s:e] = True
    return mask


@torch.no_grad()
def infer(
    model: MultiScaleTransformer,
    prompt: Any,
    prefix: TokenLayoutSequence,
    sampling: SamplingConfig | None = None,
) -> InferenceResult:
    """
    Decode the range factor then T x n_q acoustic units, T = melody length.

    prompt is a PromptEmbedding or an (L, hidden) tensor matching the
    prefix's prompt span.
    """
    sampling = sampling or SamplingConfig()
    config = model.config
    if int(model.trained_steps) == 0:
        raise NotTrainedError("transformer has no training steps; train or load a checkpoint first")
    if prefix.is_training:
        raise InvalidInputError("inference needs a prefix built without range factor and units")
    vectors = _prompt_tensor(prompt, config.hidden)
    if vectors.shape[0] != prefix.prompt_len:
        raise InvalidInputError(f"prompt has {vectors.shape[0]} vectors, layout expects {prefix.prompt_len}")

    model.eval()
    device = next(model.parameters()).device
    vectors = vectors.to(device)[None]
    gen = torch.Generator().manual_seed(sampling.seed)
    n_q = config.n_q
    T = prefix.span("melody")[1] - prefix.span("melody")[0]
    tokens = torch.as_tensor(prefix.tokens, device=device)[None]
    t0 = perf_counter()

    def context() -> torch.Tensor:
        return model.next_context(tokens, vectors, _prompt_mask(prefix, tokens.shape[1]).to(device))

    range_factor = None
    if config.use_range_factor:
        logits = model.position_logits(context(), tokens.new_zeros(1, 0))[0].cpu()
        tok = _choose(
            logits,
            candidates(config, "range", allow_end=False),
            greedy=sampling.greedy or sampling.range_greedy,
            temperature=sampling.temperature,
            top_k=sampling.top_k,
            generator=gen,
        )
        range_factor = tok - config.vocab.pitch_offset
        extra = torch.tensor([[tok] * n_q, [SEP_RANGE] * n_q], device=device)
        tokens = torch.cat([tokens, extra[None]], dim=1)

    first_acoustic = tokens.shape[1]
    for t in range(T):
        ctx = context()
        partial = tokens.new_zeros(1, 0)
        for c in range(n_q):
            logits = model.position_logits(ctx, partial)[0].cpu()
            tok = _choose(
                logits,
                candidates(config, "acoustic", c, allow_end=sampling.allow_end),
                greedy=sampling.greedy,
                temperature=sampling.temperature,
                top_k=sampling.top_k,
                generator=gen,
            )
            if tok == END:
                raise DecodingError(
                    f"end token sampled at frame {t} of {T}, codebook {c}",
                    position=(first_acoustic + t) * n_q + c,
                )
            partial = torch.cat([partial, partial.new_tensor([[tok]])], dim=1)
        tokens = torch.cat([tokens, partial[:, None]], dim=1)

    seconds = perf_counter() - t0
    offsets = config.vocab.acoustic_offset + np.arange(n_q) * config.codebook_size
    units = tokens[0, first_acoustic:].cpu().numpy() - offsets[None, :]
    logger.info(
        "generated %d frames in %.2fs (%.1f frames/s)", T, seconds, T / seconds if seconds > 0 else float("inf")
    )
    return InferenceResult(range_factor=range_factor, units=units.astype(np.int64), seconds=seconds)


@torch.no_grad()
def sequence_log_prob(
    model: MultiScaleTransformer,
    prompt: Any,
    prefix: TokenLayoutSequence,
    range_factor: int | None,
    units: np.ndarray,
    *,
    sampling: SamplingConfig | None = None,
) -> float:
    """
    Chain-rule log-probability of a complete output, scored at temperature 1
    over the same restricted candidate sets infer draws from. The end token
    is part of the acoustic candidate sets only when sampling.allow_end is
    true (default here: false).
    """
    config = model.config
    allow_end = sampling.allow_end if sampling is not None else False
    raw = decode_segments(prefix, config)
    full = build_sequence(
        prefix.prompt_len, raw["phoneme"], raw["melody"], range_factor, units, config=config  # type: ignore[arg-type]
    )
    vectors = _prompt_tensor(prompt, config.hidden)[None]
    model.eval()
    tokens = torch.as_tensor(full.tokens)[None]
    logits = model(tokens, vectors, _prompt_mask(full, full.n_slots))[0]

    total = 0.0
    steps: list[tuple[int, int, torch.Tensor]] = []
    if "range_factor" in full.segments:
        s, _ = full.span("range_factor")
        steps.append((s, 0, candidates(config, "range", allow_end=False)))
    s, e = full.span("acoustic")
    for slot in range(s, e):
        for c in range(config.n_q):
            steps.append((slot, c, candidates(config, "acoustic", c, allow_end=allow_end)))
    for slot, c, cands in steps:
        logp = torch.log_softmax(logits[slot, c, cands].double(), dim=-1)
        target = int(tokens[0, slot, c])
        idx = (cands == target).nonzero()
        if idx.numel() == 0:
            raise InvalidInputError(f"token {target} at slot {slot} is outside the allowed set")
        total += float(logp[int(idx[0, 0])])
    return total
