"""
Codec training and measurement.

Training reconstructs random log-mel crops through the full RVQ stack with
quantizer dropout (a random number of active levels per batch), so decodes
from the first few levels alone stay meaningful. Codebooks start from k-means
on the initial encoder latents and then follow EMA updates.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np
import torch
import torch.nn.functional as F

from pcsvs.codec.model import CodecConfig, ToyCodec
from pcsvs.core.api import Batch, Hook, Params, State, init_fn, run_fn
from pcsvs.errors import ConfigError
from pcsvs.middleware import with_grad_clip, with_nan_guard
from pcsvs.utils.requirements import Requirement, requires
from pcsvs.utils.struct import take

logger = logging.getLogger(__name__)

MIN_UTTERANCES = 10

CODEC_TRAIN_DEFAULTS: dict[str, Any] = {
    "steps": 600,
    "batch_size": 8,
    "segment_frames": 32,
    "lr": 2e-3,
    "commit_weight": 0.25,
    "quantizer_dropout": True,
    "holdout_fraction": 0.1,
    "grad_clip": 1.0,
}


@dataclass
class CodecReport:
    initial_holdout_loss: float
    final_holdout_loss: float
    utilization: list[float]
    mel_distortion: dict[int, float]
    n_train: int
    n_holdout: int
    losses: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {
            "initial_holdout_loss": self.initial_holdout_loss,
            "final_holdout_loss": self.final_holdout_loss,
            "utilization": self.utilization,
            "mel_distortion": {str(k): v for k, v in self.mel_distortion.items()},
            "n_train": self.n_train,
            "n_holdout": self.n_holdout,
        }


def split_holdout(
    items: Sequence[Any], fraction: float, rng: np.random.Generator
) -> tuple[list[Any], list[Any]]:
    n_hold = max(1, int(round(len(items) * fraction)))
    order = rng.permutation(len(items))
    hold = [items[i] for i in sorted(order[:n_hold])]
    train = [items[i] for i in sorted(order[n_hold:])]
    return train, hold


@torch.no_grad()
def reconstruction_loss(codec: ToyCodec, feats: Sequence[np.ndarray], n_q: int | None = None) -> float:
    """Mean squared log-mel error of a full encode/decode pass (eval mode)."""
    was_training = codec.training
    codec.eval()
    try:
        total, count = 0.0, 0
        for f in feats:
            mel = torch.as_tensor(f, dtype=torch.float32).unsqueeze(0)
            recon, _, _ = codec(mel, n_q)
            total += float(F.mse_loss(recon, mel, reduction="sum"))
            count += f.size
    finally:
        codec.train(was_training)
    return total / max(count, 1)


def mel_distortion(codec: ToyCodec, feats: Sequence[np.ndarray], n_q: int) -> float:
    """Mean absolute log-mel error when decoding from the first n_q levels."""
    total, count = 0.0, 0
    for f in feats:
        units = codec.encode_features(f, n_q)
        recon = codec.decode_features(units)
        total += float(np.abs(recon - f).sum())
        count += f.size
    return total / max(count, 1)


def utilization(codec: ToyCodec, feats: Sequence[np.ndarray], n_q: int | None = None) -> list[float]:
    """Fraction of codebook entries used at least once, per level."""
    n_q = codec.config.n_q if n_q is None else n_q
    used = np.zeros((n_q, codec.config.codebook_size), dtype=bool)
    for f in feats:
        units = codec.encode_features(f, n_q)
        for c in range(n_q):
            used[c, units[:, c]] = True
    return [float(u.mean()) for u in used]


def _crop_stream(feats: Sequence[np.ndarray], batch_size: int, segment: int, rng: np.random.Generator):
    def make(k: int) -> Batch:
        crops = []
        for _ in range(batch_size):
            f = feats[int(rng.integers(len(feats)))]
            if f.shape[0] <= segment:
                crop = np.pad(f, ((0, segment - f.shape[0]), (0, 0)), mode="edge")
            else:
                start = int(rng.integers(f.shape[0] - segment + 1))
                crop = f[start:start + segment]
            crops.append(crop)
        return {"mel": torch.as_tensor(np.stack(crops), dtype=torch.float32)}

    return make


@requires(Requirement("batch", "mel"), Requirement("state", "codec"), Requirement("state", "optimizer"))
def codec_step(state: State, batch: Batch, params: Params) -> tuple[State, dict[str, Any]]:
    codec, opt, rng = take(state, "codec", "optimizer", "rng")
    tcfg = params["codec_train"]
    n_levels = codec.config.n_levels
    n_active = int(rng.integers(1, n_levels + 1)) if tcfg["quantizer_dropout"] else n_levels
    codec.train()
    opt.zero_grad()
    recon, _, commit = codec(batch["mel"], n_active)
    loss = F.mse_loss(recon, batch["mel"]) + tcfg["commit_weight"] * commit
    loss.backward()
    opt.step()
    codec.trained_steps += 1
    return state, {"loss": float(loss.detach()), "n_active": n_active}


def train_codec(
    feats: Sequence[np.ndarray],
    config: CodecConfig,
    *,
    train_cfg: Mapping[str, Any] | None = None,
    seed: int = 0,
    hooks: tuple[Hook, ...] = (),
) -> tuple[ToyCodec, CodecReport]:
    """
    Train a ToyCodec on per-utterance log-mel features (each (T, n_mels)).

    Returns the trained codec (eval mode) and a report with held-out loss
    before and after training, codebook utilization and the mel distortion
    for 1..n_q levels.
    """
    if len(feats) < MIN_UTTERANCES:
        raise ConfigError(
            f"codec training needs >= {MIN_UTTERANCES} utterances, got {len(feats)}"
        )
    tcfg = {**CODEC_TRAIN_DEFAULTS, **(train_cfg or {})}
    state, params = init_fn({"seed": seed, "codec_train": tcfg})
    rng = np.random.default_rng(seed)
    train, hold = split_holdout(list(feats), tcfg["holdout_fraction"], rng)

    codec = ToyCodec(config)
    codec.fit_normalization(np.concatenate(train, axis=0))
    with torch.no_grad():
        latents = torch.cat([codec.embed(torch.as_tensor(f).unsqueeze(0))[0] for f in train])
    codec.rvq.init_kmeans(latents, seed=seed)
    initial = reconstruction_loss(codec, hold)

    state.update(
        codec=codec,
        optimizer=torch.optim.Adam(codec.parameters(), lr=tcfg["lr"]),
        rng=rng,
    )
    step = with_nan_guard(with_grad_clip(codec_step, max_norm=tcfg["grad_clip"]))
    stream = _crop_stream(train, tcfg["batch_size"], tcfg["segment_frames"], rng)
    state, run_report = run_fn(state, params, stream, step=step, n_steps=tcfg["steps"], hooks=hooks)

    codec.eval()
    final = reconstruction_loss(codec, hold)
    report = CodecReport(
        initial_holdout_loss=initial,
        final_holdout_loss=final,
        utilization=utilization(codec, train),
        mel_distortion={n: mel_distortion(codec, hold, n) for n in range(1, config.n_q + 1)},
        n_train=len(train),
        n_holdout=len(hold),
        losses=list(run_report["losses"]),
    )
    logger.info(
        "codec trained: held-out loss %.4f -> %.4f, utilization %s, mel distortion %s",
        initial, final,
        [round(u, 3) for u in report.utilization],
        {k: round(v, 4) for k, v in report.mel_distortion.items()},
    )
    return codec, report
