"""
Transformer training and checkpoints.

Only the range-factor and acoustic positions carry loss; conditions (prompt,
phonemes, melody, separators) are context. The prompt-encoder backend stays
frozen (checked every step); its projection trains with the transformer.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np
import torch
import torch.nn.functional as F

from pcsvs.core.api import Batch, Hook, Params, State, init_fn, run_fn
from pcsvs.errors import ConfigError, DataError
from pcsvs.features.regulate import PhonemeTable
from pcsvs.middleware import (with_frozen_backend_check, with_grad_clip,
                              with_nan_guard, with_requirements_check)
from pcsvs.model.config import ModelConfig
from pcsvs.model.data import ModelBatcher
from pcsvs.model.transformer import MultiScaleTransformer
from pcsvs.text.backends import (backend_init_kwargs, parameter_checksum,
                                 resolve_backend)
from pcsvs.text.encoder import PromptEncoder
from pcsvs.utils.io import PathLike, atomic_path
from pcsvs.utils.requirements import Requirement, requires
from pcsvs.utils.struct import take

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 1

MODEL_TRAIN_DEFAULTS: dict[str, Any] = {
    "steps": 2000,
    "batch_size": 8,
    "lr": 3e-4,
    "weight_decay": 0.0,
    "grad_clip": 1.0,
    "max_frames": 256,
    "augment_copies": 1,
    "checkpoint_every": 0,
}


def masked_cross_entropy(logits: torch.Tensor, targets: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    """Mean cross-entropy over positions where mask is true."""
    if not bool(mask.any()):
        raise ConfigError("batch has no target positions: every loss-mask entry is false")
    return F.cross_entropy(logits[mask], targets[mask])


def compute_loss(model: MultiScaleTransformer, encoder: PromptEncoder, batch: Batch) -> torch.Tensor:
    vectors = encoder.project(batch["prompt_hidden"], batch["prompt_token_mask"])
    logits = model(batch["tokens"], vectors, batch["prompt_mask"])
    return masked_cross_entropy(logits, batch["tokens"], batch["loss_mask"])


@requires(
    Requirement("batch", "tokens"),
    Requirement("batch", "loss_mask"),
    Requirement("batch", "prompt_hidden"),
    Requirement("state", "model"),
    Requirement("state", "encoder"),
    Requirement("state", "optimizer"),
)
def train_step(state: State, batch: Batch, params: Params) -> tuple[State, dict[str, Any]]:
    model, encoder, opt = take(state, "model", "encoder", "optimizer")
    device = params["backend"]["device"]
    batch = {k: (v.to(device) if isinstance(v, torch.Tensor) else v) for k, v in batch.items()}
    model.train()
    opt.zero_grad()
    loss = compute_loss(model, encoder, batch)
    loss.backward()
    opt.step()
    model.trained_steps += 1
    return state, {"loss": float(loss.detach()), "n_targets": int(batch["loss_mask"].sum())}


@dataclass
class ModelTrainReport:
    n_steps: int
    final_loss: float
    smoothed_loss: float
    losses: list[float] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return {"n_steps": self.n_steps, "final_loss": self.final_loss, "smoothed_loss": self.smoothed_loss}


def train_model(
    batcher: ModelBatcher,
    *,
    train_cfg: Mapping[str, Any] | None = None,
    seed: int = 0,
    device: str | None = None,
    hooks: tuple[Hook, ...] = (),
    model: MultiScaleTransformer | None = None,
) -> tuple[MultiScaleTransformer, ModelTrainReport]:
    """
    Train a transformer (fresh, or `model` to continue) on the batcher's stream.

    The batcher's encoder supplies the frozen backend and the trainable
    projection. Returns the model in eval mode and a loss report.
    """
    tcfg = {**MODEL_TRAIN_DEFAULTS, **(train_cfg or {})}
    state, params = init_fn({"seed": seed, "train": tcfg}, device=device)
    dev = params["backend"]["device"]
    encoder = batcher.encoder
    if encoder.hidden != batcher.config.hidden:
        raise ConfigError(f"prompt projection width {encoder.hidden} != model.hidden {batcher.config.hidden}")
    model = (model or MultiScaleTransformer(batcher.config)).to(dev)
    encoder.to(dev)
    trainable = list(model.parameters()) + list(encoder.projection.parameters())
    state.update(
        model=model,
        encoder=encoder,
        optimizer=torch.optim.AdamW(trainable, lr=tcfg["lr"], weight_decay=tcfg["weight_decay"]),
    )
    step = with_nan_guard(
        with_frozen_backend_check(
            with_grad_clip(with_requirements_check(train_step), max_norm=tcfg["grad_clip"]),
            backend=lambda st: st["encoder"].backend,
        )
    )
    state, run_report = run_fn(state, params, batcher, step=step, n_steps=tcfg["steps"], hooks=hooks)
    model.eval()
    losses = list(run_report["losses"])
    tail = losses[-50:] or [float("nan")]
    report = ModelTrainReport(
        n_steps=int(run_report["n_steps"]),
        final_loss=losses[-1] if losses else float("nan"),
        smoothed_loss=float(np.mean(tail)),
        losses=losses,
    )
    logger.info("transformer trained for %d steps: loss %.4f (last-50 mean %.4f)",
                report.n_steps, report.final_loss, report.smoothed_loss)
    return model, report


# checkpoints


def save_checkpoint(
    path: PathLike,
    *,
    model: MultiScaleTransformer,
    encoder: PromptEncoder,
    table: PhonemeTable,
    run_config: Mapping[str, Any],
    step: int,
) -> None:
    """
    Write a versioned checkpoint: config echo, model and prompt-projection
    state, the phoneme table, the step count and torch/numpy RNG states. The
    backend weights travel along since fine-tuning may have changed them.
    """
    blob = {
        "format": CHECKPOINT_FORMAT,
        "config": dict(run_config),
        "model_config": model.config.to_dict(),
        "model": model.state_dict(),
        "prompt_encoder": {
            "backend": encoder.backend.name,
            "pooled": encoder.pooled,
            "projections": encoder.projection_state(),
            "backend_checksum": parameter_checksum(encoder.backend),
            "backend_state": encoder.backend.state_dict(),
            "backend_kwargs": backend_init_kwargs(encoder.backend),
        },
        "phoneme_table": table.to_list(),
        "step": int(step),
        "rng": {"torch": torch.get_rng_state(), "numpy": np.random.get_state()},
    }
    with atomic_path(path) as tmp:
        torch.save(blob, tmp)


@dataclass
class LoadedCheckpoint:
    model: MultiScaleTransformer
    encoder: PromptEncoder
    table: PhonemeTable
    config: dict[str, Any]
    step: int
    rng: dict[str, Any]


def load_checkpoint(path: PathLike, *, restore_rng: bool = False) -> LoadedCheckpoint:
    try:
        blob = torch.load(path, map_location="cpu", weights_only=False)
    except (OSError, RuntimeError) as e:
        raise DataError(f"cannot load checkpoint {path}: {e}") from e
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise DataError(f"{path}: unsupported checkpoint format {blob.get('format')!r}")
    model = MultiScaleTransformer(ModelConfig.from_dict(blob["model_config"]))
    model.load_state_dict(blob["model"])
    model.eval()

    pe = blob["prompt_encoder"]
    backend = resolve_backend(pe["backend"], **pe["backend_kwargs"])
    backend.load_state_dict(pe["backend_state"])
    if parameter_checksum(backend) != pe["backend_checksum"]:
        logger.warning("prompt-encoder backend %s differs from the one used in training", pe["backend"])
    encoder = PromptEncoder(backend, model.config.hidden, pooled=pe["pooled"])
    encoder.projections.load_state_dict(pe["projections"])
    encoder.eval()

    if restore_rng:
        torch.set_rng_state(blob["rng"]["torch"])
        np.random.set_state(blob["rng"]["numpy"])
    return LoadedCheckpoint(
        model=model,
        encoder=encoder,
        table=PhonemeTable.from_list(blob["phoneme_table"]),
        config=dict(blob["config"]),
        step=int(blob["step"]),
        rng=blob["rng"],
    )
