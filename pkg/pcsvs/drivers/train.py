"""train-model: prepared corpus + trained codec -> transformer checkpoint."""

from __future__ import annotations

import logging
from typing import Any, Mapping

from pcsvs.codec.model import ToyCodec
from pcsvs.core.api import Hook, State
from pcsvs.errors import ConfigError
from pcsvs.features.regulate import PhonemeTable
from pcsvs.hooks import checkpoint_hook
from pcsvs.model.config import ModelConfig
from pcsvs.model.data import ModelBatcher, build_examples
from pcsvs.model.train import (MODEL_TRAIN_DEFAULTS, save_checkpoint,
                               train_model)
from pcsvs.utils.io import write_json

from .encoder import build_encoder, load_prompt_assets
from .prepare import load_prepared
from .runs import RunDir, seed_of, standard_hooks

logger = logging.getLogger(__name__)


def prompt_bands(cfg: Mapping[str, Any]) -> tuple[dict[str, tuple[float, float]], dict[str, float]]:
    prompts = cfg["prompts"]
    bands = {k: (float(v[0]), float(v[1])) for k, v in prompts["volume_bands"].items()}
    thresholds = {k: float(v) for k, v in prompts["range_thresholds"].items()}
    return bands, thresholds


def model_config_for(cfg: Mapping[str, Any], table: PhonemeTable, codec: ToyCodec) -> ModelConfig:
    config = ModelConfig.from_dict(cfg["model"])
    if len(table) > config.phoneme_vocab:
        raise ConfigError(
            f"corpus has {len(table)} phoneme symbols but model.phoneme_vocab={config.phoneme_vocab}"
        )
    if codec.config.codebook_size != config.codebook_size or codec.config.n_q != config.n_q:
        raise ConfigError(
            f"codec (n_q {codec.config.n_q}, K {codec.config.codebook_size}) does not match "
            f"model (n_q {config.n_q}, K {config.codebook_size})"
        )
    return config


def run_train_model(cfg: Mapping[str, Any], run: RunDir | None = None) -> dict[str, Any]:
    paths = cfg["paths"]
    seed = seed_of(cfg)
    tcfg = {**MODEL_TRAIN_DEFAULTS, **cfg["train"]}
    records, table = load_prepared(paths["data_dir"])
    codec = ToyCodec.load(paths["codec"])
    config = model_config_for(cfg, table, codec)
    bank, templates, _ = load_prompt_assets(cfg)
    encoder = build_encoder(cfg)
    bands, thresholds = prompt_bands(cfg)

    examples = build_examples(
        records,
        codec,
        table,
        n_q=config.n_q,
        augment_copies=int(tcfg["augment_copies"]),
        bands=bands,
        thresholds=thresholds,
        seed=seed,
    )
    batcher = ModelBatcher(
        examples,
        encoder,
        config,
        bank=bank,
        templates=templates,
        batch_size=int(tcfg["batch_size"]),
        max_frames=int(tcfg["max_frames"]),
        p1=float(cfg["prompts"]["p1"]),
        p2=float(cfg["prompts"]["p2"]),
        kind_weights=cfg["data_mix"]["weights"],
        seed=seed,
    )

    hooks: list[Hook] = list(standard_hooks(run, cfg))
    every = int(tcfg["checkpoint_every"])
    if every > 0:
        def save(k: int, state: State) -> None:
            save_checkpoint(paths["checkpoint"], model=state["model"], encoder=state["encoder"],
                            table=table, run_config=cfg, step=k + 1)

        hooks.append(checkpoint_hook(save, every=every))

    model, report = train_model(batcher, train_cfg=tcfg, seed=seed, device=cfg.get("device"), hooks=tuple(hooks))
    save_checkpoint(paths["checkpoint"], model=model, encoder=encoder, table=table, run_config=cfg, step=report.n_steps)
    out = {**report.to_dict(), "n_examples": len(examples), "checkpoint": str(paths["checkpoint"])}
    if run is not None:
        write_json(run.file("train_report.json"), out)
    logger.info("checkpoint written to %s", paths["checkpoint"])
    return out
