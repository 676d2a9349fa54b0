"""Prompt-encoder construction from a RunConfig, and the finetune-encoder command."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import torch

from pcsvs.errors import DataError
from pcsvs.prompts.bank import (KeywordBank, PromptTemplate, check_disjoint,
                                load_keyword_bank, load_templates)
from pcsvs.text.backends import (TextBackend, backend_init_kwargs,
                                 parameter_checksum, resolve_backend)
from pcsvs.text.encoder import PromptEncoder
from pcsvs.text.finetune import (FINETUNE_DEFAULTS, finetune_multilabel,
                                 make_prompt_pairs)
from pcsvs.utils.io import PathLike, atomic_path, write_json

from .runs import RunDir, seed_of, standard_hooks

logger = logging.getLogger(__name__)

TUNED_BACKEND_FORMAT = 1


def load_prompt_assets(cfg: Mapping[str, Any]) -> tuple[KeywordBank, list[PromptTemplate], list[PromptTemplate]]:
    """Keyword bank, training templates and held-out evaluation templates (checked disjoint)."""
    paths = cfg["paths"]
    bank = load_keyword_bank(paths.get("keywords"))
    templates = load_templates(paths.get("templates"), bank=bank)
    held_out = load_templates(paths.get("eval_templates"), bank=bank, eval_set=True)
    check_disjoint(templates, held_out)
    return bank, templates, held_out


def _fresh_backend(cfg: Mapping[str, Any]) -> TextBackend:
    pe = cfg["prompt_encoder"]
    kwargs: dict[str, Any] = {}
    if pe["backend"] == "toy":
        kwargs = {"width": int(pe["width"]), "seed": seed_of(cfg)}
    return resolve_backend(pe["backend"], **kwargs)


def save_tuned_backend(path: PathLike, backend: TextBackend, report: Mapping[str, Any]) -> None:
    blob = {
        "format": TUNED_BACKEND_FORMAT,
        "backend": backend.name,
        "kwargs": backend_init_kwargs(backend),
        "state_dict": backend.state_dict(),
        "checksum": parameter_checksum(backend),
        "report": dict(report),
    }
    with atomic_path(path) as tmp:
        torch.save(blob, tmp)


def load_tuned_backend(path: PathLike) -> TextBackend:
    try:
        blob = torch.load(path, map_location="cpu", weights_only=False)
    except (OSError, RuntimeError) as e:
        raise DataError(f"cannot load tuned prompt encoder {path}: {e}") from e
    if blob.get("format") != TUNED_BACKEND_FORMAT:
        raise DataError(f"{path}: unsupported tuned-encoder format {blob.get('format')!r}")
    backend = resolve_backend(blob["backend"], **blob["kwargs"])
    backend.load_state_dict(blob["state_dict"])
    if parameter_checksum(backend) != blob["checksum"]:
        raise DataError(f"{path}: backend parameters do not match the stored checksum")
    return backend


def build_backend(cfg: Mapping[str, Any]) -> TextBackend:
    """The tuned backend at paths.encoder_checkpoint when present, else a fresh one."""
    tuned = cfg["paths"].get("encoder_checkpoint")
    if tuned and Path(tuned).is_file():
        backend = load_tuned_backend(tuned)
        if backend.name != cfg["prompt_encoder"]["backend"]:
            logger.warning("tuned encoder %s overrides prompt_encoder.backend=%s",
                           backend.name, cfg["prompt_encoder"]["backend"])
        logger.info("prompt encoder: tuned backend %s from %s", backend.name, tuned)
        return backend
    return _fresh_backend(cfg)


def build_encoder(cfg: Mapping[str, Any]) -> PromptEncoder:
    pooled = bool(cfg["prompt_encoder"]["pooled"])
    encoder = PromptEncoder(build_backend(cfg), int(cfg["model"]["hidden"]), pooled=pooled)
    logger.info("prompt encoder %s, %s outputs", encoder.backend.name, "pooled" if pooled else "per-token")
    return encoder


def run_finetune_encoder(cfg: Mapping[str, Any], run: RunDir | None = None) -> dict[str, Any]:
    bank, templates, held_out = load_prompt_assets(cfg)
    fcfg = cfg["finetune"]
    seed = seed_of(cfg)
    rng = np.random.default_rng(seed)
    pairs = make_prompt_pairs(bank, templates, int(fcfg["n_pairs"]), rng)
    seen = {s for s, _ in pairs}
    heldout = [(s, l) for s, l in make_prompt_pairs(bank, held_out, int(fcfg["n_heldout"]), rng) if s not in seen]

    backend, _, report = finetune_multilabel(
        _fresh_backend(cfg),
        pairs,
        heldout=heldout,
        train_cfg={k: fcfg[k] for k in FINETUNE_DEFAULTS},
        seed=seed,
        hooks=standard_hooks(run, cfg),
    )
    out = report.to_dict()
    save_tuned_backend(cfg["paths"]["encoder_checkpoint"], backend, out)
    if run is not None:
        write_json(run.file("finetune_report.json"), out)
    logger.info("tuned prompt encoder written to %s", cfg["paths"]["encoder_checkpoint"])
    return out
