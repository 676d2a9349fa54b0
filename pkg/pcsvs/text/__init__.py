from __future__ import annotations

import torch

from .backends import (BACKENDS, TextBackend, ToyBackend, backend_init_kwargs,
                       parameter_checksum, resolve_backend)
from .encoder import PromptEmbedding, PromptEncoder, encode_prompt
from .finetune import (LABEL_SPACE, FinetuneReport, finetune_multilabel,
                       labels_to_targets, make_prompt_pairs)


def builtin_toy_encoder(sentence: str, *, hidden: int = 256, seed: int = 0) -> PromptEmbedding:
    """Embed with a freshly seeded toy backend and projection (no training)."""
    with torch.random.fork_rng():
        torch.manual_seed(seed)
        encoder = PromptEncoder(resolve_backend("toy", seed=seed), hidden)
    return encode_prompt(sentence, encoder)


__all__ = [
    "BACKENDS",
    "LABEL_SPACE",
    "FinetuneReport",
    "PromptEmbedding",
    "PromptEncoder",
    "TextBackend",
    "ToyBackend",
    "backend_init_kwargs",
    "builtin_toy_encoder",
    "encode_prompt",
    "finetune_multilabel",
    "labels_to_targets",
    "make_prompt_pairs",
    "parameter_checksum",
    "resolve_backend",
]
