"""Hugging Face text encoders as prompt-encoder backends (optional `hf` extra)."""

from __future__ import annotations

import logging
from typing import Sequence

import torch

from pcsvs.config.loader import cache_dir as configured_cache
from pcsvs.errors import ConfigError
from pcsvs.text.backends import TextBackend

logger = logging.getLogger(__name__)


class HFTextBackend(TextBackend):
    """
    Encoder hidden states of a pretrained model.

    Encoder-decoder checkpoints (T5 family) keep only the encoder; CLAP
    checkpoints keep only the text tower.
    """

    def __init__(self, model_id: str, *, max_length: int = 64) -> None:
        super().__init__()
        try:
            from transformers import AutoModel, AutoTokenizer
        except ImportError as e:
            raise ConfigError(
                "backend 'hf:...' needs the transformers package (pip install py-pcsvs[hf])"
            ) from e
        cache = configured_cache()
        cache_dir = str(cache) if cache is not None else None
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_id, cache_dir=cache_dir)
            model = AutoModel.from_pretrained(model_id, cache_dir=cache_dir)
        except OSError as e:
            raise ConfigError(f"cannot load Hugging Face model {model_id!r}: {e}") from e
        if getattr(model.config, "model_type", "") == "clap":
            model = model.text_model
        elif getattr(model.config, "is_encoder_decoder", False):
            model = model.get_encoder()
        self.model = model
        self.name = f"hf:{model_id}"
        cfg = model.config
        self.width = int(getattr(cfg, "hidden_size", None) or getattr(cfg, "d_model"))
        self.max_length = max_length
        logger.info("loaded prompt encoder %s (width %d, cache %s)", self.name, self.width, cache_dir)

    def forward(self, sentences: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        enc = self.tokenizer(
            list(sentences),
            padding=True,
            truncation=True,
            max_length=self.max_length,
            return_tensors="pt",
        )
        device = next(self.model.parameters()).device
        enc = {k: v.to(device) for k, v in enc.items()}
        out = self.model(input_ids=enc["input_ids"], attention_mask=enc["attention_mask"])
        return out.last_hidden_state, enc["attention_mask"].bool()
