"""
Prompt encoder: frozen backend + trainable per-backend linear projection.

The projection maps backend width to the transformer hidden width. Each
backend gets its own projection (backends differ in width), stored in a
ModuleDict keyed by backend name so checkpoints can carry several.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import torch
from torch import nn

from pcsvs.errors import InvalidInputError
from pcsvs.text.backends import TextBackend

logger = logging.getLogger(__name__)


def _key(backend_name: str) -> str:
    # ModuleDict keys may not contain "."
    return backend_name.replace(".", "_")


@dataclass(frozen=True)
class PromptEmbedding:
    vectors: torch.Tensor  # (L, hidden)
    encoder_id: str
    pooled: bool = False

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2 or self.vectors.shape[0] == 0:
            raise InvalidInputError(
                f"prompt embedding must be a non-empty (L, hidden) matrix, got {tuple(self.vectors.shape)}"
            )

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


def masked_mean(hidden: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
    m = mask.unsqueeze(-1).type(hidden.dtype)
    return (hidden * m).sum(1) / m.sum(1).clamp_min(1.0)


class PromptEncoder(nn.Module):
    def __init__(self, backend: TextBackend, hidden: int, *, pooled: bool = False) -> None:
        super().__init__()
        self.backend = backend
        self.hidden = hidden
        self.pooled = pooled
        self.projections = nn.ModuleDict({_key(backend.name): nn.Linear(backend.width, hidden)})

    @property
    def projection(self) -> nn.Linear:
        return self.projections[_key(self.backend.name)]  # type: ignore[return-value]

    def projection_state(self) -> dict[str, torch.Tensor]:
        return self.projections.state_dict()

    @torch.no_grad()
    def backend_states(self, sentences: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        """Frozen backend outputs (B, L, width) and mask, pooled to L = 1 if configured."""
        for s in sentences:
            if not s or not s.strip():
                raise InvalidInputError("prompt sentence is empty")
        hidden, mask = self.backend(sentences)
        if self.pooled:
            hidden = masked_mean(hidden, mask).unsqueeze(1)
            mask = torch.ones(hidden.shape[0], 1, dtype=torch.bool, device=hidden.device)
        return hidden, mask

    def project(self, hidden: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        return self.projection(hidden) * mask.unsqueeze(-1).type(hidden.dtype)

    def forward(self, sentences: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        """(B, L, hidden) projected vectors and (B, L) mask; L = 1 when pooled."""
        hidden, mask = self.backend_states(sentences)
        return self.project(hidden, mask), mask


def encode_prompt(sentence: str, encoder: PromptEncoder) -> PromptEmbedding:
    """Embed one sentence; the backend runs without gradients."""
    vectors, mask = encoder([sentence])
    return PromptEmbedding(
        vectors=vectors[0][mask[0]],
        encoder_id=encoder.backend.name,
        pooled=encoder.pooled,
    )
