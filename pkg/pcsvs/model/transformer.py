"""
Global + local decoder-only transformer over slotted token layouts.

Global: the n_q embeddings of a slot are concatenated, projected to the hidden
width, given a learned absolute position and run through a causal stack, one
step per slot. Its output h_t summarizes slots <= t.

Local: slot t is predicted from h_{t-1} (a learned start vector for t = 0).
The context is projected to n_q chunks, one per position, and added to the
slot's token embeddings shifted right by one (a learned BOS first). A small
causal stack without positional embeddings then emits logits per position,
so position c sees the frame context and positions < c only.
"""

from __future__ import annotations

import torch
from einops import rearrange
from torch import nn

from pcsvs.errors import CapacityError, InvalidInputError
from pcsvs.model.config import PAD, ModelConfig


def _stack(config: ModelConfig, n_layers: int, n_heads: int) -> nn.TransformerEncoder:
    layer = nn.TransformerEncoderLayer(
        d_model=config.hidden,
        nhead=n_heads,
        dim_feedforward=config.ff,
        dropout=config.dropout,
        activation="gelu",
        batch_first=True,
        norm_first=True,
    )
    return nn.TransformerEncoder(layer, n_layers, enable_nested_tensor=False)


def causal_mask(n: int, device: torch.device | None = None) -> torch.Tensor:
    return torch.triu(torch.full((n, n), float("-inf"), device=device), diagonal=1)


class MultiScaleTransformer(nn.Module):
    def __init__(self, config: ModelConfig) -> None:
        super().__init__()
        self.config = config
        d, n_q = config.hidden, config.n_q
        self.embed = nn.Embedding(config.vocab.size, d)
        self.frame_in = nn.Linear(n_q * d, d)
        self.global_pos = nn.Embedding(config.max_slots, d)
        self.global_blocks = _stack(config, config.global_layers, config.global_heads)
        self.global_norm = nn.LayerNorm(d)
        self.global_start = nn.Parameter(torch.randn(d) * 0.02)
        self.context_split = nn.Linear(d, n_q * d)
        self.local_bos = nn.Parameter(torch.randn(d) * 0.02)
        self.local_blocks = _stack(config, config.local_layers, config.local_heads)
        self.local_norm = nn.LayerNorm(d)
        self.lm_head = nn.Linear(d, config.vocab.size)
        self.register_buffer("trained_steps", torch.zeros((), dtype=torch.long))

    def embed_tokens(
        self,
        tokens: torch.Tensor,
        prompt_vectors: torch.Tensor | None = None,
        prompt_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """
        (B, S, n_q) ids -> (B, S, n_q, hidden). Slots flagged in prompt_mask
        take prompt_vectors[b, s] (prompt slots come first) in all n_q
        positions.
        """
        emb = self.embed(tokens)
        if prompt_vectors is None:
            return emb
        if prompt_mask is None:
            raise InvalidInputError("prompt vectors given without a prompt-slot mask")
        B, S = tokens.shape[:2]
        P = min(prompt_vectors.shape[1], S)
        if prompt_vectors.shape[-1] != self.config.hidden:
            raise InvalidInputError(
                f"prompt vectors have width {prompt_vectors.shape[-1]}, model hidden is {self.config.hidden}"
            )
        per_slot = emb.new_zeros(B, S, self.config.hidden)
        per_slot[:, :P] = prompt_vectors[:, :P]
        per_slot = per_slot.unsqueeze(2).expand_as(emb)
        return torch.where(prompt_mask[:, :, None, None], per_slot, emb)

    def global_forward(self, frames: torch.Tensor) -> torch.Tensor:
        """(B, S, n_q*hidden) concatenated slot embeddings -> (B, S, hidden)."""
        S = frames.shape[1]
        if S > self.config.max_slots:
            raise CapacityError(f"sequence of {S} slots exceeds model capacity {self.config.max_slots}")
        if frames.shape[-1] != self.config.n_q * self.config.hidden:
            raise InvalidInputError(f"frame width {frames.shape[-1]} != n_q*hidden")
        pos = self.global_pos(torch.arange(S, device=frames.device))
        x = self.frame_in(frames) + pos
        x = self.global_blocks(x, mask=causal_mask(S, frames.device))
        return self.global_norm(x)

    def local_forward(self, context: torch.Tensor, token_emb: torch.Tensor) -> torch.Tensor:
        """
        context (B, S, hidden): the frame context of each slot (h_{t-1}).
        token_emb (B, S, n_q, hidden): the slot's own token embeddings.
        Returns logits (B, S, n_q, vocab).
        """
        n_q, d = self.config.n_q, self.config.hidden
        if context.shape[-1] != d:
            raise InvalidInputError(f"frame context width {context.shape[-1]} != hidden {d}")
        if token_emb.shape[-2:] != (n_q, d):
            raise InvalidInputError(f"local inputs must be (..., {n_q}, {d}), got {tuple(token_emb.shape)}")
        B, S = token_emb.shape[:2]
        ctx = rearrange(self.context_split(context), "b s (q d) -> b s q d", q=n_q)
        bos = self.local_bos.expand(B, S, 1, d)
        shifted = torch.cat([bos, token_emb[:, :, :-1]], dim=2)
        x = rearrange(ctx + shifted, "b s q d -> (b s) q d")
        x = self.local_norm(self.local_blocks(x, mask=causal_mask(n_q, x.device)))
        return rearrange(self.lm_head(x), "(b s) q v -> b s q v", b=B)

    def shift_context(self, h: torch.Tensor) -> torch.Tensor:
        start = self.global_start.expand(h.shape[0], 1, -1)
        return torch.cat([start, h[:, :-1]], dim=1)

    def forward(
        self,
        tokens: torch.Tensor,
        prompt_vectors: torch.Tensor | None = None,
        prompt_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Teacher-forced logits (B, S, n_q, vocab) for every position."""
        emb = self.embed_tokens(tokens, prompt_vectors, prompt_mask)
        h = self.global_forward(rearrange(emb, "b s q d -> b s (q d)"))
        return self.local_forward(self.shift_context(h), emb)

    # step-wise decoding; the global prefix is recomputed on every call

    def next_context(
        self,
        tokens: torch.Tensor,
        prompt_vectors: torch.Tensor | None = None,
        prompt_mask: torch.Tensor | None = None,
    ) -> torch.Tensor:
        """Frame context (B, hidden) for the slot after the given (B, S, n_q) slots."""
        emb = self.embed_tokens(tokens, prompt_vectors, prompt_mask)
        if tokens.shape[1] + 1 > self.config.max_slots:
            raise CapacityError(f"decoding past {self.config.max_slots} slots")
        return self.global_forward(rearrange(emb, "b s q d -> b s (q d)"))[:, -1]

    def position_logits(self, context: torch.Tensor, partial: torch.Tensor) -> torch.Tensor:
        """
        Logits (B, vocab) for position c = partial.shape[1] of a new slot,
        given its frame context and the c tokens already chosen.
        """
        B, c = partial.shape
        n_q = self.config.n_q
        slot = torch.full((B, n_q), PAD, dtype=torch.long, device=partial.device)
        slot[:, :c] = partial
        logits = self.local_forward(context[:, None], self.embed(slot)[:, None])
        return logits[:, 0, c]
