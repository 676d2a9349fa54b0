"""
Prompt-encoder backends.

A backend maps a batch of sentences to per-token hidden vectors:

    hidden, mask = backend(sentences)   # (B, L, width), (B, L) bool

Registered names:
- "toy"          builtin keyword-aware bag-of-subwords encoder (no downloads)
- "hf:<model>"   a Hugging Face encoder (BERT-, T5-encoder- or CLAP-text style),
                 see pcsvs.adapters.hf_text; needs the `hf` extra

Backends are frozen during transformer training; parameter_checksum backs
that contract.
"""

from __future__ import annotations

import hashlib
import re
import threading
import zlib
from typing import Any, Callable, Sequence

import torch
from torch import nn

from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.prompts.bank import KeywordBank, load_keyword_bank

_WORD_RE = re.compile(r"[a-z]+(?:-[a-z]+)*")


def parameter_checksum(module: nn.Module) -> str:
    """SHA-256 over parameter names and bytes, in name order."""
    h = hashlib.sha256()
    for name, p in sorted(module.named_parameters(), key=lambda kv: kv[0]):
        h.update(name.encode())
        h.update(p.detach().cpu().contiguous().numpy().tobytes())
    return h.hexdigest()


def freeze(module: nn.Module) -> nn.Module:
    for p in module.parameters():
        p.requires_grad_(False)
    return module


class TextBackend(nn.Module):
    """Base class: subclasses set `name` and `width` and implement forward."""

    name: str = "base"
    width: int = 0

    def __init__(self) -> None:
        super().__init__()
        # held while fine-tuning mutates the backend
        self.lock = threading.Lock()

    def forward(self, sentences: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        raise NotImplementedError


def tokenize(sentence: str) -> list[str]:
    return _WORD_RE.findall(sentence.lower())


class ToyBackend(TextBackend):
    """
    Keyword-aware bag of subwords.

    Every bank keyword owns a dedicated embedding row; any other word is the
    mean of its hashed character trigrams ("<word>" padded). One output vector
    per word.
    """

    name = "toy"

    def __init__(
        self,
        bank: KeywordBank | None = None,
        *,
        width: int = 128,
        n_buckets: int = 4096,
        seed: int = 0,
    ) -> None:
        super().__init__()
        bank = bank or load_keyword_bank()
        words = sorted({w for cats in bank.keywords.values() for ws in cats.values() for w in ws})
        self.keyword_ids = {w: i + 1 for i, w in enumerate(words)}
        self.n_buckets = n_buckets
        self.width = width
        self._offset = len(words) + 1
        self.table = nn.EmbeddingBag(self._offset + n_buckets, width, mode="mean")
        gen = torch.Generator().manual_seed(seed)
        with torch.no_grad():
            self.table.weight.copy_(torch.randn(self.table.weight.shape, generator=gen) * 0.5)

    def _word_ids(self, word: str) -> list[int]:
        if word in self.keyword_ids:
            return [self.keyword_ids[word]]
        padded = f"<{word}>"
        grams = [padded[i:i + 3] for i in range(max(1, len(padded) - 2))]
        return [self._offset + zlib.crc32(g.encode()) % self.n_buckets for g in grams]

    def forward(self, sentences: Sequence[str]) -> tuple[torch.Tensor, torch.Tensor]:
        token_lists = [tokenize(s) for s in sentences]
        for s, toks in zip(sentences, token_lists):
            if not toks:
                raise InvalidInputError(f"prompt has no words: {s!r}")
        flat: list[int] = []
        offsets: list[int] = []
        for toks in token_lists:
            for w in toks:
                offsets.append(len(flat))
                flat.extend(self._word_ids(w))
        device = self.table.weight.device
        vecs = self.table(
            torch.tensor(flat, dtype=torch.long, device=device),
            torch.tensor(offsets, dtype=torch.long, device=device),
        )
        max_len = max(len(t) for t in token_lists)
        hidden = vecs.new_zeros(len(sentences), max_len, self.width)
        mask = torch.zeros(len(sentences), max_len, dtype=torch.bool, device=device)
        i = 0
        for b, toks in enumerate(token_lists):
            n = len(toks)
            hidden[b, :n] = vecs[i:i + n]
            mask[b, :n] = True
            i += n
        return hidden, mask


def _toy_factory(backend_id: str, **kwargs) -> TextBackend:
    return ToyBackend(**kwargs)


def _hf_factory(backend_id: str, **kwargs) -> TextBackend:
    from pcsvs.adapters.hf_text import HFTextBackend

    return HFTextBackend(backend_id.split(":", 1)[1])


BACKENDS: dict[str, Callable[..., TextBackend]] = {
    "toy": _toy_factory,
    "hf": _hf_factory,
}


def resolve_backend(backend_id: str, **kwargs) -> TextBackend:
    """Instantiate a backend by registry name ("toy" or "hf:<model id>"), frozen."""
    family = backend_id.split(":", 1)[0]
    if family not in BACKENDS or (family == "hf" and ":" not in backend_id):
        raise ConfigError(
            f"unknown prompt-encoder backend {backend_id!r}; registered: toy, hf:<model id>"
        )
    backend = BACKENDS[family](backend_id, **kwargs)
    freeze(backend)
    backend.eval()
    return backend


def backend_init_kwargs(backend: TextBackend) -> dict[str, Any]:
    """Constructor kwargs that rebuild `backend` with matching parameter shapes."""
    if isinstance(backend, ToyBackend):
        return {"width": backend.width, "n_buckets": backend.n_buckets}
    return {}
