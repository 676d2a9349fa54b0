"""
Multi-label fine-tuning of a prompt-encoder backend.

A linear head over max-pooled backend outputs predicts the 7 attribute
categories (sigmoid per category, absent attributes all-zero). The backend's
own parameters are updated, so the tuned backend is what the transformer
later sees frozen. Held-out evaluation prompts must never be tuning data.

The same head stands in for the label-sequence (text-to-text) tuning mode of
encoder-decoder backends: only their encoder is kept, and the head is applied
to its outputs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from pcsvs.core.api import Batch, Hook, Params, State, init_fn, run_fn
from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.prompts.bank import KeywordBank, PromptTemplate
from pcsvs.prompts.labels import ABSENT, ATTRIBUTES, CATEGORIES, AttributeLabels
from pcsvs.prompts.pipeline import assemble_prompt
from pcsvs.text.backends import TextBackend, freeze

logger = logging.getLogger(__name__)

LABEL_SPACE: tuple[tuple[str, str], ...] = tuple(
    (attr, cat) for attr in ATTRIBUTES for cat in CATEGORIES[attr]
)

# attribute sets a template can cover
COMBINATIONS: tuple[frozenset[str], ...] = (
    frozenset({"gender"}),
    frozenset({"volume"}),
    frozenset({"gender", "volume"}),
    frozenset({"gender", "vocal_range"}),
    frozenset({"gender", "volume", "vocal_range"}),
)

FINETUNE_DEFAULTS: dict[str, Any] = {"steps": 300, "batch_size": 32, "lr": 5e-3}


def labels_to_targets(labels: AttributeLabels | Mapping[str, Any]) -> np.ndarray:
    if not isinstance(labels, AttributeLabels):
        try:
            labels = AttributeLabels.from_mapping(labels)
        except InvalidInputError as e:
            raise ConfigError(f"label space mismatch: {e}") from e
    values = labels.to_dict()
    return np.array([1.0 if values[a] == c else 0.0 for a, c in LABEL_SPACE], dtype=np.float32)


def targets_to_labels(targets: np.ndarray) -> AttributeLabels:
    """Decode a 0/1 vector; the highest-scoring category wins per attribute."""
    out: dict[str, str] = {}
    for attr in ATTRIBUTES:
        idx = [i for i, (a, _) in enumerate(LABEL_SPACE) if a == attr]
        best = max(idx, key=lambda i: targets[i])
        out[attr] = LABEL_SPACE[best][1] if targets[best] > 0.5 else ABSENT
    if out["gender"] == ABSENT:
        out["vocal_range"] = ABSENT
    return AttributeLabels(**out)


def random_labels(rng: np.random.Generator) -> AttributeLabels:
    combo = COMBINATIONS[int(rng.integers(len(COMBINATIONS)))]
    values = {a: (CATEGORIES[a][int(rng.integers(len(CATEGORIES[a])))] if a in combo else ABSENT) for a in ATTRIBUTES}
    return AttributeLabels(**values)


def make_prompt_pairs(
    bank: KeywordBank,
    templates: Sequence[PromptTemplate],
    n: int,
    rng: np.random.Generator,
) -> list[tuple[str, AttributeLabels]]:
    pairs = []
    for _ in range(n):
        labels = random_labels(rng)
        pairs.append((assemble_prompt(labels, bank, templates, rng).sentence, labels))
    return pairs


class MultiLabelHead(nn.Module):
    def __init__(self, width: int) -> None:
        super().__init__()
        self.linear = nn.Linear(width, len(LABEL_SPACE))

    def forward(self, hidden: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        masked = hidden.masked_fill(~mask.unsqueeze(-1), float("-inf"))
        return self.linear(masked.max(dim=1).values)


@dataclass
class FinetuneReport:
    train_accuracy: float
    heldout_accuracy: float | None
    steps: int

    def to_dict(self) -> dict[str, Any]:
        return {"train_accuracy": self.train_accuracy, "heldout_accuracy": self.heldout_accuracy, "steps": self.steps}


@torch.no_grad()
def exact_match_accuracy(
    backend: TextBackend, head: MultiLabelHead, pairs: Sequence[tuple[str, Any]]
) -> float:
    """Percentage of prompts whose full 7-way prediction matches the labels."""
    if not pairs:
        return 0.0
    sentences = [s for s, _ in pairs]
    targets = torch.as_tensor(np.stack([labels_to_targets(l) for _, l in pairs]))
    hidden, mask = backend(sentences)
    pred = (head(hidden, mask) > 0).type(targets.dtype)
    return 100.0 * float((pred == targets).all(dim=1).type(torch.float32).mean())


def _finetune_step(state: State, batch: Batch, params: Params) -> tuple[State, dict[str, Any]]:
    backend, head, opt = state["backend"], state["head"], state["optimizer"]
    opt.zero_grad()
    hidden, mask = backend(batch["sentences"])
    loss = F.binary_cross_entropy_with_logits(head(hidden, mask), batch["targets"])
    loss.backward()
    opt.step()
    return state, {"loss": float(loss.detach())}


def finetune_multilabel(
    backend: TextBackend,
    pairs: Sequence[tuple[str, AttributeLabels | Mapping[str, Any]]],
    *,
    heldout: Sequence[tuple[str, AttributeLabels | Mapping[str, Any]]] = (),
    train_cfg: Mapping[str, Any] | None = None,
    seed: int = 0,
    hooks: tuple[Hook, ...] = (),
) -> tuple[TextBackend, MultiLabelHead, FinetuneReport]:
    """
    Tune `backend` in place on (sentence, labels) pairs.

    Holds backend.lock for the whole run and leaves the backend frozen and in
    eval mode afterwards. Returns (backend, head, report) with exact-match
    accuracies in percent.
    """
    if not pairs:
        raise ConfigError("fine-tuning needs at least one prompt/label pair")
    leaked = {s for s, _ in pairs} & {s for s, _ in heldout}
    if leaked:
        raise ConfigError(f"held-out prompts found in tuning data: {sorted(leaked)[:3]}")
    tcfg = {**FINETUNE_DEFAULTS, **(train_cfg or {})}
    targets = np.stack([labels_to_targets(l) for _, l in pairs])
    sentences = [s for s, _ in pairs]

    with backend.lock:
        state, params = init_fn({"seed": seed, "finetune": tcfg})
        head = MultiLabelHead(backend.width)
        for p in backend.parameters():
            p.requires_grad_(True)
        backend.train()
        rng = np.random.default_rng(seed)

        def batches(k: int) -> Batch:
            idx = rng.integers(len(sentences), size=min(tcfg["batch_size"], len(sentences)))
            return {
                "sentences": [sentences[i] for i in idx],
                "targets": torch.as_tensor(targets[idx]),
            }

        state.update(
            backend=backend,
            head=head,
            optimizer=torch.optim.Adam(list(backend.parameters()) + list(head.parameters()), lr=tcfg["lr"]),
        )
        try:
            state, run_report = run_fn(state, params, batches, step=_finetune_step, n_steps=tcfg["steps"], hooks=hooks)
        finally:
            freeze(backend)
            backend.eval()
        head.eval()
        report = FinetuneReport(
            train_accuracy=exact_match_accuracy(backend, head, pairs),
            heldout_accuracy=exact_match_accuracy(backend, head, heldout) if heldout else None,
            steps=int(run_report["n_steps"]),
        )
    logger.info(
        "prompt-encoder fine-tuning: train accuracy %.1f%%, held-out %s",
        report.train_accuracy,
        "n/a" if report.heldout_accuracy is None else f"{report.heldout_accuracy:.1f}%",
    )
    return backend, head, report
