"""Singing/speech data mixing: hour caps per corpus kind and a weighted sampler."""

from __future__ import annotations

import logging
from typing import Generic, Iterator, Mapping, Protocol, Sequence, TypeVar

import numpy as np

from pcsvs.errors import ConfigError
from pcsvs.features.manifest import UtteranceRecord

logger = logging.getLogger(__name__)


class HasKind(Protocol):
    corpus_kind: str


Item = TypeVar("Item", bound=HasKind)


def select_by_hours(
    records: Sequence[UtteranceRecord],
    caps: Mapping[str, float | None],
    rng: np.random.Generator,
) -> list[UtteranceRecord]:
    """
    Pick a random subset per corpus kind until each kind's hour cap is reached.

    Utterances are added in shuffled order while the running total is below the
    cap, so each kind overshoots its cap by less than one utterance. A cap of
    None keeps the whole kind; a cap of 0 drops it.
    """
    by_kind: dict[str, list[UtteranceRecord]] = {}
    for r in records:
        by_kind.setdefault(r.corpus_kind, []).append(r)

    selected: list[UtteranceRecord] = []
    for kind in sorted(by_kind):
        pool = by_kind[kind]
        cap = caps.get(kind)
        if cap is None:
            selected.extend(pool)
            logger.info("data mix: %s uncapped, %d utterances", kind, len(pool))
            continue
        if cap < 0:
            raise ConfigError(f"data_mix cap for {kind} must be >= 0 hours, got {cap}")
        cap_sec = cap * 3600.0
        total = 0.0
        chosen = 0
        for i in rng.permutation(len(pool)):
            if total >= cap_sec:
                break
            selected.append(pool[int(i)])
            total += pool[int(i)].duration_sec
            chosen += 1
        logger.info(
            "data mix: %s %d/%d utterances, %.3f h (cap %.3f h)",
            kind, chosen, len(pool), total / 3600.0, cap,
        )
    return selected


class MixedSampler(Generic[Item]):
    """
    Draw utterances (anything with a corpus_kind) from per-kind pools with
    fixed mixing weights.

    Default weights are proportional to pool sizes, i.e. uniform over all
    records; explicit `weights` set the probability of drawing each kind.
    """

    def __init__(
        self,
        records: Sequence[Item],
        *,
        weights: Mapping[str, float] | None = None,
        seed: int = 0,
    ) -> None:
        pools: dict[str, list[Item]] = {}
        for r in records:
            pools.setdefault(r.corpus_kind, []).append(r)
        if not pools:
            raise ConfigError("cannot sample from an empty corpus")
        self.kinds = sorted(pools)
        self.pools = pools
        if weights is None:
            w = np.array([len(pools[k]) for k in self.kinds], dtype=np.float64)
        else:
            unknown = set(weights) - set(self.kinds)
            if unknown:
                raise ConfigError(f"data_mix weights name kinds with no data: {sorted(unknown)}")
            w = np.array([float(weights.get(k, 0.0)) for k in self.kinds], dtype=np.float64)
            if np.any(w < 0) or w.sum() <= 0:
                raise ConfigError(f"data_mix weights must be >= 0 with a positive sum, got {dict(weights)}")
        self.probs = w / w.sum()
        self.rng = np.random.default_rng(seed)

    def sample(self, n: int) -> list[Item]:
        kinds = self.rng.choice(len(self.kinds), size=n, p=self.probs)
        out = []
        for k in kinds:
            pool = self.pools[self.kinds[int(k)]]
            out.append(pool[int(self.rng.integers(len(pool)))])
        return out

    def batches(self, batch_size: int) -> Iterator[list[Item]]:
        while True:
            yield self.sample(batch_size)
