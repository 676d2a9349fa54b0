"""
Frame-level phoneme regulation.

Phonemes with per-phoneme durations (seconds) are expanded to one symbol per
acoustic frame. Boundaries are rounded cumulatively, so the total length is
always round(sum(durations) * frame_rate) no matter how many phonemes there are.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from pcsvs.errors import InvalidInputError
from pcsvs.ops.signal import round_half_away
from pcsvs.utils.io import PathLike, atomic_open

logger = logging.getLogger(__name__)

UNK = "<unk>"


class PhonemeTable:
    """Phoneme symbol table; id 0 is reserved for unknown symbols."""

    def __init__(self, symbols: Sequence[str] = ()) -> None:
        self.symbols: list[str] = [UNK]
        self._index: dict[str, int] = {UNK: 0}
        for s in symbols:
            self.add(s)

    @classmethod
    def build(cls, sequences: Sequence[Sequence[str]]) -> "PhonemeTable":
        table = cls()
        for seq in sequences:
            for s in seq:
                table.add(s)
        return table

    def add(self, symbol: str) -> int:
        if symbol not in self._index:
            self._index[symbol] = len(self.symbols)
            self.symbols.append(symbol)
        return self._index[symbol]

    def id_of(self, symbol: str) -> int:
        return self._index.get(symbol, 0)

    def ids(self, symbols: Sequence[str]) -> np.ndarray:
        return np.array([self.id_of(s) for s in symbols], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol: object) -> bool:
        return symbol in self._index

    def to_list(self) -> list[str]:
        return list(self.symbols)

    @classmethod
    def from_list(cls, symbols: Sequence[str]) -> "PhonemeTable":
        if not symbols or symbols[0] != UNK:
            raise InvalidInputError(f"phoneme table must start with {UNK!r}")
        return cls(symbols[1:])


@dataclass(frozen=True)
class PhonemeFrameSequence:
    phoneme_ids: np.ndarray  # int64, one id per frame
    source_index: np.ndarray  # index into `phonemes` for each frame
    phonemes: tuple[str, ...] = ()
    durations: tuple[float, ...] = ()
    frame_rate: float = 50.0
    vocab_size: int = 0

    def __len__(self) -> int:
        return int(self.phoneme_ids.shape[0])


def frame_rate_of(sample_rate: int, hop: int) -> float:
    if hop <= 0:
        raise InvalidInputError(f"hop must be positive, got {hop}")
    if sample_rate % hop:
        logger.warning(
            "hop %d does not divide sample rate %d; frame rate %.3f is not an integer",
            hop, sample_rate, sample_rate / hop,
        )
    return sample_rate / hop


def frame_counts(durations_sec: Sequence[float], frame_rate: float) -> np.ndarray:
    """Frames per phoneme from cumulative-boundary rounding."""
    d = np.asarray(durations_sec, dtype=np.float64)
    if d.size and (np.any(d < 0) or not np.all(np.isfinite(d))):
        raise InvalidInputError("phoneme durations must be finite and >= 0")
    if d.size == 0:
        return np.zeros(0, dtype=np.int64)
    # 9 decimals absorbs float noise such as 0.03 * 50 = 1.4999999999999998
    bounds = round_half_away(np.round(np.cumsum(d) * frame_rate, 9))
    return np.diff(np.concatenate([[0], bounds])).astype(np.int64)


def regulate(
    phonemes: Sequence[str],
    durations_sec: Sequence[float],
    frame_rate: float,
    *,
    table: PhonemeTable | None = None,
) -> PhonemeFrameSequence:
    if len(phonemes) != len(durations_sec):
        raise InvalidInputError(
            f"{len(phonemes)} phonemes but {len(durations_sec)} durations"
        )
    counts = frame_counts(durations_sec, frame_rate)
    table = table if table is not None else PhonemeTable(phonemes)
    source_index = np.repeat(np.arange(len(phonemes), dtype=np.int64), counts)
    ids = table.ids(phonemes)[source_index] if len(phonemes) else np.zeros(0, dtype=np.int64)
    return PhonemeFrameSequence(
        phoneme_ids=ids,
        source_index=source_index,
        phonemes=tuple(phonemes),
        durations=tuple(float(x) for x in durations_sec),
        frame_rate=float(frame_rate),
        vocab_size=len(table),
    )


def read_phoneme_file(path: PathLike) -> tuple[list[str], list[float]]:
    """Read a .phn file: one "phoneme duration_sec" pair per line, # comments allowed."""
    phonemes: list[str] = []
    durations: list[float] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise InvalidInputError(f"{path}:{lineno}: expected 'phoneme duration', got {line!r}")
            try:
                dur = float(parts[1])
            except ValueError as e:
                raise InvalidInputError(f"{path}:{lineno}: bad duration {parts[1]!r}") from e
            phonemes.append(parts[0])
            durations.append(dur)
    return phonemes, durations


def write_phoneme_file(path: PathLike, phonemes: Sequence[str], durations: Sequence[float]) -> None:
    with atomic_open(path) as fh:
        for p, d in zip(phonemes, durations):
            fh.write(f"{p} {d:.6f}\n")
