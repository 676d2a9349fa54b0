"""
Model configuration and the unified token id space.

One embedding table and one output head cover every discrete item:

    [0, 7)                          specials (pad, prompt, separators, end)
    [phoneme_offset, +phoneme_vocab)   frame phoneme ids
    [pitch_offset, +max_pitch_hz+1)    pitch in whole Hz; melody and range
                                       factor share these rows
    [acoustic_offset, +n_q*K_a)        unit k of codebook c at c*K_a + k
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

from pcsvs.errors import ConfigError, InvalidInputError

SPECIALS = ("<pad>", "<prompt>", "<sep_prompt>", "<sep_phoneme>", "<sep_melody>", "<sep_range>", "<end>")
PAD, PROMPT, SEP_PROMPT, SEP_PHONEME, SEP_MELODY, SEP_RANGE, END = range(len(SPECIALS))


@dataclass(frozen=True)
class ModelConfig:
    hidden: int = 256
    global_layers: int = 4
    global_heads: int = 4
    local_layers: int = 2
    local_heads: int = 4
    ff_mult: int = 4
    dropout: float = 0.0
    n_q: int = 3
    codebook_size: int = 64
    phoneme_vocab: int = 128
    max_pitch_hz: int = 1200
    max_slots: int = 1024
    use_range_factor: bool = True
    rescale_melody: bool = True

    def __post_init__(self) -> None:
        for name in ("global_heads", "local_heads"):
            heads = getattr(self, name)
            if heads <= 0 or self.hidden % heads:
                raise ConfigError(f"model.hidden={self.hidden} is not divisible by model.{name}={heads}")
        if self.n_q < 1 or self.codebook_size < 1:
            raise ConfigError("model.n_q and model.codebook_size must be >= 1")
        if self.max_pitch_hz < 1 or self.phoneme_vocab < 1 or self.max_slots < 1:
            raise ConfigError("model vocabulary sizes and max_slots must be positive")

    @property
    def ff(self) -> int:
        return self.hidden * self.ff_mult

    @property
    def vocab(self) -> "Vocab":
        return Vocab(self.phoneme_vocab, self.max_pitch_hz, self.n_q, self.codebook_size)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown model config keys: {sorted(unknown)}")
        return cls(**dict(data))

    @classmethod
    def full_scale(cls, **overrides: Any) -> "ModelConfig":
        """20 global / 6 local layers at width 1152."""
        base = dict(hidden=1152, global_layers=20, global_heads=16, local_layers=6, local_heads=16, codebook_size=1024)
        return cls(**{**base, **overrides})


@dataclass(frozen=True)
class Vocab:
    phoneme_vocab: int
    max_pitch_hz: int
    n_q: int
    codebook_size: int

    @property
    def phoneme_offset(self) -> int:
        return len(SPECIALS)

    @property
    def pitch_offset(self) -> int:
        return self.phoneme_offset + self.phoneme_vocab

    @property
    def acoustic_offset(self) -> int:
        return self.pitch_offset + self.max_pitch_hz + 1

    @property
    def size(self) -> int:
        return self.acoustic_offset + self.n_q * self.codebook_size

    def phoneme(self, pid: int) -> int:
        if not 0 <= pid < self.phoneme_vocab:
            raise InvalidInputError(f"phoneme id {pid} outside [0, {self.phoneme_vocab})")
        return self.phoneme_offset + pid

    def pitch(self, hz: int) -> int:
        if not 0 <= hz <= self.max_pitch_hz:
            raise InvalidInputError(f"pitch {hz} Hz outside [0, {self.max_pitch_hz}]")
        return self.pitch_offset + hz

    def acoustic(self, c: int, k: int) -> int:
        if not (0 <= c < self.n_q and 0 <= k < self.codebook_size):
            raise InvalidInputError(f"unit ({c}, {k}) outside {self.n_q} x {self.codebook_size}")
        return self.acoustic_offset + c * self.codebook_size + k

    def pitch_range(self, *, voiced_only: bool = False) -> tuple[int, int]:
        """Half-open token range of pitch ids; voiced_only drops 0 Hz."""
        return self.pitch_offset + (1 if voiced_only else 0), self.acoustic_offset

    def acoustic_range(self, c: int) -> tuple[int, int]:
        lo = self.acoustic_offset + c * self.codebook_size
        return lo, lo + self.codebook_size
