"""
Range/melody decoupled pitch representation.

A frame-level F0 sequence (Hz, 0 = unvoiced) splits into
- a range factor: the rounded mean of the voiced frames, and
- a melody: voiced frames multiplicatively rescaled to a fixed mean
  (230 Hz by default) and rounded, unvoiced frames left at 0.

Scaling every voiced frame by one factor is a constant offset in log-frequency,
so the melody keeps its intervals while losing the singer's register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from pcsvs.errors import InvalidInputError
from pcsvs.ops.signal import round_half_away

MELODY_MEAN_HZ = 230.0


@dataclass(frozen=True)
class DecoupledPitch:
    range_factor: int
    melody: np.ndarray  # int64 per frame, 0 on unvoiced frames

    def __post_init__(self) -> None:
        if self.melody.ndim != 1:
            raise InvalidInputError("melody must be one-dimensional")


def _as_f0(f0: np.ndarray | list[float]) -> np.ndarray:
    arr = np.asarray(f0, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"F0 must be one-dimensional, got shape {arr.shape}")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInputError("F0 values must be finite and >= 0")
    return arr


def voiced_mean(f0: np.ndarray | list[float]) -> float:
    """Arithmetic mean over voiced frames (value > 0)."""
    arr = _as_f0(f0)
    voiced = arr[arr > 0]
    if voiced.size == 0:
        raise InvalidInputError("F0 sequence has no voiced frame")
    return float(voiced.mean())


def decompose_f0(
    f0: np.ndarray | list[float], target_mean: float = MELODY_MEAN_HZ
) -> DecoupledPitch:
    arr = _as_f0(f0)
    mean = voiced_mean(arr)
    mask = arr > 0
    melody = np.zeros(arr.shape[0], dtype=np.int64)
    melody[mask] = round_half_away(arr[mask] * (target_mean / mean))
    return DecoupledPitch(range_factor=int(round_half_away(mean)), melody=melody)


def recompose_f0(
    d: DecoupledPitch, target_mean: float = MELODY_MEAN_HZ
) -> np.ndarray:
    """Inverse of decompose_f0 up to the two integer roundings."""
    if d.range_factor <= 0:
        raise InvalidInputError(f"range_factor must be positive, got {d.range_factor}")
    melody = np.asarray(d.melody, dtype=np.float64)
    out = np.zeros_like(melody)
    mask = melody > 0
    out[mask] = melody[mask] * (d.range_factor / target_mean)
    return out


def melody_tokens(
    f0: np.ndarray | list[float],
    *,
    rescale: bool = True,
    target_mean: float = MELODY_MEAN_HZ,
) -> np.ndarray:
    """Integer melody sequence fed to the sequence builder.

    With rescale=False the raw F0 is only rounded (the no-rescaling ablation).
    """
    if rescale:
        return decompose_f0(f0, target_mean).melody
    arr = _as_f0(f0)
    return round_half_away(arr)


def clamp_pitch_tokens(values: np.ndarray, max_hz: int) -> tuple[np.ndarray, int]:
    """Clip integer pitch tokens into [0, max_hz]; returns (clipped, n_clamped)."""
    arr = np.asarray(values, dtype=np.int64)
    n_clamped = int(np.count_nonzero(arr > max_hz))
    return np.clip(arr, 0, max_hz), n_clamped
