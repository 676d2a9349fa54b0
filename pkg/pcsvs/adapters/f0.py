"""
F0 extraction adapters.

Both return one value per codec frame (T = ceil(samples / hop)), in Hz, with 0
on unvoiced frames. "pyin" uses librosa; "harvest" uses pyworld (optional
`harvest` extra).
"""

from __future__ import annotations

import librosa
import numpy as np

from pcsvs.errors import ConfigError, InvalidInputError
from pcsvs.ops.signal import frame_count

F0_METHODS = ("pyin", "harvest")


def _fit_length(f0: np.ndarray, n_frames: int) -> np.ndarray:
    f0 = np.nan_to_num(np.asarray(f0, dtype=np.float64), nan=0.0)
    if f0.shape[0] >= n_frames:
        return f0[:n_frames]
    return np.pad(f0, (0, n_frames - f0.shape[0]))


def extract_f0(
    audio: np.ndarray,
    sample_rate: int,
    *,
    hop: int = 480,
    method: str = "pyin",
    fmin: float = 60.0,
    fmax: float = 1000.0,
) -> np.ndarray:
    x = np.asarray(audio, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError(f"audio must be mono, got shape {x.shape}")
    n_frames = frame_count(x.shape[0], hop)
    if n_frames == 0:
        return np.zeros(0)

    if method == "pyin":
        f0, voiced, _ = librosa.pyin(
            x, fmin=fmin, fmax=fmax, sr=sample_rate, hop_length=hop, center=True
        )
        f0 = np.where(voiced, f0, 0.0)
    elif method == "harvest":
        try:
            import pyworld
        except ImportError as e:
            raise ConfigError("F0 method 'harvest' needs pyworld (pip install py-pcsvs[harvest])") from e
        f0, _ = pyworld.harvest(
            x, sample_rate, f0_floor=fmin, f0_ceil=fmax, frame_period=1000.0 * hop / sample_rate
        )
    else:
        raise ConfigError(f"unknown F0 method {method!r}; expected one of {F0_METHODS}")
    return _fit_length(f0, n_frames)
