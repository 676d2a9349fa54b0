from __future__ import annotations

import math

import librosa
import numpy as np

from pcsvs.errors import InvalidInputError


def round_half_away(x: np.ndarray | float) -> np.ndarray:
    """
    Round half away from zero (0.5 -> 1, -0.5 -> -1), returned as int64.

    numpy's default is banker's rounding; pitch tokens need a fixed rule.
    """
    arr = np.asarray(x, dtype=np.float64)
    return (np.sign(arr) * np.floor(np.abs(arr) + 0.5)).astype(np.int64)


def rms(waveform: np.ndarray) -> float:
    """Amplitude root-mean-square; 0.0 for an empty waveform."""
    x = np.asarray(waveform, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.square(x))))


def frame_count(num_samples: int, hop: int) -> int:
    """Number of acoustic frames covering `num_samples`: ceil(samples / hop)."""
    if hop <= 0:
        raise InvalidInputError(f"hop must be positive, got {hop}")
    return int(math.ceil(num_samples / hop))


def log_mel(
    audio: np.ndarray,
    *,
    sample_rate: int,
    n_fft: int,
    hop: int,
    n_mels: int,
    fmin: float = 0.0,
    fmax: float | None = None,
    floor: float = 1e-5,
) -> np.ndarray:
    """
    Log-mel features, one row per hop: shape (ceil(len/hop), n_mels).

    Audio is zero-padded to a whole number of hops so frame t covers samples
    [t*hop, (t+1)*hop).
    """
    x = np.asarray(audio, dtype=np.float32)
    n_frames = frame_count(x.shape[0], hop)
    if n_frames == 0:
        return np.zeros((0, n_mels), dtype=np.float32)
    x = np.pad(x, (0, n_frames * hop - x.shape[0]))
    mel = librosa.feature.melspectrogram(
        y=x,
        sr=sample_rate,
        n_fft=n_fft,
        hop_length=hop,
        n_mels=n_mels,
        fmin=fmin,
        fmax=fmax,
        center=True,
        power=1.0,
    )
    # center=True yields n_frames + 1 columns for a whole number of hops
    mel = mel[:, :n_frames]
    return np.log(np.maximum(mel, floor)).T.astype(np.float32)


def mel_to_waveform(
    features: np.ndarray,
    *,
    sample_rate: int,
    n_fft: int,
    hop: int,
    fmin: float = 0.0,
    fmax: float | None = None,
    n_iter: int = 32,
) -> np.ndarray:
    """
    Invert log-mel rows (T, n_mels) to T*hop samples with Griffin-Lim.

    The phase initialization is seeded so reconstruction is deterministic.
    """
    feats = np.asarray(features, dtype=np.float32)
    n_frames = feats.shape[0]
    if n_frames == 0:
        return np.zeros(0, dtype=np.float32)
    mel = np.exp(feats.T)
    # Append a copy of the final frame so the centered STFT covers every hop
    mel = np.concatenate([mel, mel[:, -1:]], axis=1)
    stft_mag = librosa.feature.inverse.mel_to_stft(
        mel, sr=sample_rate, n_fft=n_fft, power=1.0, fmin=fmin, fmax=fmax
    )
    audio = librosa.griffinlim(
        stft_mag,
        n_iter=n_iter,
        hop_length=hop,
        center=True,
        length=n_frames * hop,
        random_state=0,
    )
    return audio.astype(np.float32)
