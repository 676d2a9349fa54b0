"""
Toy residual-VQ codec over log-mel frames.

encode: audio -> log-mel (one frame per hop) -> conv encoder -> RVQ indices
decode: indices -> summed codewords -> conv decoder -> log-mel -> Griffin-Lim

The unit interface (T x n_q indices in [0, K_a)) is what the transformer
consumes and emits; only the first n_q of the trained levels are used as units.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Mapping

import numpy as np
import torch
from einops import rearrange
from torch import nn

from pcsvs.codec.rvq import ResidualVQ
from pcsvs.errors import ConfigError, DataError, InvalidInputError, NotTrainedError
from pcsvs.ops.signal import log_mel, mel_to_waveform
from pcsvs.utils.io import PathLike, atomic_path

logger = logging.getLogger(__name__)

CODEC_FORMAT = 1


@dataclass(frozen=True)
class CodecConfig:
    sample_rate: int = 24000
    hop: int = 480
    n_fft: int = 1024
    n_mels: int = 64
    fmin: float = 0.0
    fmax: float | None = None
    hidden: int = 128
    latent_dim: int = 64
    n_levels: int = 12
    n_q: int = 3
    codebook_size: int = 64
    griffin_lim_iters: int = 32

    def __post_init__(self) -> None:
        if not 1 <= self.n_q <= self.n_levels:
            raise ConfigError(f"codec.n_q must be in [1, n_levels={self.n_levels}], got {self.n_q}")
        if self.codebook_size < 1:
            raise ConfigError(f"codec.codebook_size must be >= 1, got {self.codebook_size}")
        if self.codebook_size > np.iinfo(np.int16).max:
            raise ConfigError("codec.codebook_size must fit the int16 unit file format")
        if self.hop <= 0 or self.sample_rate <= 0:
            raise ConfigError("codec.hop and codec.sample_rate must be positive")

    @property
    def frame_rate(self) -> float:
        return self.sample_rate / self.hop

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CodecConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown codec config keys: {sorted(unknown)}")
        return cls(**dict(data))


def _conv_stack(c_in: int, hidden: int, c_out: int) -> nn.Sequential:
    # replicate padding keeps constant inputs constant at the edges
    return nn.Sequential(
        nn.Conv1d(c_in, hidden, 3, padding=1, padding_mode="replicate"),
        nn.GELU(),
        nn.Conv1d(hidden, hidden, 3, padding=1, padding_mode="replicate"),
        nn.GELU(),
        nn.Conv1d(hidden, c_out, 1),
    )


class ToyCodec(nn.Module):
    def __init__(self, config: CodecConfig) -> None:
        super().__init__()
        self.config = config
        self.encoder = _conv_stack(config.n_mels, config.hidden, config.latent_dim)
        self.decoder = _conv_stack(config.latent_dim, config.hidden, config.n_mels)
        self.rvq = ResidualVQ(config.n_levels, config.codebook_size, config.latent_dim)
        self.register_buffer("feature_mean", torch.zeros(config.n_mels))
        self.register_buffer("feature_std", torch.ones(config.n_mels))
        self.register_buffer("trained_steps", torch.tensor(0, dtype=torch.long))

    # -- features ---------------------------------------------------------

    def features(self, audio: np.ndarray, sample_rate: int) -> np.ndarray:
        cfg = self.config
        if sample_rate != cfg.sample_rate:
            raise InvalidInputError(
                f"audio sample rate {sample_rate} Hz, codec expects {cfg.sample_rate} Hz"
            )
        return log_mel(
            audio,
            sample_rate=cfg.sample_rate,
            n_fft=cfg.n_fft,
            hop=cfg.hop,
            n_mels=cfg.n_mels,
            fmin=cfg.fmin,
            fmax=cfg.fmax,
        )

    @torch.no_grad()
    def fit_normalization(self, feats: np.ndarray) -> None:
        """Per-bin mean/std over stacked training frames (N, n_mels)."""
        self.feature_mean.copy_(torch.as_tensor(feats.mean(axis=0)))
        self.feature_std.copy_(torch.as_tensor(np.maximum(feats.std(axis=0), 1e-3)))

    # -- networks ---------------------------------------------------------

    def embed(self, mel: torch.Tensor) -> torch.Tensor:
        """(B, T, n_mels) log-mel -> (B, T, latent_dim)."""
        x = (mel - self.feature_mean) / self.feature_std
        z = self.encoder(rearrange(x, "b t f -> b f t"))
        return rearrange(z, "b d t -> b t d")

    def reconstruct(self, z_q: torch.Tensor) -> torch.Tensor:
        """(B, T, latent_dim) -> (B, T, n_mels) log-mel."""
        y = self.decoder(rearrange(z_q, "b t d -> b d t"))
        return rearrange(y, "b f t -> b t f") * self.feature_std + self.feature_mean

    def forward(
        self, mel: torch.Tensor, n_active: int | None = None
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        z = self.embed(mel)
        z_q, idx, commit = self.rvq(z, n_active)
        return self.reconstruct(z_q), idx, commit

    # -- unit interface ---------------------------------------------------

    def _require_trained(self) -> None:
        if int(self.trained_steps) == 0:
            raise NotTrainedError("codec has not been trained; run train-codec first")

    @torch.no_grad()
    def encode_features(self, feats: np.ndarray, n_q: int | None = None) -> np.ndarray:
        self._require_trained()
        n_q = self.config.n_q if n_q is None else n_q
        if feats.shape[0] == 0:
            return np.zeros((0, n_q), dtype=np.int64)
        mel = torch.as_tensor(feats, dtype=torch.float32).unsqueeze(0)
        idx = self.rvq.quantize(self.embed(mel), n_q)
        return idx[0].cpu().numpy().astype(np.int64)

    def encode(self, audio: np.ndarray, sample_rate: int, n_q: int | None = None) -> np.ndarray:
        """Audio -> (T, n_q) unit grid with T = ceil(samples / hop)."""
        return self.encode_features(self.features(audio, sample_rate), n_q)

    def check_units(self, units: np.ndarray) -> np.ndarray:
        arr = np.asarray(units)
        if arr.ndim != 2 or arr.shape[1] > self.config.n_levels:
            raise InvalidInputError(
                f"units must be a (T, n_q<= {self.config.n_levels}) grid, got shape {arr.shape}"
            )
        if arr.size and (arr.min() < 0 or arr.max() >= self.config.codebook_size):
            raise InvalidInputError(
                f"unit index out of range [0, {self.config.codebook_size}): "
                f"min {arr.min()}, max {arr.max()}"
            )
        return arr.astype(np.int64)

    @torch.no_grad()
    def decode_features(self, units: np.ndarray) -> np.ndarray:
        arr = self.check_units(units)
        if arr.shape[0] == 0:
            return np.zeros((0, self.config.n_mels), dtype=np.float32)
        z_q = self.rvq.dequantize(torch.as_tensor(arr).unsqueeze(0))
        return self.reconstruct(z_q)[0].cpu().numpy().astype(np.float32)

    def decode(self, units: np.ndarray) -> np.ndarray:
        """(T, n_q) units -> T * hop samples (deterministic)."""
        cfg = self.config
        mel = self.decode_features(units)
        return mel_to_waveform(
            mel,
            sample_rate=cfg.sample_rate,
            n_fft=cfg.n_fft,
            hop=cfg.hop,
            fmin=cfg.fmin,
            fmax=cfg.fmax,
            n_iter=cfg.griffin_lim_iters,
        )

    # -- persistence ------------------------------------------------------

    def save(self, path: PathLike) -> None:
        with atomic_path(path) as tmp:
            torch.save(
                {"format": CODEC_FORMAT, "config": self.config.to_dict(), "state_dict": self.state_dict()},
                tmp,
            )

    @classmethod
    def load(cls, path: PathLike) -> "ToyCodec":
        try:
            blob = torch.load(path, map_location="cpu", weights_only=False)
        except (OSError, RuntimeError) as e:
            raise DataError(f"cannot load codec {path}: {e}") from e
        if blob.get("format") != CODEC_FORMAT:
            raise DataError(f"{path}: unsupported codec format {blob.get('format')!r}")
        codec = cls(CodecConfig.from_dict(blob["config"]))
        codec.load_state_dict(blob["state_dict"])
        codec.eval()
        return codec
