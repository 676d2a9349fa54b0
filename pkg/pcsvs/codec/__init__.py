from __future__ import annotations

from .model import CodecConfig, ToyCodec
from .rvq import ResidualVQ, rvq_quantize, rvq_quantize_batch
from .train import (CodecReport, mel_distortion, reconstruction_loss,
                    train_codec, utilization)
from .units import read_units, write_units

__all__ = [
    "CodecConfig",
    "CodecReport",
    "ResidualVQ",
    "ToyCodec",
    "mel_distortion",
    "read_units",
    "reconstruction_loss",
    "rvq_quantize",
    "rvq_quantize_batch",
    "train_codec",
    "utilization",
    "write_units",
]
