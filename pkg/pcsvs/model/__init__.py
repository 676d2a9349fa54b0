from __future__ import annotations

from .config import ModelConfig, Vocab
from .data import ModelBatcher, TrainingExample, build_examples
from .layout import (TokenLayoutSequence, build_sequence, decode_segments,
                     pad_layouts)
from .sampling import (InferenceResult, SamplingConfig, infer,
                       sequence_log_prob)
from .train import (LoadedCheckpoint, ModelTrainReport, compute_loss,
                    load_checkpoint, masked_cross_entropy, save_checkpoint,
                    train_model, train_step)
from .transformer import MultiScaleTransformer

__all__ = [
    "InferenceResult",
    "LoadedCheckpoint",
    "ModelBatcher",
    "ModelConfig",
    "ModelTrainReport",
    "MultiScaleTransformer",
    "SamplingConfig",
    "TokenLayoutSequence",
    "TrainingExample",
    "Vocab",
    "build_examples",
    "build_sequence",
    "compute_loss",
    "decode_segments",
    "infer",
    "load_checkpoint",
    "masked_cross_entropy",
    "pad_layouts",
    "save_checkpoint",
    "sequence_log_prob",
    "train_model",
    "train_step",
]
