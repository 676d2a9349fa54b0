"""
Gender classifiers for evaluation.

The default is a scikit-learn logistic regression on loudness-normalized
log-mel statistics (per-bin mean and spread over the louder frames).
Anything with `predict(audio, sample_rate) -> (label, confidence)` can stand
in for it.
"""

from __future__ import annotations

import logging
from typing import Any, Protocol, Sequence

import joblib
import numpy as np
from sklearn.linear_model import LogisticRegression
from sklearn.pipeline import make_pipeline
from sklearn.preprocessing import StandardScaler

from pcsvs.errors import DataError, InvalidInputError, NotTrainedError
from pcsvs.ops.signal import log_mel
from pcsvs.prompts.labels import CATEGORIES
from pcsvs.utils.io import PathLike, atomic_path

logger = logging.getLogger(__name__)

CLASSIFIER_FORMAT = 1


class GenderClassifier(Protocol):
    def predict(self, audio: np.ndarray, sample_rate: int) -> tuple[str, float]: ...


class LogMelGenderClassifier:
    def __init__(self, *, n_mels: int = 40, n_fft: int = 1024, hop: int = 480, seed: int = 0) -> None:
        self.n_mels = n_mels
        self.n_fft = n_fft
        self.hop = hop
        self.seed = seed
        self.pipeline: Any = None

    def features(self, audio: np.ndarray, sample_rate: int) -> np.ndarray:
        mel = log_mel(audio, sample_rate=sample_rate, n_fft=self.n_fft, hop=self.hop, n_mels=self.n_mels)
        if mel.shape[0] == 0:
            raise InvalidInputError("cannot classify empty audio")
        energy = mel.mean(axis=1)
        frames = mel[energy >= np.percentile(energy, 50)]
        # subtracting the frame level removes overall loudness
        frames = frames - frames.mean(axis=1, keepdims=True)
        return np.concatenate([frames.mean(axis=0), frames.std(axis=0)]).astype(np.float64)

    def fit(self, audios: Sequence[np.ndarray], sample_rate: int, genders: Sequence[str]) -> "LogMelGenderClassifier":
        if len(audios) != len(genders):
            raise InvalidInputError(f"{len(audios)} clips but {len(genders)} labels")
        unknown = set(genders) - set(CATEGORIES["gender"])
        if unknown:
            raise InvalidInputError(f"unknown gender labels {sorted(unknown)}")
        if len(set(genders)) < 2:
            raise InvalidInputError("gender classifier needs examples of both classes")
        X = np.stack([self.features(a, sample_rate) for a in audios])
        self.pipeline = make_pipeline(
            StandardScaler(), LogisticRegression(max_iter=2000, C=1.0, random_state=self.seed)
        )
        self.pipeline.fit(X, np.asarray(genders))
        logger.info("gender classifier fitted on %d clips (train accuracy %.1f%%)",
                    len(audios), 100.0 * self.pipeline.score(X, np.asarray(genders)))
        return self

    def predict(self, audio: np.ndarray, sample_rate: int) -> tuple[str, float]:
        if self.pipeline is None:
            raise NotTrainedError("gender classifier is not trained")
        probs = self.pipeline.predict_proba(self.features(audio, sample_rate)[None])[0]
        best = int(np.argmax(probs))
        return str(self.pipeline.classes_[best]), float(probs[best])

    def accuracy(self, audios: Sequence[np.ndarray], sample_rate: int, genders: Sequence[str]) -> float:
        hits = [self.predict(a, sample_rate)[0] == g for a, g in zip(audios, genders)]
        return 100.0 * float(np.mean(hits)) if hits else 0.0

    def save(self, path: PathLike) -> None:
        if self.pipeline is None:
            raise NotTrainedError("refusing to save an untrained gender classifier")
        blob = {
            "format": CLASSIFIER_FORMAT,
            "params": {"n_mels": self.n_mels, "n_fft": self.n_fft, "hop": self.hop, "seed": self.seed},
            "pipeline": self.pipeline,
        }
        with atomic_path(path) as tmp:
            joblib.dump(blob, tmp)

    @classmethod
    def load(cls, path: PathLike) -> "LogMelGenderClassifier":
        try:
            blob = joblib.load(path)
        except (OSError, EOFError) as e:
            raise DataError(f"cannot load gender classifier {path}: {e}") from e
        if blob.get("format") != CLASSIFIER_FORMAT:
            raise DataError(f"{path}: unsupported classifier format {blob.get('format')!r}")
        clf = cls(**blob["params"])
        clf.pipeline = blob["pipeline"]
        return clf


def gender_classify(audio: np.ndarray, sample_rate: int, classifier: GenderClassifier) -> tuple[str, float]:
    return classifier.predict(audio, sample_rate)
