import numpy as np
import pytest

from pcsvs.errors import DataError, InvalidInputError, NotTrainedError
from pcsvs.metrics.gender import LogMelGenderClassifier, gender_classify

SR = 24000


def _voice(f0: float, amplitude: float, seconds: float = 0.6) -> np.ndarray:
    t = np.arange(int(SR * seconds)) / SR
    wave = sum(np.sin(2 * np.pi * h * f0 * t) / h for h in range(1, 6))
    return (amplitude * wave / np.max(np.abs(wave))).astype(np.float32)


@pytest.fixture(scope="module")
def clips():
    rng = np.random.default_rng(3)
    audios, genders = [], []
    for i in range(8):
        audios.append(_voice(100.0 + 6.0 * i, rng.uniform(0.1, 0.5)))
        genders.append("male")
        audios.append(_voice(260.0 + 12.0 * i, rng.uniform(0.1, 0.5)))
        genders.append("female")
    return audios, genders


@pytest.fixture(scope="module")
def classifier(clips):
    return LogMelGenderClassifier(n_mels=24).fit(clips[0], SR, clips[1])


def test_fitted_classifier_separates_training_voices(classifier, clips):
    audios, genders = clips
    assert classifier.accuracy(audios, SR, genders) >= 90.0
    label, confidence = gender_classify(audios[0], SR, classifier)
    assert label in ("female", "male")
    assert 0.5 <= confidence <= 1.0


def test_prediction_ignores_overall_loudness(classifier):
    quiet = classifier.predict(_voice(110.0, 0.12), SR)[0]
    loud = classifier.predict(_voice(110.0, 0.45), SR)[0]
    assert quiet == loud


def test_save_load_preserves_predictions(classifier, clips, tmp_path):
    path = tmp_path / "gender.joblib"
    classifier.save(path)
    loaded = LogMelGenderClassifier.load(path)
    assert loaded.n_mels == 24
    for audio in clips[0][:4]:
        label, confidence = loaded.predict(audio, SR)
        assert label == classifier.predict(audio, SR)[0]
        assert confidence == pytest.approx(classifier.predict(audio, SR)[1])


def test_untrained_classifier_refuses_to_work(tmp_path):
    clf = LogMelGenderClassifier()
    with pytest.raises(NotTrainedError):
        clf.predict(_voice(200.0, 0.2), SR)
    with pytest.raises(NotTrainedError):
        clf.save(tmp_path / "x.joblib")


def test_fit_validates_labels(clips):
    audios, _ = clips
    with pytest.raises(InvalidInputError):
        LogMelGenderClassifier().fit(audios[:2], SR, ["male", "male"])
    with pytest.raises(InvalidInputError):
        LogMelGenderClassifier().fit(audios[:2], SR, ["male", "other"])
    with pytest.raises(InvalidInputError):
        LogMelGenderClassifier().fit(audios[:2], SR, ["male"])


def test_load_errors_are_data_errors(tmp_path):
    with pytest.raises(DataError):
        LogMelGenderClassifier.load(tmp_path / "missing.joblib")
