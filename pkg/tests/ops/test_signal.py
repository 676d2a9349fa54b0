import numpy as np
import pytest

from pcsvs.errors import InvalidInputError
from pcsvs.ops.signal import frame_count, log_mel, mel_to_waveform, rms


def test_rms_of_constant_and_empty_signal():
    assert rms(np.full(100, 0.5)) == pytest.approx(0.5)
    assert rms(np.zeros(0)) == 0.0


def test_rms_of_sine_is_amplitude_over_sqrt2():
    t = np.arange(24000) / 24000
    assert rms(0.2 * np.sin(2 * np.pi * 220 * t)) == pytest.approx(0.2 / np.sqrt(2), rel=1e-3)


def test_frame_count_is_ceiling():
    assert frame_count(960, 480) == 2
    assert frame_count(961, 480) == 3
    assert frame_count(0, 480) == 0
    with pytest.raises(InvalidInputError):
        frame_count(10, 0)


def test_log_mel_has_one_row_per_hop():
    audio = np.random.default_rng(0).standard_normal(480 * 10 + 7).astype(np.float32) * 0.1
    feats = log_mel(audio, sample_rate=24000, n_fft=1024, hop=480, n_mels=40)
    assert feats.shape == (11, 40)
    assert feats.dtype == np.float32
    assert log_mel(np.zeros(0), sample_rate=24000, n_fft=1024, hop=480, n_mels=40).shape == (0, 40)


def test_mel_to_waveform_length_and_determinism():
    t = np.arange(480 * 20) / 24000
    audio = (0.1 * np.sin(2 * np.pi * 220 * t)).astype(np.float32)
    feats = log_mel(audio, sample_rate=24000, n_fft=1024, hop=480, n_mels=64)
    a = mel_to_waveform(feats, sample_rate=24000, n_fft=1024, hop=480, n_iter=8)
    b = mel_to_waveform(feats, sample_rate=24000, n_fft=1024, hop=480, n_iter=8)
    assert a.shape == (480 * 20,)
    np.testing.assert_array_equal(a, b)
    assert rms(a) > 0.01
