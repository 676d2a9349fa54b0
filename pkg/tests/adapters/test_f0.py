import numpy as np
import pytest

from pcsvs.adapters.f0 import extract_f0
from pcsvs.errors import ConfigError, InvalidInputError

SR = 24000


def test_pyin_tracks_a_steady_tone():
    t = np.arange(SR) / SR
    tone = 0.3 * np.sin(2 * np.pi * 220.0 * t)
    f0 = extract_f0(tone, SR, hop=480)
    assert f0.shape == (50,)
    voiced = f0[f0 > 0]
    assert voiced.size > 30
    assert np.median(voiced) == pytest.approx(220.0, rel=0.03)


def test_output_length_follows_hop():
    f0 = extract_f0(np.zeros(1000), SR, hop=480)
    assert f0.shape == (3,)
    assert np.all(f0 == 0)
    assert extract_f0(np.zeros(0), SR).shape == (0,)


def test_bad_arguments():
    with pytest.raises(InvalidInputError):
        extract_f0(np.zeros((2, 100)), SR)
    with pytest.raises(ConfigError):
        extract_f0(np.zeros(960), SR, method="crepe")
