"""
Synthetic harmonic corpus for desk-scale runs and tests.

Each utterance is a sequence of sung vowels (with optional nasal onsets and
rests) rendered as a sum of harmonics. Two spectral tilts stand in for the two
genders; the average pitch sits well inside one side of the gender's range
threshold and the waveform is scaled into one of the three volume bands.
Everything is aligned to the frame grid: each phoneme lasts a whole number of
hops, so durations, F0 sidecars and audio agree exactly.
"""

from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from pcsvs.errors import InvalidInputError
from pcsvs.features.regulate import write_phoneme_file
from pcsvs.prompts.pipeline import VOLUME_BANDS
from pcsvs.utils.io import PathLike, write_f0, write_jsonl, write_wav

logger = logging.getLogger(__name__)

VOWELS = ("a", "e", "i", "o", "u")
NASAL = "n"
REST = "sil"
N_HARMONICS = 12

# Base pitch (Hz) per (gender, range); +-3 semitone melodies keep the voiced
# mean on the intended side of the 125 Hz / 305 Hz thresholds.
BASE_F0: dict[tuple[str, str], float] = {
    ("male", "low"): 100.0,
    ("male", "high"): 155.0,
    ("female", "low"): 245.0,
    ("female", "high"): 370.0,
}
# Harmonic amplitude ~ h ** -tilt
SPECTRAL_TILT = {"male": 1.6, "female": 0.6}
# Harmonic emphasised by each vowel
VOWEL_FORMANT = {"a": 3, "e": 4, "i": 6, "o": 2, "u": 1}


def _note_plan(rng: np.random.Generator, kind: str) -> list[tuple[str, int, float]]:
    """(phoneme, frames, semitone offset) triples; rests carry NaN."""
    plan: list[tuple[str, int, float]] = [(REST, int(rng.integers(3, 7)), np.nan)]
    for _ in range(int(rng.integers(3, 7))):
        semis = float(rng.integers(-3, 4)) if kind == "singing" else float(rng.uniform(-2, 2))
        if rng.random() < 0.3:
            plan.append((NASAL, int(rng.integers(2, 4)), semis))
        plan.append((VOWELS[int(rng.integers(len(VOWELS)))], int(rng.integers(8, 21)), semis))
    plan.append((REST, int(rng.integers(3, 7)), np.nan))
    return plan


def render_utterance(
    gender: str,
    vocal_range: str,
    target_rms: float,
    rng: np.random.Generator,
    *,
    sample_rate: int = 24000,
    hop: int = 480,
    kind: str = "singing",
) -> tuple[np.ndarray, np.ndarray, list[str], list[float]]:
    """Returns (audio, f0 per frame, phonemes, durations in seconds)."""
    if (gender, vocal_range) not in BASE_F0:
        raise InvalidInputError(f"no toy voice for {gender}/{vocal_range}")
    plan = _note_plan(rng, kind)
    frame_rate = sample_rate / hop
    base = BASE_F0[(gender, vocal_range)]

    f0_frames: list[np.ndarray] = []
    env_frames: list[np.ndarray] = []
    formant_frames: list[np.ndarray] = []
    for ph, n, semis in plan:
        if ph == REST:
            f0_frames.append(np.zeros(n))
        elif kind == "singing":
            f0_frames.append(np.full(n, base * 2.0 ** (semis / 12.0)))
        else:
            # speech: a gliding contour instead of held notes
            glide = np.linspace(semis, semis - 1.5, n)
            f0_frames.append(base * 2.0 ** (glide / 12.0))
        env_frames.append(np.full(n, 0.0 if ph == REST else (0.4 if ph == NASAL else 1.0)))
        formant_frames.append(np.full(n, VOWEL_FORMANT.get(ph, 1)))
    f0 = np.concatenate(f0_frames)
    env = np.concatenate(env_frames)
    formant = np.concatenate(formant_frames)

    n_samples = f0.shape[0] * hop
    t = np.arange(n_samples) / sample_rate
    f_inst = np.repeat(f0, hop) * (1.0 + 0.01 * np.sin(2 * np.pi * 5.5 * t))
    phase = 2 * np.pi * np.cumsum(f_inst) / sample_rate
    kernel = np.hanning(hop) / np.hanning(hop).sum()
    amp = np.convolve(np.repeat(env, hop), kernel, mode="same")
    formant_s = np.repeat(formant, hop)

    audio = np.zeros(n_samples)
    tilt = SPECTRAL_TILT[gender]
    for h in range(1, N_HARMONICS + 1):
        weight = h ** -tilt * np.where(formant_s == h, 2.5, 1.0)
        weight = np.where(h * f_inst < 0.45 * sample_rate, weight, 0.0)
        audio += weight * np.sin(h * phase)
    audio *= amp

    current = float(np.sqrt(np.mean(audio ** 2)))
    audio = audio * (target_rms / current)
    durations = [n / frame_rate for _, n, _ in plan]
    return audio.astype(np.float32), f0, [p for p, _, _ in plan], durations


def make_toy_corpus(
    out_dir: PathLike,
    n: int = 200,
    *,
    seed: int = 0,
    sample_rate: int = 24000,
    hop: int = 480,
    kind: str = "singing",
) -> Path:
    """
    Write `n` synthetic utterances plus a manifest; returns the manifest path.

    Genders, range sides and volume bands are assigned round-robin so every
    combination is represented, then pitch contours are drawn at random.
    Manifest rows also record the rendered volume and range categories.
    """
    if n <= 0:
        raise InvalidInputError(f"corpus size must be positive, got {n}")
    out = Path(out_dir)
    for sub in ("wav", "f0", "phn"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    volumes = list(VOLUME_BANDS)
    rows = []
    for i in range(n):
        gender = ("female", "male")[i % 2]
        vocal_range = ("low", "high")[(i // 2) % 2]
        volume = volumes[(i // 4) % len(volumes)]
        lo, hi = VOLUME_BANDS[volume]
        target = float(rng.uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo)))
        audio, f0, phonemes, durations = render_utterance(
            gender, vocal_range, target, rng, sample_rate=sample_rate, hop=hop, kind=kind
        )
        utt = f"{kind[:2]}{i:05d}"
        write_wav(out / "wav" / f"{utt}.wav", audio, sample_rate)
        write_f0(out / "f0" / f"{utt}.f0", f0)
        write_phoneme_file(out / "phn" / f"{utt}.phn", phonemes, durations)
        rows.append(
            {
                "id": utt,
                "audio": f"wav/{utt}.wav",
                "f0": f"f0/{utt}.f0",
                "phn": f"phn/{utt}.phn",
                "gender": gender,
                "volume": volume,
                "vocal_range": vocal_range,
            }
        )
    manifest = out / f"{kind}.jsonl"
    write_jsonl(manifest, rows)
    logger.info("wrote %d toy %s utterances to %s", n, kind, out)
    return manifest
