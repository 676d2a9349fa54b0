"""File helpers: JSON lines, F0 sidecars, wav files and atomic writes."""

from __future__ import annotations

import json
import os
import tempfile
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Any, Iterable, Iterator, Mapping

import numpy as np
import soundfile as sf

from pcsvs.errors import DataError

PathLike = str | os.PathLike[str]


@contextmanager
def atomic_path(path: PathLike) -> Iterator[Path]:
    """Yield a temp path next to `path`; rename over `path` only on success."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{target.name}.", dir=target.parent)
    os.close(fd)
    try:
        yield Path(tmp)
        os.replace(tmp, target)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


@contextmanager
def atomic_open(path: PathLike, mode: str = "w") -> Iterator[IO[Any]]:
    with atomic_path(path) as tmp:
        with open(tmp, mode, encoding=None if "b" in mode else "utf-8") as fh:
            yield fh


def read_jsonl(path: PathLike) -> list[dict[str, Any]]:
    rows: list[dict[str, Any]] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                rows.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise DataError(f"{path}:{lineno}: invalid JSON ({e.msg})") from e
    return rows


def write_jsonl(path: PathLike, rows: Iterable[Mapping[str, Any]]) -> None:
    with atomic_open(path) as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")


def write_json(path: PathLike, obj: Mapping[str, Any]) -> None:
    with atomic_open(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, ensure_ascii=False)
        fh.write("\n")


def read_f0(path: PathLike) -> np.ndarray:
    """Read an F0 sidecar: one float (Hz) per frame, 0 for unvoiced."""
    try:
        values = np.loadtxt(path, dtype=np.float64, ndmin=1)
    except OSError as e:
        raise DataError(f"cannot read F0 sidecar {path}: {e}") from e
    return values


def write_f0(path: PathLike, f0: np.ndarray) -> None:
    with atomic_open(path) as fh:
        np.savetxt(fh, np.asarray(f0, dtype=np.float64), fmt="%.4f")


def read_wav(path: PathLike) -> tuple[np.ndarray, int]:
    """Read mono float32 audio; multi-channel files are averaged."""
    try:
        audio, sr = sf.read(path, dtype="float32", always_2d=False)
    except (RuntimeError, sf.LibsndfileError) as e:
        raise DataError(f"cannot read audio {path}: {e}") from e
    if audio.ndim > 1:
        audio = audio.mean(axis=1)
    return audio, int(sr)


def wav_num_samples(path: PathLike) -> tuple[int, int]:
    """(frames, sample_rate) without decoding the file."""
    try:
        info = sf.info(str(path))
    except (RuntimeError, sf.LibsndfileError) as e:
        raise DataError(f"cannot stat audio {path}: {e}") from e
    return int(info.frames), int(info.samplerate)


def write_wav(path: PathLike, audio: np.ndarray, sample_rate: int) -> None:
    with atomic_path(path) as tmp:
        sf.write(str(tmp), np.asarray(audio, dtype=np.float32), sample_rate, format="WAV", subtype="FLOAT")
