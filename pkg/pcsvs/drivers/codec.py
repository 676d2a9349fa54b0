"""train-codec, encode and decode."""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Mapping, Sequence

from pcsvs.codec.model import CodecConfig, ToyCodec
from pcsvs.codec.train import train_codec
from pcsvs.codec.units import read_units, write_units
from pcsvs.utils.io import PathLike, read_wav, write_json, write_wav

from .prepare import load_prepared
from .runs import RunDir, seed_of, standard_hooks

logger = logging.getLogger(__name__)


def run_train_codec(cfg: Mapping[str, Any], run: RunDir | None = None) -> dict[str, Any]:
    records, _ = load_prepared(cfg["paths"]["data_dir"])
    config = CodecConfig.from_dict(cfg["codec"])
    extractor = ToyCodec(config)
    feats = []
    for rec in records:
        audio, sr = read_wav(rec.audio_path)
        feats.append(extractor.features(audio, sr))
    codec, report = train_codec(
        feats,
        config,
        train_cfg=cfg["codec_train"],
        seed=seed_of(cfg),
        hooks=standard_hooks(run, cfg),
    )
    codec.save(cfg["paths"]["codec"])
    out = report.to_dict()
    if run is not None:
        write_json(run.file("codec_report.json"), out)
    logger.info("codec written to %s", cfg["paths"]["codec"])
    return out


def encode_files(codec_path: PathLike, inputs: Sequence[PathLike], out_dir: PathLike) -> list[Path]:
    codec = ToyCodec.load(codec_path)
    out = Path(out_dir)
    written = []
    for src in inputs:
        audio, sr = read_wav(src)
        units = codec.encode(audio, sr)
        target = out / f"{Path(src).stem}.units"
        write_units(target, units, codec.config.codebook_size)
        written.append(target)
        logger.info("%s -> %s (%d frames)", src, target, units.shape[0])
    return written


def decode_files(codec_path: PathLike, inputs: Sequence[PathLike], out_dir: PathLike) -> list[Path]:
    codec = ToyCodec.load(codec_path)
    out = Path(out_dir)
    written = []
    for src in inputs:
        units, _ = read_units(src)
        target = out / f"{Path(src).stem}.wav"
        write_wav(target, codec.decode(units), codec.config.sample_rate)
        written.append(target)
        logger.info("%s -> %s", src, target)
    return written
