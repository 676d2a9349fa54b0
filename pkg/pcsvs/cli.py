"""
pcsvs command line.

    pcsvs [--config FILE] [--set section.key=value ...] [--log-level LEVEL] COMMAND ...

Every command resolves the layered config, validates it before doing any
work, logs it, and records a run directory under paths.work_dir.
Exit codes: 0 success, 2 configuration error, 3 data error, 4 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from pcsvs.config import dump_config, resolve_config, validate_run_config
from pcsvs.errors import ConfigError, DataError
from pcsvs.features.manifest import CORPUS_KINDS

from .drivers import (RunDir, decode_files, encode_files, prepare_data,
                      run_directory, run_evaluate, run_finetune_encoder,
                      run_make_toy_corpus, run_toy_benchmark, run_train_codec,
                      run_train_model, seed_of, synthesize_manifest,
                      synthesize_one)
from .drivers.runs import LOG_FORMAT

logger = logging.getLogger("pcsvs.cli")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_RUNTIME = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcsvs",
        description="Prompt-controlled singing voice synthesis",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    parser.add_argument("--config", type=Path, default=None, help="YAML run config (layered over the defaults)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config value, e.g. train.steps=50 (repeatable)")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("prepare-data", help="validate manifests, apply data-mix caps, build the phoneme table")
    p.add_argument("--manifest", type=Path, help="manifest to ingest (overrides paths.<kind>_manifest)")
    p.add_argument("--kind", choices=CORPUS_KINDS, default="singing")

    sub.add_parser("train-codec", help="train the residual-VQ codec on the prepared corpus")

    for name, what in (("encode", "wav files to unit files"), ("decode", "unit files to wav files")):
        p = sub.add_parser(name, help=f"codec: {what}")
        p.add_argument("inputs", nargs="+", type=Path)
        p.add_argument("--out", type=Path, required=True, help="output directory")

    sub.add_parser("train-model", help="train the multi-scale transformer")
    sub.add_parser("finetune-encoder", help="multi-label fine-tuning of the prompt-encoder backend")

    p = sub.add_parser("synthesize", help="sing a melody and lyrics in the style a prompt describes")
    p.add_argument("--prompt", help="style instruction, e.g. \"Generate a song by a lady singer.\"")
    p.add_argument("--melody", type=Path, help="F0 file (one Hz value per frame)")
    p.add_argument("--lyrics", type=Path, help="phoneme file (.phn)")
    p.add_argument("--labels", help="intended labels, e.g. gender=female,volume=high (default: keyword lookup)")
    p.add_argument("--manifest", type=Path, help="batch mode: synthesize every utterance of this manifest")
    p.add_argument("--kind", choices=CORPUS_KINDS, default="singing", help="corpus kind of the batch manifest")
    p.add_argument("--out", type=Path, required=True, help="output wav (single) or directory (batch)")

    p = sub.add_parser("evaluate", help="score synthesized audio against the intended attributes")
    p.add_argument("--manifest", type=Path, required=True, help="evaluation manifest written by synthesize")
    p.add_argument("--report", type=Path, help="JSON report path (a .txt table is written beside it)")

    p = sub.add_parser("make-toy-corpus", help="write a synthetic toy corpus")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--kind", choices=CORPUS_KINDS, default="singing")

    p = sub.add_parser("toy-benchmark", help="end-to-end controllability and pitch ablations on a toy corpus")
    p.add_argument("--out", type=Path, required=True)
    return parser


def _flag_overrides(args: argparse.Namespace) -> list[str]:
    if args.command == "prepare-data" and args.manifest is not None:
        return [f"paths.{args.kind}_manifest={args.manifest}"]
    return []


def _check_synthesize_args(args: argparse.Namespace) -> None:
    single = [args.prompt, args.melody, args.lyrics]
    if args.manifest is None and any(v is None for v in single):
        raise ConfigError("synthesize needs --prompt, --melody and --lyrics (or --manifest for batch mode)")
    if args.manifest is not None and any(v is not None for v in single):
        raise ConfigError("--manifest cannot be combined with --prompt/--melody/--lyrics")


def _synthesize(cfg: Mapping[str, Any], args: argparse.Namespace, run: RunDir) -> Any:
    _check_synthesize_args(args)
    if args.manifest is not None:
        return {"eval_manifest": str(synthesize_manifest(cfg, args.manifest, args.out, kind=args.kind))}
    return synthesize_one(cfg, prompt=args.prompt, melody=args.melody, lyrics=args.lyrics,
                          out=args.out, labels=args.labels)


def _evaluate(cfg: Mapping[str, Any], args: argparse.Namespace, run: RunDir) -> Any:
    report = run_evaluate(cfg, args.manifest, args.report or run.file("report.json"))
    print(report.to_table())
    return None


Handler = Callable[[Mapping[str, Any], argparse.Namespace, RunDir], Any]

COMMANDS: dict[str, Handler] = {
    "prepare-data": lambda cfg, args, run: prepare_data(cfg),
    "train-codec": lambda cfg, args, run: run_train_codec(cfg, run),
    "encode": lambda cfg, args, run: [str(p) for p in encode_files(cfg["paths"]["codec"], args.inputs, args.out)],
    "decode": lambda cfg, args, run: [str(p) for p in decode_files(cfg["paths"]["codec"], args.inputs, args.out)],
    "train-model": lambda cfg, args, run: run_train_model(cfg, run),
    "finetune-encoder": lambda cfg, args, run: run_finetune_encoder(cfg, run),
    "synthesize": _synthesize,
    "evaluate": _evaluate,
    "make-toy-corpus": lambda cfg, args, run: {
        "manifest": str(run_make_toy_corpus(args.out, n=args.n, seed=seed_of(cfg), kind=args.kind, cfg=cfg))
    },
    "toy-benchmark": lambda cfg, args, run: run_toy_benchmark(cfg, args.out, run),
}


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        cfg = resolve_config(args.config, list(args.set) + _flag_overrides(args))
        validate_run_config(cfg, args.command)
        logger.info("resolved config:\n%s", dump_config(cfg))
        with run_directory(cfg, args.command, ["pcsvs", *argv]) as run:
            result = COMMANDS[args.command](cfg, args, run)
            if result is not None:
                print(json.dumps(result, indent=2, sort_keys=True, default=str))
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except DataError as e:
        logger.error("data error: %s", e)
        return EXIT_DATA
    except Exception as e:
        logger.exception("%s failed: %s", args.command, e)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
