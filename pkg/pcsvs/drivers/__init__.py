"""One-shot pipelines behind the CLI subcommands.

Each run_* function takes a resolved RunConfig (plus an optional RunDir for
hook sinks and reports) and delegates to the owning package.
"""

from __future__ import annotations

from .codec import decode_files, encode_files, run_train_codec
from .encoder import (build_backend, build_encoder, load_prompt_assets,
                      load_tuned_backend, run_finetune_encoder,
                      save_tuned_backend)
from .evaluate import load_eval_items, run_evaluate
from .prepare import fill_missing_f0, load_prepared, prepare_data
from .runs import RunDir, open_run, run_directory, seed_of, version_string
from .synthesize import (SynthesisResult, Synthesizer, parse_labels,
                         synthesize_manifest, synthesize_one)
from .toy import run_make_toy_corpus, run_toy_benchmark
from .train import run_train_model

__all__ = [
    "RunDir",
    "SynthesisResult",
    "Synthesizer",
    "build_backend",
    "build_encoder",
    "decode_files",
    "encode_files",
    "fill_missing_f0",
    "load_eval_items",
    "load_prepared",
    "load_prompt_assets",
    "load_tuned_backend",
    "open_run",
    "parse_labels",
    "prepare_data",
    "run_directory",
    "run_evaluate",
    "run_finetune_encoder",
    "run_make_toy_corpus",
    "run_toy_benchmark",
    "run_train_codec",
    "run_train_model",
    "save_tuned_backend",
    "seed_of",
    "synthesize_manifest",
    "synthesize_one",
    "version_string",
]
