"""
make-toy-corpus and toy-benchmark.

The benchmark runs the whole pipeline on a synthetic corpus: prepare, codec,
then one transformer per pitch variant (full, without the range factor,
additionally without melody rescaling), each synthesizing and evaluating a
held-out toy set. It reports the controllability table and whether the full
model meets the toy targets and the ablations rank in the expected order.
"""

from __future__ import annotations

import copy
import logging
from pathlib import Path
from typing import Any, Mapping

from pcsvs.features.synthetic import make_toy_corpus
from pcsvs.utils.io import PathLike, atomic_open, write_json

from .codec import run_train_codec
from .evaluate import run_evaluate
from .prepare import prepare_data
from .runs import RunDir, seed_of
from .synthesize import synthesize_manifest
from .train import run_train_model

logger = logging.getLogger(__name__)

PITCH_VARIANTS: dict[str, dict[str, bool]] = {
    "full": {},
    "no_range_factor": {"use_range_factor": False},
    "no_range_factor_no_rescale": {"use_range_factor": False, "rescale_melody": False},
}
TOY_TARGETS = {"gender": 90.0, "volume": 90.0, "vocal_range": 85.0, "rffe": 0.15}
ABLATION_MARGIN = 5.0


def run_make_toy_corpus(
    out_dir: PathLike, *, n: int, seed: int = 0, kind: str = "singing", cfg: Mapping[str, Any] | None = None
) -> Path:
    data = (cfg or {}).get("data", {})
    return make_toy_corpus(
        out_dir, n, seed=seed, kind=kind,
        sample_rate=int(data.get("sample_rate", 24000)), hop=int(data.get("hop", 480)),
    )


def _gender(row: Mapping[str, Any]) -> float | None:
    values = [v for v in (row["gender"]["female"], row["gender"]["male"]) if v is not None]
    return sum(values) / len(values) if values else None


def summarize(results: Mapping[str, Mapping[str, Any]]) -> dict[str, Any]:
    """Target and ablation-order checks over per-variant EvalReport dicts."""
    full = results["full"]
    checks: dict[str, bool | None] = {}
    for key in ("gender", "volume", "vocal_range"):
        value = _gender(full) if key == "gender" else full[key]
        checks[f"full_{key}_target"] = None if value is None else value >= TOY_TARGETS[key]
    checks["full_rffe_target"] = None if full["rffe"] is None else full["rffe"] <= TOY_TARGETS["rffe"]
    ranges = {name: r["vocal_range"] for name, r in results.items()}
    if all(ranges.get(v) is not None for v in PITCH_VARIANTS):
        checks["range_factor_ablation"] = ranges["full"] - ranges["no_range_factor"] >= ABLATION_MARGIN
        checks["rescale_ablation"] = ranges["no_range_factor_no_rescale"] < ranges["no_range_factor"]
    return {"checks": checks, "targets": dict(TOY_TARGETS), "ablation_margin": ABLATION_MARGIN}


def benchmark_table(results: Mapping[str, Mapping[str, Any]]) -> str:
    def pct(v: float | None) -> str:
        return "-" if v is None else f"{v:.1f}"

    lines = [f"{'variant':<28} | {'Gender':>6} | {'Volume':>6} | {'Range':>6} | {'R-FFE':>6}"]
    lines.append("-" * len(lines[0]))
    for name, r in results.items():
        rffe = "-" if r["rffe"] is None else f"{r['rffe']:.3f}"
        lines.append(
            f"{name:<28} | {pct(_gender(r)):>6} | {pct(r['volume']):>6} | {pct(r['vocal_range']):>6} | {rffe:>6}"
        )
    return "\n".join(lines)


def run_toy_benchmark(
    cfg: Mapping[str, Any],
    out_dir: PathLike,
    run: RunDir | None = None,
    *,
    variants: Mapping[str, Mapping[str, bool]] = PITCH_VARIANTS,
) -> dict[str, Any]:
    out = Path(out_dir)
    toy = cfg["toy"]
    seed = seed_of(cfg)
    train_manifest = run_make_toy_corpus(out / "corpus", n=int(toy["n_utterances"]), seed=seed, cfg=cfg)
    eval_manifest = run_make_toy_corpus(out / "heldout", n=int(toy["n_eval"]), seed=int(toy["eval_seed"]), cfg=cfg)

    base = copy.deepcopy(dict(cfg))
    base["paths"].update(
        singing_manifest=str(train_manifest),
        speech_manifest=None,
        data_dir=str(out / "data"),
        codec=str(out / "codec.pt"),
        gender_classifier=None,
        encoder_checkpoint=None,
    )
    prepare_data(base)
    if run is not None:
        run.prefix = "codec."
    run_train_codec(base, run)

    results: dict[str, dict[str, Any]] = {}
    for name, overrides in variants.items():
        vcfg = copy.deepcopy(base)
        vcfg["model"].update(overrides)
        vcfg["paths"]["checkpoint"] = str(out / name / "model.pt")
        if run is not None:
            run.prefix = f"{name}."
        run_train_model(vcfg, run)
        synth_manifest = synthesize_manifest(vcfg, eval_manifest, out / name / "synth")
        report = run_evaluate(vcfg, synth_manifest, out / name / "report.json").to_dict()
        report.pop("items")
        results[name] = report
    if run is not None:
        run.prefix = ""

    summary = {"variants": results, **(summarize(results) if "full" in results else {})}
    table = benchmark_table(results)
    write_json(out / "benchmark.json", summary)
    with atomic_open(out / "benchmark.txt") as fh:
        fh.write(table + "\n")
    logger.info("toy benchmark\n%s\nchecks: %s", table, summary.get("checks"))
    return summary
