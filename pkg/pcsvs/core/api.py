"""pcsvs core training-loop API

Every learned component (codec, transformer, prompt-encoder heads) trains
through the same small contract.

Key type aliases (plain dicts keyed by strings)
- State: Dict[str, Any]
    What a step advances: modules, optimizer, step counter, rng handles. The
    container is a plain dict so middleware and hooks can inspect it without
    knowing which component is training.

- Batch: Dict[str, Any]
    One training batch produced by a batch stream (tensors plus bookkeeping
    such as utterance ids). A step reads it and never keeps it.

- Params: Mapping[str, Any]
    The resolved run configuration (see pcsvs.config) plus a "backend" record
    ({"device": ..., "seed": ...}) added by init_fn. Read-only during a run.

- Diag: Dict[str, Any]
    Per-step diagnostics: "loss" (float) by convention, middleware audit
    records under diag["pcsvs_mw"] (list), and per-step timings added by the
    run loop under diag["timings"]["step_sec"].

Flow
1) init_fn(cfg) seeds python/numpy/torch and returns (state0, params).
2) A StepFn step(state, batch, params) -> (state, diag) does one optimizer
   update. Middleware composes as (StepFn) -> StepFn (pcsvs.middleware).
3) run_fn(init, params, batch_stream, step=..., n_steps=..., hooks=...)
   pulls batches, times each step and calls hooks hook(k, state, diag).
   Hooks are observers: they write CSV/NDJSON lines or checkpoints but never
   change state.
"""
from __future__ import annotations

import copy
import random
from time import perf_counter
from typing import (Any, Callable, Dict, Iterable, Iterator, Mapping, Tuple,
                    Union, cast)

import numpy as np
import torch

State = Dict[str, Any]
Batch = Dict[str, Any]
Params = Mapping[str, Any]
Diag = Dict[str, Any]

StepFn = Callable[[State, Batch, Params], Tuple[State, Diag]]
Hook = Callable[[int, State, Diag], None]
BatchStream = Union[Iterable[Batch], Iterator[Batch], Callable[[int], Batch]]


def seed_everything(seed: int) -> None:
    """Seed python, numpy and torch global generators."""
    random.seed(seed)
    np.random.seed(seed % (2**32))
    torch.manual_seed(seed)


def init_fn(cfg: Mapping[str, Any], *, device: str | None = None) -> Tuple[State, Params]:
    """
    Normalize a resolved run config into (state0, params) and seed every RNG.

    params is a deep copy of cfg with params["backend"] = {"device", "seed"};
    state0 starts at {"step": 0}. Callers add their modules and optimizer to
    the state before handing it to run_fn.
    """
    params = copy.deepcopy(dict(cfg))
    seed = int(cast(Any, params.get("seed", 0)))
    seed_everything(seed)
    backend = dict(cast(Mapping[str, Any], params.get("backend", {})))
    backend["device"] = torch.device(device or backend.get("device") or "cpu")
    backend["seed"] = seed
    params["backend"] = backend
    state0: State = {"step": 0}
    return state0, params


def _as_iter(batch_stream: BatchStream) -> Iterator[Batch]:
    if callable(batch_stream):
        k = 0

        def gen() -> Iterator[Batch]:
            nonlocal k
            while True:
                yield cast(Batch, batch_stream(k))
                k += 1

        return gen()
    if hasattr(batch_stream, "__iter__"):
        return iter(cast(Iterable[Batch], batch_stream))
    raise TypeError("batch_stream must be an Iterable[Batch] or Callable[[int], Batch]")


def run_fn(
    init: State,
    params: Params,
    batch_stream: BatchStream,
    *,
    step: StepFn,
    n_steps: int,
    hooks: Tuple[Hook, ...] = (),
) -> Tuple[State, Mapping[str, Any]]:
    """
    Run up to n_steps training steps and invoke observational hooks.

    Stops early when an iterable batch stream is exhausted. The report holds
    per-step wall times, the per-step losses found in diag["loss"], the
    number of steps actually run and the last diag.
    """
    st: State = init
    report: Dict[str, Any] = {
        "timings": {"per_step_sec": []},
        "losses": [],
        "n_steps": 0,
        "last_diag": None,
    }
    biter = _as_iter(batch_stream)

    for k in range(n_steps):
        try:
            batch = next(biter)
        except StopIteration:
            break
        t0 = perf_counter()
        st, diag = step(st, batch, params)
        dur = perf_counter() - t0

        (diag.setdefault("timings", {}))["step_sec"] = dur
        report["timings"]["per_step_sec"].append(dur)
        if "loss" in diag:
            report["losses"].append(float(diag["loss"]))
        st["step"] = int(st.get("step", 0)) + 1

        for hook in hooks:
            hook(k, st, diag)

        report["last_diag"] = diag
        report["n_steps"] = k + 1

    return st, report
