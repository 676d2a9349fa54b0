from __future__ import annotations

import math
from typing import Any, Callable

import torch
from torch import nn

from pcsvs.core.api import Batch, Diag, Params, State, StepFn
from pcsvs.errors import DivergenceError, FrozenBackendError


def _append_mw_meta(diag: Diag, name: str, **meta: Any) -> None:
    (diag.setdefault("pcsvs_mw", [])).append({"name": name, **meta})


def with_nan_guard(step: StepFn) -> StepFn:
    """
    Stop training on a non-finite loss.

    Raises DivergenceError naming the step; otherwise records the checked loss.
    """

    def wrapped(state: State, batch: Batch, params: Params):
        st, dg = step(state, batch, params)
        loss = float(dg.get("loss", 0.0))
        if not math.isfinite(loss):
            raise DivergenceError(f"non-finite loss {loss} at step {st.get('step', '?')}")
        _append_mw_meta(dg, "nan_guard", loss=loss)
        return st, dg

    setattr(wrapped, "__wrapped__", step)
    return wrapped  # type: ignore[return-value]


def with_grad_clip(step: StepFn, *, max_norm: float = 1.0) -> StepFn:
    """
    Clip the global gradient norm right before the optimizer update.

    The wrapped step must keep its optimizer under state["optimizer"]; its
    step() is intercepted for the duration of the call. The pre-clip norm is
    recorded as grad_norm.
    """

    def wrapped(state: State, batch: Batch, params: Params):
        opt = state["optimizer"]
        norms: list[float] = []
        inner = opt.step
        own = "step" in vars(opt)

        def clipped(*args: Any, **kwargs: Any):
            tensors = [p for g in opt.param_groups for p in g["params"] if p.grad is not None]
            norms.append(float(torch.nn.utils.clip_grad_norm_(tensors, max_norm)))
            return inner(*args, **kwargs)

        opt.step = clipped
        try:
            st, dg = step(state, batch, params)
        finally:
            if own:
                opt.step = inner
            else:
                del opt.step
        _append_mw_meta(dg, "grad_clip", max_norm=max_norm, grad_norm=norms[-1] if norms else None)
        return st, dg

    setattr(wrapped, "__wrapped__", step)
    return wrapped  # type: ignore[return-value]


def with_frozen_backend_check(
    step: StepFn,
    *,
    backend: Callable[[State], nn.Module],
    every: int = 1,
) -> StepFn:
    """
    Assert that a frozen prompt-encoder backend is untouched by training.

    The checksum is taken once on the first call and compared after that call
    and then every `every` calls. A mismatch raises FrozenBackendError.
    """
    from pcsvs.text.backends import parameter_checksum

    reference: dict[str, str] = {}
    calls = 0

    def wrapped(state: State, batch: Batch, params: Params):
        nonlocal calls
        module = backend(state)
        if "sha256" not in reference:
            reference["sha256"] = parameter_checksum(module)
        st, dg = step(state, batch, params)
        if calls % every == 0:
            now = parameter_checksum(module)
            if now != reference["sha256"]:
                raise FrozenBackendError(
                    f"prompt-encoder backend changed during training at step {st.get('step', '?')}"
                )
            _append_mw_meta(dg, "frozen_backend", checksum=now[:16])
        calls += 1
        return st, dg

    setattr(wrapped, "__wrapped__", step)
    return wrapped  # type: ignore[return-value]
