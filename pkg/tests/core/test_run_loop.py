import io
import json
import math

import pytest
import torch

import pcsvs.core.api as core_api
from pcsvs.errors import DivergenceError, FrozenBackendError
from pcsvs.hooks import checkpoint_hook, loss_hook, timer_hook
from pcsvs.middleware import (with_frozen_backend_check, with_grad_clip,
                              with_nan_guard)


def _regression_step():
    """One SGD update of a scalar weight towards batch["target"]."""

    def step(state, batch, params):
        w, opt = state["w"], state["optimizer"]
        opt.zero_grad()
        loss = (w - batch["target"]) ** 2
        loss.backward()
        opt.step()
        return state, {"loss": float(loss)}

    return step


def _state(lr=0.1):
    w = torch.nn.Parameter(torch.tensor(0.0))
    return {"step": 0, "w": w, "optimizer": torch.optim.SGD([w], lr=lr)}


def test_init_fn_adds_backend_and_does_not_mutate_cfg():
    cfg = {"seed": 5, "model": {"hidden": 8}}
    state0, params = core_api.init_fn(cfg)
    assert state0 == {"step": 0}
    assert params["backend"]["seed"] == 5
    assert params["backend"]["device"] == torch.device("cpu")
    assert "backend" not in cfg
    params["model"]["hidden"] = 16
    assert cfg["model"]["hidden"] == 8


def test_init_fn_seeds_torch():
    core_api.init_fn({"seed": 11})
    a = torch.rand(3)
    core_api.init_fn({"seed": 11})
    assert torch.equal(a, torch.rand(3))


def test_run_fn_counts_steps_and_collects_losses():
    _, params = core_api.init_fn({"seed": 0})
    state, report = core_api.run_fn(
        _state(), params, lambda k: {"target": torch.tensor(1.0)},
        step=_regression_step(), n_steps=20,
    )
    assert state["step"] == 20
    assert report["n_steps"] == 20
    assert len(report["losses"]) == 20
    assert len(report["timings"]["per_step_sec"]) == 20
    # the loss of a convex quadratic under small SGD steps decreases
    assert report["losses"][-1] < report["losses"][0]
    assert "step_sec" in report["last_diag"]["timings"]


def test_run_fn_stops_when_iterable_stream_is_exhausted():
    batches = [{"target": torch.tensor(1.0)}] * 3
    state, report = core_api.run_fn(
        _state(), {}, batches, step=_regression_step(), n_steps=10
    )
    assert report["n_steps"] == 3
    assert state["step"] == 3


def test_run_fn_rejects_non_iterable_stream():
    with pytest.raises(TypeError):
        core_api.run_fn(_state(), {}, 42, step=_regression_step(), n_steps=1)  # type: ignore[arg-type]


def test_hooks_write_loss_timing_and_checkpoints():
    loss_sink, timing_sink = io.StringIO(), io.StringIO()
    history: list = []
    saved: list = []
    hooks = (
        loss_hook(sink=loss_sink, window=2, history=history),
        timer_hook(sink=timing_sink),
        checkpoint_hook(lambda k, st: saved.append(k), every=2),
    )
    core_api.run_fn(
        _state(), {}, lambda k: {"target": torch.tensor(1.0)},
        step=_regression_step(), n_steps=5, hooks=hooks,
    )
    records = [json.loads(line) for line in loss_sink.getvalue().splitlines()]
    assert [r["k"] for r in records] == [0, 1, 2, 3, 4]
    assert records[1]["loss_smooth"] == pytest.approx((records[0]["loss"] + records[1]["loss"]) / 2)
    assert history == records
    rows = timing_sink.getvalue().splitlines()
    assert len(rows) == 5 and rows[0].startswith("0,")
    assert saved == [1, 3]


def test_checkpoint_hook_rejects_bad_interval():
    with pytest.raises(ValueError):
        checkpoint_hook(lambda k, st: None, every=0)


def test_timer_hook_ndjson_includes_middleware_records():
    sink = io.StringIO()
    hook = timer_hook(sink=sink, fmt="ndjson", include_meta=True)
    hook(0, {}, {"timings": {"step_sec": 0.5}, "pcsvs_mw": [{"name": "nan_guard"}]})
    rec = json.loads(sink.getvalue())
    assert rec == {"k": 0, "step_sec": 0.5, "pcsvs_mw": [{"name": "nan_guard"}]}
    with pytest.raises(ValueError):
        timer_hook(fmt="xml")


def test_nan_guard_raises_on_non_finite_loss():
    def step(state, batch, params):
        return state, {"loss": math.nan}

    with pytest.raises(DivergenceError):
        with_nan_guard(step)({"step": 7}, {}, {})


def test_nan_guard_records_finite_loss():
    _, diag = with_nan_guard(_regression_step())(_state(), {"target": torch.tensor(2.0)}, {})
    assert diag["pcsvs_mw"][-1]["name"] == "nan_guard"


def test_grad_clip_limits_update_and_restores_optimizer():
    state = _state(lr=1.0)
    opt = state["optimizer"]
    wrapped = with_grad_clip(_regression_step(), max_norm=0.5)
    _, diag = wrapped(state, {"target": torch.tensor(100.0)}, {})
    # the raw gradient is -200; clipped to norm 0.5 with lr 1
    assert float(state["w"]) == pytest.approx(0.5, abs=1e-5)
    rec = diag["pcsvs_mw"][-1]
    assert rec["name"] == "grad_clip"
    assert rec["grad_norm"] == pytest.approx(200.0)
    assert "step" not in vars(opt)


def test_frozen_backend_check_passes_when_untouched_and_detects_change():
    frozen = torch.nn.Linear(2, 2)

    wrapped = with_frozen_backend_check(_regression_step(), backend=lambda st: frozen)
    state = _state()
    _, diag = wrapped(state, {"target": torch.tensor(1.0)}, {})
    assert diag["pcsvs_mw"][-1]["name"] == "frozen_backend"

    def tampering(state, batch, params):
        with torch.no_grad():
            frozen.weight.add_(1.0)
        return state, {"loss": 0.0}

    wrapped = with_frozen_backend_check(tampering, backend=lambda st: frozen)
    with pytest.raises(FrozenBackendError):
        wrapped({"step": 0}, {}, {})
