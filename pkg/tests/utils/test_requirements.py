import pytest

from pcsvs.errors import ConfigError
from pcsvs.utils.requirements import (Requirement, RequirementError,
                                      check_requirements, get_requirements,
                                      requires, validate_requirements)


def test_validate_requirements_ok_and_types_and_predicate():
    reqs = [
        Requirement("config", "model.hidden", type=int, predicate=lambda h: h > 0),
        Requirement("state", "step", type=int),
        Requirement("batch", "loss_mask"),
    ]
    config = {"model": {"hidden": 256}}
    state = {"step": 3}
    batch = {"loss_mask": [1, 1, 0]}
    errors, warns = validate_requirements(
        config=config, state=state, batch=batch, requirements=reqs
    )
    assert errors == []
    assert warns == []


def test_validate_requirements_missing_and_type_violation_and_predicate_violation():
    reqs = [
        Requirement("config", "model.hidden", type=int, predicate=lambda h: h > 0),
        Requirement("config", "train.lr", type=int),  # float on purpose
        Requirement("batch", "tokens"),  # missing key
    ]
    config = {"model": {"hidden": -4}, "train": {"lr": 1e-4}}
    errors, warns = validate_requirements(
        config=config, state={}, batch={}, requirements=reqs
    )
    assert len(errors) == 3
    msgs = "\n".join(v.message for v in errors)
    assert "Predicate returned False" in msgs
    assert "Expected type" in msgs
    assert "Missing key" in msgs
    assert warns == []


def test_warn_severity_goes_to_warnings_and_missing_container_is_reported():
    reqs = [
        Requirement("config", "hooks.timing", severity="warn"),
        Requirement("state", "step"),
    ]
    errors, warns = validate_requirements(config={}, requirements=reqs)
    assert [v.path for v in warns] == ["hooks.timing"]
    assert len(errors) == 1
    assert "is None" in errors[0].message


def test_optional_requirement_is_skipped_when_absent():
    reqs = [Requirement("config", "paths.speech_manifest", required=False, type=str)]
    errors, _ = validate_requirements(config={"paths": {}}, requirements=reqs)
    assert errors == []


def test_requires_decorator_and_get_requirements_collects_chain():
    @requires(Requirement("batch", "loss_mask"))
    def inner(state, batch, params):
        return state, {}

    def wrapper(fn):
        def wrapped(*a, **k):
            return fn(*a, **k)

        setattr(wrapped, "__wrapped__", fn)
        return wrapped

    reqs = get_requirements(wrapper(inner))
    assert any(r.where == "batch" and r.path == "loss_mask" for r in reqs)


def test_check_requirements_raises_config_error_subclass():
    reqs = [
        Requirement("config", "model.hidden", message="model.hidden is required"),
        Requirement("config", "sampling.top_k", severity="warn"),
    ]
    with pytest.raises(ConfigError) as ei:
        check_requirements(reqs, config={})
    err = ei.value
    assert isinstance(err, RequirementError)
    s = str(err)
    assert "Requirements not satisfied" in s
    assert "[ERROR] config.model.hidden: model.hidden is required" in s
    assert len(err.violations) == 1


def test_check_requirements_returns_warnings():
    reqs = [Requirement("config", "sampling.top_k", severity="warn")]
    warns = check_requirements(reqs, config={"sampling": {}})
    assert len(warns) == 1 and warns[0].severity == "warn"
