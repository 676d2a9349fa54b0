"""
Requirements-checking middleware.

Wrap a StepFn to enforce declarative requirements (attached via
pcsvs.utils.requirements.requires or provided explicitly) during the first
N invocations, then skip checks for speed.

Example
-------
from pcsvs.utils.requirements import Requirement, requires
from pcsvs.middleware.requirements import with_requirements_check

@requires(Requirement("batch", "loss_mask"))
def step(state, batch, params):
    ...

step = with_requirements_check(step, max_checks=3)
"""

from __future__ import annotations

from typing import Sequence

from pcsvs.core.api import StepFn
from pcsvs.utils.requirements import (Requirement, RequirementError,
                                      get_requirements, validate_requirements)


def with_requirements_check(
    step: StepFn,
    *,
    extra: Sequence[Requirement] = (),
    max_checks: int = 3,
    raise_on_error: bool = True,
    record_warnings: bool = True,
) -> StepFn:
    """
    Validate attached (and extra) requirements for the first `max_checks` calls.

    Requirements may target "state", "batch" or "config" (checked against the
    step's params). Violations raise RequirementError; with
    raise_on_error=False they are only recorded under diag["pcsvs_requirements"].
    """
    call_count = 0

    def wrapped(state, batch, params):
        nonlocal call_count
        reqs: tuple[Requirement, ...] = ()
        errors: list = []
        warns: list = []
        should_check = call_count < max_checks

        if should_check:
            reqs = get_requirements(step) + tuple(extra)
            if reqs:
                errors, warns = validate_requirements(
                    config=params, state=state, batch=batch, requirements=reqs
                )
                if errors and raise_on_error:
                    call_count += 1
                    raise RequirementError(errors)

        st, diag = step(state, batch, params)

        if should_check and reqs and record_warnings and (errors or warns):
            (diag.setdefault("pcsvs_requirements", [])).append(
                {
                    "call": call_count,
                    "max_checks": max_checks,
                    "checked": len(reqs),
                    "errors": [
                        {"where": v.where, "path": v.path, "message": v.message}
                        for v in errors
                    ],
                    "warnings": [
                        {"where": v.where, "path": v.path, "message": v.message}
                        for v in warns
                    ],
                }
            )

        call_count += 1
        return st, diag

    setattr(wrapped, "__wrapped__", step)
    return wrapped  # type: ignore[return-value]
