"""Exception hierarchy shared by every pcsvs module.

The CLI maps these onto process exit codes (see pcsvs.cli):
- ConfigError (and RequirementError) -> 2
- DataError -> 3
- anything else -> 4
"""

from __future__ import annotations


class PcsvsError(Exception):
    """Base class for all pcsvs errors."""


class InvalidInputError(PcsvsError, ValueError):
    """A precondition on an operation's input was violated."""


class ConfigError(PcsvsError):
    """The configuration (or an asset it references) cannot be used."""


class DataError(PcsvsError):
    """A corpus row or sidecar file is missing or inconsistent."""

    def __init__(self, message: str, *, utterance: str | None = None) -> None:
        self.utterance = utterance
        super().__init__(f"[{utterance}] {message}" if utterance else message)


class CapacityError(InvalidInputError):
    """A sequence exceeds the configured model capacity."""


class DecodingError(PcsvsError):
    """Autoregressive decoding produced an invalid token."""

    def __init__(self, message: str, *, position: int) -> None:
        self.position = position
        super().__init__(f"{message} (position {position})")


class UndefinedMetricError(InvalidInputError):
    """A metric is undefined for the given inputs."""


class NotTrainedError(PcsvsError):
    """A learned component was used before training."""


class FrozenBackendError(PcsvsError):
    """A frozen prompt-encoder backend changed its parameters."""


class DivergenceError(PcsvsError):
    """Training produced a non-finite loss."""
