from __future__ import annotations

import logging
from typing import Callable

from pcsvs.core.api import Diag, Hook, State

logger = logging.getLogger(__name__)


def checkpoint_hook(save: Callable[[int, State], None], *, every: int) -> Hook:
    """Call save(k, state) after every `every`-th step (k counts from 0)."""
    if every <= 0:
        raise ValueError(f"checkpoint interval must be positive, got {every}")

    def hook(k: int, state: State, diag: Diag) -> None:
        if (k + 1) % every == 0:
            save(k, state)
            logger.info("checkpoint written after step %d", k + 1)

    return hook
