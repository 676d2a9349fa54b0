from __future__ import annotations

from .checkpoint import checkpoint_hook
from .losses import loss_hook
from .timing import timer_hook

__all__ = [
    "checkpoint_hook",
    "loss_hook",
    "timer_hook",
]
