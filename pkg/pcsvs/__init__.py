from __future__ import annotations

from . import hooks, middleware, ops
from .core.api import init_fn, run_fn

__all__ = [
    "init_fn",
    "run_fn",
    "middleware",
    "hooks",
    "ops",
]

# Keep in sync with pyproject.toml [project].version
__version__ = "0.1.0"
