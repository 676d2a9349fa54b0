from __future__ import annotations

from .core import with_frozen_backend_check, with_grad_clip, with_nan_guard
from .requirements import with_requirements_check

__all__ = [
    "with_requirements_check",
    "with_nan_guard",
    "with_grad_clip",
    "with_frozen_backend_check",
]
