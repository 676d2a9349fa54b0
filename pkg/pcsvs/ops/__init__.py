from __future__ import annotations

from . import pitch, signal

__all__ = ["pitch", "signal"]
