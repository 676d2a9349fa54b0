from __future__ import annotations

import json
from collections import deque
from typing import IO, Any, Optional

from pcsvs.core.api import Diag, Hook, State


def loss_hook(
    *,
    sink: Optional[IO[str]] = None,
    window: int = 50,
    history: Optional[list[dict[str, Any]]] = None,
) -> Hook:
    """
    Record the raw and moving-average training loss as NDJSON lines.

    Each record is {"k", "loss", "loss_smooth"} where loss_smooth is the mean
    over the last `window` steps. Records also go to `history` when given.
    """
    recent: deque[float] = deque(maxlen=window)

    def hook(k: int, state: State, diag: Diag) -> None:
        if "loss" not in diag:
            return
        loss = float(diag["loss"])
        recent.append(loss)
        rec = {"k": k, "loss": loss, "loss_smooth": sum(recent) / len(recent)}
        for key in ("lr", "n_active"):
            if key in diag:
                rec[key] = diag[key]
        if history is not None:
            history.append(rec)
        if sink is not None:
            sink.write(json.dumps(rec) + "\n")
            sink.flush()

    return hook
