from __future__ import annotations

import json
from typing import IO, Any, Optional

from pcsvs.core.api import Diag, Hook, State


def timer_hook(
    *,
    sink: Optional[IO[str]] = None,
    fmt: str = "csv",
    include_meta: bool = False,
) -> Hook:
    """
    Create a timing hook that records per-step wall-clock time.

    run_fn attaches diag["timings"]["step_sec"]; this hook writes it to `sink`
    as "k,step_sec" CSV lines or NDJSON records.

    Args:
        sink: Optional text file-like (opened in append mode). If None the hook
              is a no-op, which keeps call sites uniform.
        fmt: 'csv' or 'ndjson'.
        include_meta: With fmt == 'ndjson', also write the middleware audit
              records (diag["pcsvs_mw"]).
    """
    if fmt not in ("csv", "ndjson"):
        raise ValueError(f"Unsupported fmt: {fmt}")

    def hook(k: int, state: State, diag: Diag) -> None:
        step_sec = diag.get("timings", {}).get("step_sec")
        if step_sec is None or sink is None:
            return
        if fmt == "csv":
            sink.write(f"{k},{step_sec}\n")
        else:
            rec: dict[str, Any] = {"k": k, "step_sec": step_sec}
            if include_meta:
                rec["pcsvs_mw"] = diag.get("pcsvs_mw", [])
            sink.write(json.dumps(rec, default=str) + "\n")
        sink.flush()

    return hook
