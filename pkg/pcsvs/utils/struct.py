"""
Helpers for the plain-dict RunConfig / State / Batch containers.

`take` destructures batches and training state in step functions;
`merge_nested` and `set_nested` are the layering primitives behind
pcsvs.config.loader (defaults <- file <- --set flags).
"""

from __future__ import annotations

import copy
from operator import itemgetter
from typing import Any, Mapping, MutableMapping, Tuple

__all__ = [
    "take",
    "merge_nested",
    "set_nested",
]


def take(d: Mapping[str, Any], *keys: str) -> Tuple[Any, ...]:
    """
    Destructure required keys from a mapping in one expression.

    Always returns a tuple, so single-key access yields a 1-tuple:

        tokens, loss_mask = take(batch, "tokens", "loss_mask")
        (model,) = take(state, "model")

    Raises KeyError if any key is missing.
    """
    if not keys:
        return ()
    if len(keys) == 1:
        return (d[keys[0]],)
    return itemgetter(*keys)(d)


def merge_nested(base: Mapping[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    """
    Recursively merge `override` onto a deep copy of `base`.

    Mappings merge key by key; any other value (lists included) replaces.
    """
    out: dict[str, Any] = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = merge_nested(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def set_nested(d: MutableMapping[str, Any], path: str, value: Any) -> None:
    """
    Assign `value` at a dotted path, creating intermediate dicts as needed.

        set_nested(cfg, "sampling.top_k", 8)

    Raises TypeError when a path segment holds a non-mapping value.
    """
    segs = path.split(".")
    cur: Any = d
    for seg in segs[:-1]:
        nxt = cur.get(seg)
        if nxt is None:
            nxt = cur[seg] = {}
        elif not isinstance(nxt, MutableMapping):
            raise TypeError(
                f"Cannot set '{path}': segment '{seg}' holds {type(nxt).__name__}, not a mapping."
            )
        cur = nxt
    cur[segs[-1]] = value
