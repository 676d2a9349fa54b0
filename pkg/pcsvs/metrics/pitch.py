"""
Range-normalized F0 frame error.

Both sequences' voiced parts are multiplicatively rescaled to the mean of
their two voiced means, then the usual frame error is counted: a frame is
wrong on a voicing mismatch, or when both are voiced and the pitch ratio
exceeds 1 + threshold in either direction.
"""

from __future__ import annotations

import numpy as np

from pcsvs.errors import InvalidInputError, UndefinedMetricError

FFE_THRESHOLD = 0.2


def _f0(name: str, values: np.ndarray) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional")
    if np.any(arr < 0) or not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} values must be finite and >= 0")
    return arr


def rescale_to_common_mean(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    va, vb = a > 0, b > 0
    if not va.any() or not vb.any():
        raise UndefinedMetricError("R-FFE is undefined when either F0 sequence is entirely unvoiced")
    ma, mb = a[va].mean(), b[vb].mean()
    m = 0.5 * (ma + mb)
    return np.where(va, a * (m / ma), 0.0), np.where(vb, b * (m / mb), 0.0)


def ffe(f0_syn: np.ndarray, f0_ref: np.ndarray, *, threshold: float = FFE_THRESHOLD) -> float:
    syn, ref = _f0("f0_syn", f0_syn), _f0("f0_ref", f0_ref)
    if syn.shape != ref.shape:
        raise InvalidInputError(f"F0 lengths differ: {syn.shape[0]} vs {ref.shape[0]}")
    if syn.size == 0:
        raise UndefinedMetricError("frame error of empty sequences")
    vs, vr = syn > 0, ref > 0
    both = vs & vr
    ratio = np.ones_like(syn)
    ratio[both] = np.maximum(syn[both] / ref[both], ref[both] / syn[both])
    errors = (vs != vr) | (both & (ratio > 1.0 + threshold))
    return float(np.count_nonzero(errors)) / syn.size


def rffe(f0_syn: np.ndarray, f0_ref: np.ndarray, *, threshold: float = FFE_THRESHOLD) -> float:
    """Fraction in [0, 1]; symmetric and invariant to a joint transposition."""
    syn, ref = _f0("f0_syn", f0_syn), _f0("f0_ref", f0_ref)
    if syn.shape != ref.shape:
        raise InvalidInputError(f"F0 lengths differ: {syn.shape[0]} vs {ref.shape[0]}")
    syn, ref = rescale_to_common_mean(syn, ref)
    return ffe(syn, ref, threshold=threshold)
