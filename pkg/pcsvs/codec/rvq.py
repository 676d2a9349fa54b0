"""
Residual vector quantization.

`rvq_quantize` is the plain numpy reference: stage c picks the codeword nearest
(Euclidean) to the current residual and subtracts it. `ResidualVQ` is the
trainable torch version used by the codec, with k-means initialization, EMA
codebook updates, dead-code replacement and quantizer dropout.

Row `ORIGIN_CODE` of every trained codebook is pinned to the zero vector, so
the greedy search can always keep the residual unchanged and its energy never
grows from one stage to the next.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import torch
import torch.nn.functional as F
from einops import rearrange
from sklearn.cluster import KMeans
from torch import nn

from pcsvs.errors import InvalidInputError

ORIGIN_CODE = 0


def _check_codebooks(codebooks: Sequence[np.ndarray], dim: int) -> list[np.ndarray]:
    if len(codebooks) == 0:
        raise InvalidInputError("at least one codebook is required")
    books = [np.asarray(cb, dtype=np.float64) for cb in codebooks]
    for c, cb in enumerate(books):
        if cb.ndim != 2 or cb.shape[0] == 0:
            raise InvalidInputError(f"codebook {c} must be a non-empty (K, dim) table, got {cb.shape}")
        if cb.shape[1] != dim:
            raise InvalidInputError(f"codebook {c} has dim {cb.shape[1]}, feature has dim {dim}")
    return books


def rvq_quantize(
    feature: np.ndarray, codebooks: Sequence[np.ndarray]
) -> tuple[list[int], list[float]]:
    """
    Greedy residual quantization of one vector.

    Returns (indices, energies): one index per stage, and the squared residual
    norm before stage 1 followed by the norm after each stage.
    """
    x = np.asarray(feature, dtype=np.float64)
    if x.ndim != 1:
        raise InvalidInputError(f"feature must be a vector, got shape {x.shape}")
    books = _check_codebooks(codebooks, x.shape[0])
    residual = x.copy()
    indices: list[int] = []
    energies = [float(residual @ residual)]
    for cb in books:
        k = int(np.argmin(np.sum((cb - residual) ** 2, axis=1)))
        indices.append(k)
        residual = residual - cb[k]
        energies.append(float(residual @ residual))
    return indices, energies


def rvq_quantize_batch(
    features: np.ndarray, codebooks: Sequence[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized rvq_quantize over rows: (indices (N, C), final residuals (N, dim))."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2:
        raise InvalidInputError(f"features must be (N, dim), got shape {x.shape}")
    books = _check_codebooks(codebooks, x.shape[1])
    residual = x.copy()
    indices = np.zeros((x.shape[0], len(books)), dtype=np.int64)
    for c, cb in enumerate(books):
        d = (
            np.sum(residual ** 2, axis=1, keepdims=True)
            - 2.0 * residual @ cb.T
            + np.sum(cb ** 2, axis=1)[None, :]
        )
        indices[:, c] = np.argmin(d, axis=1)
        residual = residual - cb[indices[:, c]]
    return indices, residual


class ResidualVQ(nn.Module):
    """
    Stack of EMA vector quantizers applied to successive residuals.

    Codebooks live in buffers and are never touched by the optimizer; they
    move only through k-means initialization and the EMA update in training
    mode. Codes whose EMA usage falls below `dead_threshold` are re-seeded
    from random residuals of the current batch. Row ORIGIN_CODE stays at zero
    and is excluded from both the EMA update and re-seeding.
    """

    def __init__(
        self,
        n_levels: int,
        codebook_size: int,
        dim: int,
        *,
        decay: float = 0.99,
        eps: float = 1e-5,
        dead_threshold: float = 0.5,
    ) -> None:
        super().__init__()
        if n_levels < 1 or codebook_size < 1:
            raise InvalidInputError("ResidualVQ needs >= 1 level and >= 1 code")
        self.n_levels = n_levels
        self.codebook_size = codebook_size
        self.dim = dim
        self.decay = decay
        self.eps = eps
        self.dead_threshold = dead_threshold
        self.register_buffer("codebooks", torch.randn(n_levels, codebook_size, dim) * 0.1)
        self.codebooks[:, ORIGIN_CODE] = 0.0
        self.register_buffer("ema_count", torch.ones(n_levels, codebook_size))
        self.register_buffer("ema_sum", self.codebooks.clone())
        self.register_buffer("initted", torch.tensor(False))

    @torch.no_grad()
    def init_kmeans(self, latents: torch.Tensor, seed: int = 0) -> None:
        """
        Fit each level's codebook with k-means on the residuals of the levels before it.

        The k-means centers fill every row but ORIGIN_CODE; residuals are then
        taken against the nearest row of the whole table, origin included.
        """
        x = rearrange(latents, "... d -> (...) d").detach().cpu().double().numpy()
        rng = np.random.default_rng(seed)
        n_clusters = self.codebook_size - 1
        if 0 < x.shape[0] < n_clusters:
            pad = x[rng.integers(x.shape[0], size=n_clusters - x.shape[0])]
            x = np.concatenate([x, pad + 1e-3 * rng.standard_normal(pad.shape)])
        residual = x
        for level in range(self.n_levels):
            book = np.zeros((self.codebook_size, self.dim))
            if n_clusters:
                km = KMeans(n_clusters=n_clusters, n_init=1, random_state=seed + level).fit(residual)
                book[1:] = km.cluster_centers_
            d = (
                (residual ** 2).sum(1, keepdims=True)
                - 2.0 * residual @ book.T
                + (book ** 2).sum(1)[None, :]
            )
            labels = d.argmin(axis=1)
            residual = residual - book[labels]
            counts = np.bincount(labels, minlength=self.codebook_size).astype(np.float64)
            self.codebooks[level] = torch.as_tensor(book, dtype=self.codebooks.dtype)
            self.ema_count[level] = torch.as_tensor(np.maximum(counts, 1.0), dtype=self.ema_count.dtype)
            self.ema_sum[level] = self.codebooks[level] * self.ema_count[level].unsqueeze(1)
        self.initted.fill_(True)

    def _nearest(self, residual: torch.Tensor, level: int) -> torch.Tensor:
        return torch.cdist(residual, self.codebooks[level]).argmin(dim=-1)

    @torch.no_grad()
    def _ema_update(self, level: int, residual: torch.Tensor, idx: torch.Tensor) -> None:
        onehot = F.one_hot(idx, self.codebook_size).type(residual.dtype)
        count = onehot.sum(0)
        total = onehot.t() @ residual
        self.ema_count[level].mul_(self.decay).add_(count, alpha=1 - self.decay)
        self.ema_sum[level].mul_(self.decay).add_(total, alpha=1 - self.decay)
        n = self.ema_count[level].sum()
        smoothed = (self.ema_count[level] + self.eps) / (n + self.codebook_size * self.eps) * n
        self.codebooks[level].copy_(self.ema_sum[level] / smoothed.unsqueeze(1))
        self.codebooks[level, ORIGIN_CODE] = 0.0
        self.ema_sum[level, ORIGIN_CODE] = 0.0

        dead = self.ema_count[level] < self.dead_threshold
        dead[ORIGIN_CODE] = False
        n_dead = int(dead.sum())
        if n_dead and residual.shape[0]:
            pick = torch.randint(residual.shape[0], (n_dead,), device=residual.device)
            self.codebooks[level][dead] = residual[pick]
            self.ema_sum[level][dead] = residual[pick]
            self.ema_count[level][dead] = 1.0

    def forward(
        self, z: torch.Tensor, n_active: int | None = None
    ) -> tuple[torch.Tensor, torch.Tensor, torch.Tensor]:
        """
        Quantize z (..., dim) with the first `n_active` levels.

        Returns (quantized with straight-through gradient, indices (..., n_active),
        commitment loss).
        """
        n_active = self.n_levels if n_active is None else n_active
        if not 1 <= n_active <= self.n_levels:
            raise InvalidInputError(f"n_active must be in [1, {self.n_levels}], got {n_active}")
        if z.shape[-1] != self.dim:
            raise InvalidInputError(f"latent dim {z.shape[-1]} != codebook dim {self.dim}")
        lead = z.shape[:-1]
        flat = rearrange(z, "... d -> (...) d")
        residual = flat
        quantized = torch.zeros_like(flat)
        commit = flat.new_zeros(())
        all_idx = []
        for level in range(n_active):
            idx = self._nearest(residual.detach(), level)
            q = self.codebooks[level][idx].clone()
            if self.training:
                self._ema_update(level, residual.detach(), idx)
            commit = commit + F.mse_loss(residual, q.detach())
            quantized = quantized + q
            residual = residual - q
            all_idx.append(idx)
        quantized = flat + (quantized - flat).detach()
        indices = torch.stack(all_idx, dim=-1).reshape(*lead, n_active)
        return quantized.reshape(*lead, self.dim), indices, commit

    @torch.no_grad()
    def quantize(self, z: torch.Tensor, n_q: int) -> torch.Tensor:
        """Indices (..., n_q) without touching the codebooks."""
        was_training = self.training
        self.eval()
        try:
            _, idx, _ = self.forward(z, n_q)
        finally:
            self.train(was_training)
        return idx

    def dequantize(self, indices: torch.Tensor) -> torch.Tensor:
        """Sum of the selected codewords; indices (..., n) with n <= n_levels."""
        n = indices.shape[-1]
        if n > self.n_levels:
            raise InvalidInputError(f"{n} levels requested, codec has {self.n_levels}")
        out = 0
        for level in range(n):
            out = out + self.codebooks[level][indices[..., level]]
        return out

    def numpy_codebooks(self, n: int | None = None) -> list[np.ndarray]:
        n = self.n_levels if n is None else n
        return [self.codebooks[level].detach().cpu().double().numpy() for level in range(n)]
