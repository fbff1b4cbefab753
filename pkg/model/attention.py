"""Attention

Interval matrices and the attention heads of an MHAR layer.

Every head reads content values; time and position only shift the scores. Absolute heads
add the projected context embedding to the content before the query/key projections.
Relative heads score ``((q + u)·k + (q + w)·r) / sqrt(d_h)`` with ``r`` the projected interval embedding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from includes.exceptions import DimensionError
from numerics.functional import softmax_masked
from numerics.tensor import Tensor, einsum, gather_rows


def compute_TI(days: np.ndarray, clip_time: int) -> np.ndarray:
    """Clipped day gaps: ``TI[..., i, j] = min(|days[j] - days[i]|, clip_time)``"""
    days = np.asarray(days, dtype=np.int64)
    return np.minimum(np.abs(days[..., None, :] - days[..., :, None]), clip_time)


def compute_PI(n: int, clip_position: int) -> np.ndarray:
    """Clipped signed offsets: ``PI[i, j] = max(-k, min(j - i, k))``"""
    steps = np.arange(n)
    return np.clip(steps[None, :] - steps[:, None], -clip_position, clip_position)


@dataclass
class HeadWeights:
    query: Tensor
    key: Tensor
    value: Tensor
    embedding: Tensor | None = None
    relation: Tensor | None = None
    content_bias: Tensor | None = None
    position_bias: Tensor | None = None


def _check(h: Tensor, weights: HeadWeights):
    if h.ndim != 3 or h.shape[-1] != weights.query.shape[0]:
        raise DimensionError("head input must be B x n x d matching the projections",
                             h.shape, weights.query.shape)


def _attend(scores: Tensor, values: Tensor, pad_mask: np.ndarray) -> tuple[Tensor, Tensor]:
    attention = softmax_masked(scores, np.asarray(pad_mask, dtype=bool)[:, None, :])
    return attention @ values, attention


def content_head(h: Tensor, pad_mask: np.ndarray, weights: HeadWeights) -> tuple[Tensor, Tensor]:
    """Plain scaled dot-product head

    Returns:
        tuple[Tensor, Tensor]: ``B x n x d_h`` output and ``B x n x n`` weights
    """
    _check(h, weights)
    d_h = weights.query.shape[1]
    q, k = h @ weights.query, h @ weights.key
    return _attend((q @ k.T) * (1.0 / np.sqrt(d_h)), h @ weights.value, pad_mask)


def absolute_head(h: Tensor, e_abs: Tensor, pad_mask: np.ndarray,
                  weights: HeadWeights) -> tuple[Tensor, Tensor]:
    """Head with an absolute time or position embedding fused into queries and keys

    Args:
        h (Tensor): ``B x n x d`` content
        e_abs (Tensor): ``B x n x d`` or ``n x d`` absolute embedding
        pad_mask (np.ndarray): ``B x n``, True on real tokens
        weights (HeadWeights): query/key/value projections plus the ``d x d`` embedding projection
    """
    _check(h, weights)
    if weights.embedding is None:
        raise DimensionError("absolute head needs an embedding projection", h.shape, weights.query.shape)
    if e_abs.shape[-2:] != h.shape[-2:]:
        raise DimensionError("absolute embedding must cover every position", e_abs.shape, h.shape)
    d_h = weights.query.shape[1]
    fused = h + e_abs @ weights.embedding
    q, k = fused @ weights.query, fused @ weights.key
    return _attend((q @ k.T) * (1.0 / np.sqrt(d_h)), h @ weights.value, pad_mask)


def relative_head(h: Tensor, rel_table: Tensor, rel_index: np.ndarray, pad_mask: np.ndarray,
                  weights: HeadWeights) -> tuple[Tensor, Tensor]:
    """Head with interval embeddings acting as extra keys

    ``r_ij`` is ``rel_table[rel_index[i, j]] @ relation``; projecting the table once and
    gathering is the same as gathering the ``n x n x d`` embeddings and projecting them.

    Args:
        h (Tensor): ``B x n x d`` content
        rel_table (Tensor): ``R x d`` interval table
        rel_index (np.ndarray): ``B x n x n`` or ``n x n`` row indices into ``rel_table``
        pad_mask (np.ndarray): ``B x n``
        weights (HeadWeights): projections plus relation and ``u``/``w`` biases
    """
    _check(h, weights)
    rel_index = np.asarray(rel_index)
    n = h.shape[1]
    if rel_index.shape[-2:] != (n, n) or rel_index.ndim not in (2, 3):
        raise DimensionError("interval index must be n x n per row", rel_index.shape, h.shape)
    d_h = weights.query.shape[1]
    q, k = h @ weights.query, h @ weights.key
    r = gather_rows(rel_table @ weights.relation, rel_index)
    content = (q + weights.content_bias) @ k.T
    subscripts = "bid,bijd->bij" if rel_index.ndim == 3 else "bid,ijd->bij"
    relative = einsum(subscripts, q + weights.position_bias, r)
    return _attend((content + relative) * (1.0 / np.sqrt(d_h)), h @ weights.value, pad_mask)
