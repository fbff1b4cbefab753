"""Masking

Random item masking for the masked-item task
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from data.sequences import Batch
from includes.exceptions import ConfigError


@dataclass(frozen=True)
class MaskedBatch:
    """A batch with some real items replaced by MASK

    ``rows``/``cols`` list the masked positions in row-major order and ``targets`` the
    items they held.
    """
    batch: Batch
    rows: np.ndarray
    cols: np.ndarray
    targets: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)


def apply_mlm_mask(batch: Batch, rho: float, rng: np.random.Generator, mask_token: int) -> MaskedBatch:
    """Mask each real position with probability ``rho``, at least one per non-empty row

    Raises:
        ConfigError: ``rho`` outside (0, 1]
    """
    if not isinstance(rho, int | float) or not 0 < rho <= 1:
        raise ConfigError("train.rho", f"must lie in (0, 1], got {rho!r}")
    real = batch.pad_mask
    chosen = (rng.random(real.shape) < rho) & real
    for row in np.flatnonzero(~chosen.any(axis=1) & real.any(axis=1)):
        candidates = np.flatnonzero(real[row])
        chosen[row, candidates[rng.integers(len(candidates))]] = True
    rows, cols = np.nonzero(chosen)
    items = batch.items.copy()
    targets = items[rows, cols].copy()
    items[rows, cols] = mask_token
    return MaskedBatch(batch=batch.with_items(items), rows=rows, cols=cols, targets=targets)
