"""Metrics

Rank of the held-out item among sampled candidates, HR@K and NDCG@K
"""
import numpy as np

from includes.exceptions import ContractError, DimensionError


def rank_of_truth(scores: np.ndarray, items: np.ndarray, truth: int) -> int:
    """1-based rank of ``truth`` under descending score

    Ties go to the lower item index.

    Args:
        scores (np.ndarray): score per candidate
        items (np.ndarray): item index per candidate, ``truth`` among them

    Raises:
        ContractError: ``truth`` is not a candidate
    """
    scores = np.asarray(scores, dtype=np.float64)
    items = np.asarray(items, dtype=np.int64)
    if scores.shape != items.shape:
        raise DimensionError("one score per candidate expected", scores.shape, items.shape)
    found = np.flatnonzero(items == truth)
    if not len(found):
        raise ContractError(f"truth item {truth} is not among the candidates")
    own = scores[found[0]]
    others = items != truth
    ahead = (scores > own) | ((scores == own) & (items < truth))
    return 1 + int(np.count_nonzero(ahead & others))


def hr_at_k(rank: int, k: int) -> int:
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    return int(rank <= k)


def ndcg_at_k(rank: int, k: int) -> float:
    """DCG of a single relevant item, IDCG = 1"""
    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    return 1.0 / np.log2(rank + 1) if rank <= k else 0.0
