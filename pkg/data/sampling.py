"""Sampling

Negative items for sampled ranking evaluation
"""
import logging
from typing import Sequence

import numpy as np

from includes.exceptions import ConfigError

logger = logging.getLogger(__name__)

STRATEGIES = ("uniform", "popularity")


def user_rng(seed: int, user: int) -> np.random.Generator:
    """Generator owned by one (seed, user) pair, independent of evaluation order"""
    return np.random.default_rng([int(seed), int(user)])


def sample_negatives(history: Sequence[int], num_items: int, count: int,
                     rng: np.random.Generator, strategy: str = "uniform",
                     item_counts: np.ndarray | None = None) -> np.ndarray:
    """Items the user never interacted with

    Args:
        history (Sequence[int]): item indices the user interacted with
        num_items (int): catalogue size; items are 1..num_items
        count (int): sample size
        rng (np.random.Generator): sampling source
        strategy (str): ``uniform`` or ``popularity`` (weights proportional to ``item_counts``)
        item_counts (np.ndarray, optional): occurrences per item index, needed for popularity

    Returns:
        np.ndarray: sorted-free sample without replacement; every candidate when fewer than
        ``count`` exist, empty when the user has seen every item
    """
    if not isinstance(count, int | np.integer) or count < 1:
        raise ConfigError("num_negatives", f"must be an integer >= 1, got {count!r}")
    if strategy not in STRATEGIES:
        raise ConfigError("negative_strategy", f"must be one of {STRATEGIES}, got {strategy!r}")
    candidates = np.setdiff1d(np.arange(1, num_items + 1), np.asarray(history, dtype=np.int64))
    if len(candidates) <= count:
        if not len(candidates):
            logger.warning("user has interacted with every item; no negatives")
        return candidates
    if strategy == "popularity":
        if item_counts is None:
            raise ConfigError("item_counts", "popularity sampling needs item counts")
        weights = np.asarray(item_counts, dtype=np.float64)[candidates]
        if weights.sum() > 0 and np.count_nonzero(weights) >= count:
            return rng.choice(candidates, size=count, replace=False, p=weights / weights.sum())
        logger.debug("too few popular candidates; falling back to uniform sampling")
    return rng.choice(candidates, size=count, replace=False)
