"""Temporal

Exploratory statistics of a dataset: gaps between consecutive interactions of a user, and
how often a user's items were also picked by someone else around the same day.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from data.dataset import Dataset
from includes.constants import GRID_DELTA, OVERLAP_DELTA, OVERLAP_TOP_U
from includes.exceptions import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class OverlapConfig:
    window_radius_days: int = OVERLAP_DELTA
    top_u: int = OVERLAP_TOP_U
    curve_deltas: list = field(default_factory=lambda: list(GRID_DELTA))

    def validate(self) -> "OverlapConfig":
        if not isinstance(self.window_radius_days, int) or self.window_radius_days < 0:
            raise ConfigError("analysis.window_radius_days",
                              f"must be an integer >= 0, got {self.window_radius_days!r}")
        if not isinstance(self.top_u, int) or self.top_u < 1:
            raise ConfigError("analysis.top_u", f"must be an integer >= 1, got {self.top_u!r}")
        if not self.curve_deltas or any(not isinstance(d, int) or d < 0 for d in self.curve_deltas):
            raise ConfigError("analysis.curve_deltas",
                              f"must be a non-empty list of integers >= 0, got {self.curve_deltas!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class IntervalHistogram:
    """Counts of day gaps between consecutive interactions; zero gaps counted apart"""
    counts: dict
    zero_count: int

    @property
    def total(self) -> int:
        return self.zero_count + sum(self.counts.values())


def interval_distribution(dataset: Dataset) -> IntervalHistogram:
    gaps = np.diff(dataset.days)
    within_user = np.ones(len(gaps), dtype=bool)
    boundaries = dataset.offsets[1:-1] - 1
    within_user[boundaries[(boundaries >= 0) & (boundaries < len(gaps))]] = False
    gaps = gaps[within_user]
    values, counts = np.unique(gaps[gaps != 0], return_counts=True)
    return IntervalHistogram(counts={int(v): int(c) for v, c in zip(values, counts)},
                             zero_count=int(np.count_nonzero(gaps == 0)))


class OverlapIndex:
    """OverlapIndex
    Interactions sorted by (item, day) for window counting by binary search

    Args:
        dataset (Dataset): source interactions
    """
    def __init__(self, dataset: Dataset):
        self.__dataset = dataset
        self.__stride = int(dataset.days.max()) + 1 if dataset.num_actions else 1
        self.__keys = np.sort(dataset.items * self.__stride + dataset.days)

    def __window_count(self, keys: np.ndarray, items: np.ndarray, days: np.ndarray,
                       delta: int) -> np.ndarray:
        low = items * self.__stride + np.maximum(days - delta, 0)
        high = items * self.__stride + np.minimum(days + delta, self.__stride - 1)
        return np.searchsorted(keys, high, side="right") - np.searchsorted(keys, low, side="left")

    def overlapped(self, user: int, delta: int) -> np.ndarray:
        """Per interaction of ``user``: does another user hold the same item within ``delta`` days"""
        items, days = self.__dataset.sequence(user)
        own_keys = np.sort(items * self.__stride + days)
        everyone = self.__window_count(self.__keys, items, days, delta)
        own = self.__window_count(own_keys, items, days, delta)
        return everyone > own

    def ratio(self, user: int, delta: int) -> float:
        flags = self.overlapped(user, delta)
        return float(flags.mean()) if len(flags) else 0.0


def overlap_ratio(dataset: Dataset, user: int, delta: int, index: OverlapIndex | None = None) -> float:
    """Share of ``user``'s interactions whose item someone else picked within ``delta`` days

    Raises:
        KeyError: unknown user
    """
    if delta < 0:
        raise ConfigError("analysis.window_radius_days", f"must be >= 0, got {delta}")
    return (index or OverlapIndex(dataset)).ratio(user, delta)


def top_users(dataset: Dataset, top_u: int) -> np.ndarray:
    """Most active users, ties by lower index"""
    lengths = dataset.lengths
    return np.lexsort((np.arange(len(lengths)), -lengths))[:top_u]


def average_overlap(dataset: Dataset, cfg: OverlapConfig, index: OverlapIndex | None = None) -> float:
    cfg.validate()
    if not dataset.num_users:
        raise ValueError("average_overlap needs at least one user")
    index = index or OverlapIndex(dataset)
    users = top_users(dataset, cfg.top_u)
    return float(np.mean([index.ratio(int(u), cfg.window_radius_days) for u in users]))


def overlap_curve(dataset: Dataset, deltas: Iterable[int], top_u: int = OVERLAP_TOP_U) -> dict:
    """Average overlap of the top users for each window radius"""
    index = OverlapIndex(dataset)
    return {int(delta): average_overlap(dataset, OverlapConfig(int(delta), top_u), index)
            for delta in deltas}


def user_overlaps(dataset: Dataset, delta: int, users: Iterable[int] | None = None) -> dict:
    index = OverlapIndex(dataset)
    users = range(dataset.num_users) if users is None else users
    return {int(u): index.ratio(int(u), delta) for u in users}


def write_interval_csv(histogram: IntervalHistogram, path: str | Path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(sorted(histogram.counts.items()), columns=["interval_days", "count"]) \
        .to_csv(path, index=False)
    logger.info("Wrote interval histogram to %s", path)


def write_overlap_csv(dataset: Dataset, ratios: dict, path: str | Path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({"user": [dataset.user_vocab[u] for u in ratios],
                  "ratio": list(ratios.values())}).to_csv(path, index=False)
    logger.info("Wrote %d overlap ratios to %s", len(ratios), path)


def write_summary_json(summary: dict, path: str | Path):
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        json.dump(summary, file, indent=2, sort_keys=True)
    logger.info("Wrote analysis summary to %s", path)
