"""Synth

Synthetic interaction logs with planted temporal proximity.

Trend episodes give every user active in the same window a shared item pool (proximity
across users); per-item successor lists applied to short gaps give proximity within a
user's own sequence.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass

import numpy as np

from data.includes.constants import SYNTH_HORIZON_DAYS, SYNTH_MARKOV_GAP_DAYS, \
    SYNTH_MAX_EVENTS, SYNTH_MEAN_GAP_DAYS, SYNTH_MIN_EVENTS, SYNTH_NUM_ITEMS, \
    SYNTH_NUM_SUCCESSORS, SYNTH_NUM_TRENDS, SYNTH_NUM_USERS, SYNTH_P_TREND, \
    SYNTH_SHARPNESS, SYNTH_START_TIMESTAMP, SYNTH_TREND_POOL_SIZE, SYNTH_TREND_WINDOW
from data.interactions import Interaction
from includes.constants import SECONDS_PER_DAY
from includes.exceptions import ConfigError

logger = logging.getLogger(__name__)


@dataclass
class SynthConfig:
    num_users: int = SYNTH_NUM_USERS
    num_items: int = SYNTH_NUM_ITEMS
    horizon_days: int = SYNTH_HORIZON_DAYS
    num_trends: int = SYNTH_NUM_TRENDS
    trend_window: int = SYNTH_TREND_WINDOW
    p_trend: float = SYNTH_P_TREND
    transition_sharpness: float = SYNTH_SHARPNESS
    seed: int = 0
    min_events: int = SYNTH_MIN_EVENTS
    max_events: int = SYNTH_MAX_EVENTS
    mean_gap_days: float = SYNTH_MEAN_GAP_DAYS
    trend_pool_size: int = SYNTH_TREND_POOL_SIZE
    num_successors: int = SYNTH_NUM_SUCCESSORS
    markov_gap_days: int | None = SYNTH_MARKOV_GAP_DAYS
    start_timestamp: int = SYNTH_START_TIMESTAMP

    def validate(self) -> "SynthConfig":
        for name in ("num_users", "num_items", "horizon_days", "trend_window", "min_events",
                     "trend_pool_size", "num_successors"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ConfigError(f"synth.{name}", f"must be an integer >= 1, got {value!r}")
        if not isinstance(self.num_trends, int) or self.num_trends < 0:
            raise ConfigError("synth.num_trends", f"must be an integer >= 0, got {self.num_trends!r}")
        if not 0.0 <= self.p_trend <= 1.0:
            raise ConfigError("synth.p_trend", f"must lie in [0, 1], got {self.p_trend}")
        if self.horizon_days < self.trend_window:
            raise ConfigError("synth.horizon_days", "must be at least trend_window")
        if self.max_events < self.min_events:
            raise ConfigError("synth.max_events", "must be at least min_events")
        if self.trend_pool_size > self.num_items:
            raise ConfigError("synth.trend_pool_size", "must not exceed num_items")
        if self.num_successors >= self.num_items:
            raise ConfigError("synth.num_successors", "must be below num_items")
        if self.transition_sharpness < 0:
            raise ConfigError("synth.transition_sharpness", "must be >= 0")
        if self.mean_gap_days < 0:
            raise ConfigError("synth.mean_gap_days", "must be >= 0")
        if self.markov_gap_days is not None and self.markov_gap_days < 0:
            raise ConfigError("synth.markov_gap_days", "must be >= 0 or null")
        if self.start_timestamp < 0:
            raise ConfigError("synth.start_timestamp", "must be >= 0")
        return self

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Trend:
    start_day: int
    end_day: int  # inclusive
    pool: np.ndarray

    def active(self, day: int) -> bool:
        return self.start_day <= day <= self.end_day


class SynthGenerator:
    """SynthGenerator
    Draws trend episodes and successor tables once, then user histories on demand

    Args:
        cfg (SynthConfig): validated settings
    """
    def __init__(self, cfg: SynthConfig):
        if not isinstance(cfg, SynthConfig):
            raise TypeError(f"Unexpected type for cfg: {type(cfg)}. Expected: SynthConfig")
        self.__cfg = cfg.validate()
        self.__rng = np.random.default_rng(cfg.seed)
        self.__trends = self.__draw_trends()
        self.__successors, self.__successor_probs = self.__draw_successors()

    @property
    def trends(self) -> list[Trend]:
        return list(self.__trends)

    @property
    def successors(self) -> np.ndarray:
        return self.__successors

    def __draw_trends(self) -> list[Trend]:
        cfg = self.__cfg
        latest = cfg.horizon_days - cfg.trend_window
        trends = []
        for _ in range(cfg.num_trends):
            start = int(self.__rng.integers(0, latest + 1))
            pool = self.__rng.choice(cfg.num_items, size=cfg.trend_pool_size, replace=False)
            trends.append(Trend(start, start + cfg.trend_window - 1, np.sort(pool)))
        return trends

    def __draw_successors(self) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.__cfg
        successors = np.empty((cfg.num_items, cfg.num_successors), dtype=np.int64)
        for item in range(cfg.num_items):
            others = self.__rng.choice(cfg.num_items - 1, size=cfg.num_successors, replace=False)
            successors[item] = others + (others >= item)
        weights = np.exp(-cfg.transition_sharpness * np.arange(cfg.num_successors))
        return successors, weights / weights.sum()

    def __event_days(self) -> np.ndarray:
        cfg = self.__cfg
        count = int(self.__rng.integers(cfg.min_events, cfg.max_events + 1))
        gaps = np.rint(self.__rng.exponential(cfg.mean_gap_days, size=count - 1)).astype(np.int64) \
            if cfg.mean_gap_days > 0 else np.zeros(count - 1, dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(gaps)])
        slack = max(cfg.horizon_days - int(offsets[-1]), 1)
        start = int(self.__rng.integers(0, slack))
        return np.minimum(start + offsets, cfg.horizon_days - 1)

    def __next_item(self, day: int, previous: int | None, previous_day: int | None) -> int:
        cfg = self.__cfg
        if self.__rng.random() < cfg.p_trend:
            live = [trend for trend in self.__trends if trend.active(day)]
            if live:
                trend = live[int(self.__rng.integers(len(live)))]
                return int(self.__rng.choice(trend.pool))
        if previous is not None and (cfg.markov_gap_days is None
                                     or day - previous_day <= cfg.markov_gap_days):
            return int(self.__rng.choice(self.__successors[previous], p=self.__successor_probs))
        return int(self.__rng.integers(cfg.num_items))

    def user_events(self) -> list[tuple[int, int]]:
        """(item, day) events of one fresh user"""
        events, previous, previous_day = [], None, None
        for day in self.__event_days():
            item = self.__next_item(int(day), previous, previous_day)
            events.append((item, int(day)))
            previous, previous_day = item, int(day)
        return events

    def generate(self) -> list[Interaction]:
        cfg = self.__cfg
        origin = cfg.start_timestamp - cfg.start_timestamp % SECONDS_PER_DAY
        log = []
        for user in range(cfg.num_users):
            for item, day in self.user_events():
                second = int(self.__rng.integers(SECONDS_PER_DAY))
                log.append(Interaction(f"u{user}", f"i{item}", origin + day * SECONDS_PER_DAY + second))
        logger.info("Generated %d synthetic interactions for %d users", len(log), cfg.num_users)
        return log


def synth_generate(cfg: SynthConfig) -> list[Interaction]:
    """Synthetic log for ``cfg``, deterministic in ``cfg.seed``"""
    return SynthGenerator(cfg).generate()
