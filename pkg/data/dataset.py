"""Dataset

Preprocessing of raw interaction logs into per-user day-indexed sequences
"""
from __future__ import annotations

import datetime as dt
import json
import logging
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np
import pandas as pd

from data.includes.constants import DATASET_FORMAT_VERSION
from data.interactions import Interaction, day_index, interactions_frame
from includes.constants import MASK_OFFSET, SECONDS_PER_DAY
from includes.exceptions import ConfigError, EmptyDatasetError

logger = logging.getLogger(__name__)


class Dataset:
    """Dataset
    Filtered, re-indexed interaction sequences. Immutable once built.

    Items are indexed 1..num_items (0 is PAD, num_items + 1 is MASK); users 0..num_users-1.
    Interactions of user ``u`` occupy ``offsets[u]:offsets[u + 1]`` of the flat arrays.

    Args:
        item_vocab (np.ndarray): external item id of internal index ``i`` at position ``i - 1``
        user_vocab (np.ndarray): external user id per user index
        offsets (np.ndarray): ``num_users + 1`` row boundaries
        items (np.ndarray): item index per interaction
        days (np.ndarray): day index per interaction, counted from ``origin_day``
        timestamps (np.ndarray): raw timestamp per interaction
        input_order (np.ndarray): rank of each interaction in the filtered input log
        origin_day (int): absolute day number of day index 0
    """
    def __init__(self, item_vocab, user_vocab, offsets, items, days, timestamps,
                 input_order=None, origin_day: int = 0):
        self.__item_vocab = np.asarray(item_vocab, dtype=str)
        self.__user_vocab = np.asarray(user_vocab, dtype=str)
        self.__offsets = np.asarray(offsets, dtype=np.int64)
        self.__items = np.asarray(items, dtype=np.int64)
        self.__days = np.asarray(days, dtype=np.int64)
        self.__timestamps = np.asarray(timestamps, dtype=np.int64)
        if input_order is None:
            input_order = np.arange(len(self.__items))
        self.__input_order = np.asarray(input_order, dtype=np.int64)
        self.__origin_day = int(origin_day)
        if len(self.__offsets) != len(self.__user_vocab) + 1 or self.__offsets[-1] != len(self.__items):
            raise ValueError("offsets do not match users and interactions")
        if not (len(self.__items) == len(self.__days) == len(self.__timestamps)
                == len(self.__input_order)):
            raise ValueError("per-interaction arrays differ in length")
        if len(self.__items) and (self.__items.min() < 1 or self.__items.max() > self.num_items):
            raise ValueError("item index outside [1, num_items]")
        for array in (self.__item_vocab, self.__user_vocab, self.__offsets, self.__items,
                      self.__days, self.__timestamps, self.__input_order):
            array.setflags(write=False)

    @property
    def num_users(self) -> int:
        return len(self.__user_vocab)

    @property
    def num_items(self) -> int:
        return len(self.__item_vocab)

    @property
    def num_actions(self) -> int:
        return len(self.__items)

    @property
    def mask(self) -> int:
        return self.num_items + MASK_OFFSET

    @property
    def day_span(self) -> tuple[int, int]:
        if not len(self.__days):
            return 0, 0
        return int(self.__days.min()), int(self.__days.max())

    @property
    def num_days(self) -> int:
        """|T|"""
        low, high = self.day_span
        return high - low + 1

    @property
    def origin_day(self) -> int:
        return self.__origin_day

    @property
    def item_vocab(self) -> np.ndarray:
        return self.__item_vocab

    @property
    def user_vocab(self) -> np.ndarray:
        return self.__user_vocab

    @property
    def offsets(self) -> np.ndarray:
        return self.__offsets

    @property
    def items(self) -> np.ndarray:
        return self.__items

    @property
    def days(self) -> np.ndarray:
        return self.__days

    @property
    def timestamps(self) -> np.ndarray:
        return self.__timestamps

    @property
    def input_order(self) -> np.ndarray:
        return self.__input_order

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.__offsets)

    def sequence(self, user: int) -> tuple[np.ndarray, np.ndarray]:
        """(items, days) of one user, oldest first"""
        if not 0 <= user < self.num_users:
            raise KeyError(f"unknown user index {user}")
        start, end = self.__offsets[user], self.__offsets[user + 1]
        return self.__items[start:end], self.__days[start:end]

    def __iter__(self) -> Iterator[tuple[np.ndarray, np.ndarray]]:
        return (self.sequence(user) for user in range(self.num_users))

    def __len__(self) -> int:
        return self.num_users

    def item_counts(self) -> np.ndarray:
        """Occurrences per item index, length num_items + 2"""
        return np.bincount(self.__items, minlength=self.num_items + 2)

    def to_interactions(self) -> list[Interaction]:
        """The filtered log in its original input order"""
        users = np.repeat(np.arange(self.num_users), self.lengths)
        order = np.argsort(self.__input_order, kind="stable")
        return [Interaction(str(self.__user_vocab[users[k]]), str(self.__item_vocab[self.__items[k] - 1]),
                            int(self.__timestamps[k])) for k in order]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.__origin_day == other.origin_day
                and all(np.array_equal(a, b) for a, b in (
                    (self.__item_vocab, other.item_vocab), (self.__user_vocab, other.user_vocab),
                    (self.__offsets, other.offsets), (self.__items, other.items),
                    (self.__days, other.days), (self.__timestamps, other.timestamps))))

    def __repr__(self):
        return (f"Dataset(users={self.num_users}, items={self.num_items}, "
                f"actions={self.num_actions}, days={self.num_days})")


def date_bound(bound, end: bool) -> int:
    """Inclusive second bound from a date string, date or timestamp

    Raises:
        ConfigError: not an ISO date, a date or an integer timestamp
    """
    if isinstance(bound, int | np.integer):
        return int(bound)
    if isinstance(bound, str):
        try:
            bound = dt.date.fromisoformat(bound)
        except ValueError as error:
            raise ConfigError("data.date_range", f"{bound!r} is not an ISO date") from error
    if isinstance(bound, dt.datetime):
        return int(bound.replace(tzinfo=bound.tzinfo or dt.timezone.utc).timestamp())
    if isinstance(bound, dt.date):
        start = int(dt.datetime(bound.year, bound.month, bound.day,
                                tzinfo=dt.timezone.utc).timestamp())
        return start + SECONDS_PER_DAY - 1 if end else start
    raise ConfigError("data.date_range", f"unexpected bound {bound!r}; expected an ISO date, "
                                         "a date or an integer timestamp")


def _filter_counts(frame: pd.DataFrame, min_user: int, min_item: int) -> pd.DataFrame:
    item_counts = frame["item"].map(frame["item"].value_counts())
    frame = frame[item_counts >= min_item]
    user_counts = frame["user"].map(frame["user"].value_counts())
    return frame[user_counts >= min_user]


def preprocess(interactions: Iterable[Interaction] | pd.DataFrame, min_user: int = 5,
               min_item: int = 5, date_range: tuple | None = None,
               iterate: bool = False) -> Dataset:
    """Filter, re-index and sort an interaction log

    Args:
        interactions: raw events
        min_user (int): minimum interactions per kept user
        min_item (int): minimum occurrences per kept item
        date_range (tuple, optional): inclusive (start, end) as ISO dates, dates or timestamps
        iterate (bool): repeat the item/user passes until nothing changes

    Raises:
        EmptyDatasetError: nothing left after filtering
    """
    for name, value in (("min_user", min_user), ("min_item", min_item)):
        if not isinstance(value, int) or value < 1:
            raise ConfigError(name, f"must be an integer >= 1, got {value!r}")
    frame = interactions_frame(interactions)
    raw = len(frame)
    if date_range is not None:
        start, end = date_bound(date_range[0], end=False), date_bound(date_range[1], end=True)
        frame = frame[(frame["timestamp"] >= start) & (frame["timestamp"] <= end)]
    frame = frame.drop_duplicates(["user", "item", "timestamp"], keep="first")
    deduped = len(frame)

    frame = _filter_counts(frame, min_user, min_item)
    while iterate:
        refined = _filter_counts(frame, min_user, min_item)
        if len(refined) == len(frame):
            break
        frame = refined
    if frame.empty:
        raise EmptyDatasetError(f"no interaction left out of {raw} after filtering")
    logger.info("Preprocessing kept %d of %d interactions (%d after date range and dedup)",
                len(frame), raw, deduped)

    timestamps = frame["timestamp"].to_numpy(dtype=np.int64)
    absolute_days = day_index(timestamps)
    origin_day = int(absolute_days.min())
    days = absolute_days - origin_day
    user_codes, user_vocab = pd.factorize(frame["user"])
    item_codes, item_vocab = pd.factorize(frame["item"])
    input_order = np.arange(len(frame))

    order = np.lexsort((input_order, days, user_codes))
    offsets = np.concatenate([[0], np.cumsum(np.bincount(user_codes, minlength=len(user_vocab)))])
    return Dataset(item_vocab=np.asarray(item_vocab, dtype=str),
                   user_vocab=np.asarray(user_vocab, dtype=str),
                   offsets=offsets, items=item_codes[order] + 1, days=days[order],
                   timestamps=timestamps[order], input_order=input_order[order],
                   origin_day=origin_day)


def dataset_stats(dataset: Dataset) -> dict:
    """Summary counts of a dataset"""
    cells = dataset.num_users * dataset.num_items
    return {
        "num_users": dataset.num_users,
        "num_items": dataset.num_items,
        "num_actions": dataset.num_actions,
        "avg_length": float(dataset.lengths.mean()) if dataset.num_users else 0.0,
        "sparsity": 1.0 - dataset.num_actions / cells if cells else 1.0,
        "num_days": dataset.num_days,
    }


def write_stats(dataset: Dataset, path: str | Path) -> dict:
    stats = dataset_stats(dataset)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as file:
        json.dump(stats, file, indent=2)
    logger.info("Wrote dataset stats to %s", path)
    return stats


def save_dataset(dataset: Dataset, path: str | Path):
    """Store a dataset as an uncompressed ``.npz``"""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as file:
        np.savez(file, format_version=np.int64(DATASET_FORMAT_VERSION),
                 item_vocab=dataset.item_vocab, user_vocab=dataset.user_vocab,
                 offsets=dataset.offsets, items=dataset.items, days=dataset.days,
                 timestamps=dataset.timestamps, input_order=dataset.input_order,
                 day_span=np.asarray(dataset.day_span, dtype=np.int64),
                 origin_day=np.int64(dataset.origin_day))
    logger.info("Saved %r to %s", dataset, path)


def load_dataset(path: str | Path) -> Dataset:
    with np.load(path, allow_pickle=False) as archive:
        version = int(archive["format_version"])
        if version != DATASET_FORMAT_VERSION:
            raise ValueError(f"unsupported dataset format version {version}")
        return Dataset(item_vocab=archive["item_vocab"], user_vocab=archive["user_vocab"],
                       offsets=archive["offsets"], items=archive["items"], days=archive["days"],
                       timestamps=archive["timestamps"], input_order=archive["input_order"],
                       origin_day=int(archive["origin_day"]))
