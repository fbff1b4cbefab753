"""Sequences

Fixed-length left-padded rows, leave-one-out instances and minibatch iteration
"""
from __future__ import annotations

import logging
import queue
from dataclasses import dataclass, field, replace
from threading import Thread
from typing import Iterator, Sequence

import numpy as np

from data.dataset import Dataset
from includes.constants import PAD
from includes.exceptions import ConfigError, DimensionError

logger = logging.getLogger(__name__)

SPLITS = ("validation", "test")


@dataclass(frozen=True)
class Batch:
    """Padded model input

    ``items``, ``days`` and ``positions`` are B x n integer matrices; ``pad_mask`` is True on
    real tokens (MASK counts as real). Positions are 1..n on every row.
    """
    items: np.ndarray
    days: np.ndarray
    users: np.ndarray = None
    positions: np.ndarray = field(init=False)
    pad_mask: np.ndarray = field(init=False)

    def __post_init__(self):
        items = np.atleast_2d(np.asarray(self.items, dtype=np.int64))
        days = np.atleast_2d(np.asarray(self.days, dtype=np.int64))
        if items.shape != days.shape:
            raise DimensionError("items and days differ in shape", items.shape, days.shape)
        users = np.arange(len(items)) if self.users is None else np.asarray(self.users, dtype=np.int64)
        if users.shape != (len(items),):
            raise DimensionError("one user per row expected", users.shape, items.shape)
        pad_mask = items != PAD
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "days", np.where(pad_mask, days, 0))
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "pad_mask", pad_mask)
        object.__setattr__(self, "positions",
                           np.broadcast_to(np.arange(1, items.shape[1] + 1), items.shape))

    def __len__(self) -> int:
        return len(self.items)

    @property
    def length(self) -> int:
        return self.items.shape[1]

    def take(self, rows) -> "Batch":
        rows = np.asarray(rows)
        return Batch(self.items[rows], self.days[rows], self.users[rows])

    def with_items(self, items: np.ndarray) -> "Batch":
        """Same rows with the item matrix swapped, e.g. after masking"""
        return replace(self, items=items)


@dataclass(frozen=True)
class EvalInstance:
    items: np.ndarray
    days: np.ndarray
    target_item: int
    target_day: int


@dataclass(frozen=True)
class EvalSet:
    """Eval instances of every user that has enough history"""
    batch: Batch
    targets: np.ndarray
    target_days: np.ndarray
    skipped: np.ndarray
    split: str


def pad_left(values: np.ndarray, length: int) -> np.ndarray:
    """Keep the last ``length`` values, left-padded with PAD"""
    values = np.asarray(values, dtype=np.int64)[-length:]
    row = np.full(length, PAD, dtype=np.int64)
    if len(values):
        row[length - len(values):] = values
    return row


def build_sequences(dataset: Dataset, n: int, holdout: int = 0) -> Batch:
    """Rows of the most recent ``n`` interactions of every user

    Args:
        dataset (Dataset): source sequences
        n (int): row length
        holdout (int): interactions withheld from the end of each sequence
            (2 keeps the validation and test items out of training rows)

    Returns:
        Batch: one row per user that keeps at least one interaction
    """
    if not isinstance(n, int) or n < 2:
        raise ConfigError("max_len", f"must be an integer >= 2, got {n!r}")
    if holdout < 0:
        raise ConfigError("holdout", f"must be >= 0, got {holdout}")
    users, items, days = [], [], []
    for user, (user_items, user_days) in enumerate(dataset):
        keep = len(user_items) - holdout
        if keep < 1:
            continue
        users.append(user)
        items.append(pad_left(user_items[:keep], n))
        days.append(pad_left(user_days[:keep], n))
    if not users:
        return Batch(np.zeros((0, n), dtype=np.int64), np.zeros((0, n), dtype=np.int64),
                     np.zeros(0, dtype=np.int64))
    return Batch(np.stack(items), np.stack(days), np.asarray(users))


def make_eval_instance(items: Sequence[int], days: Sequence[int], n: int, mode: str,
                       mask_token: int) -> EvalInstance | None:
    """Leave-one-out input for one user

    The input holds the items preceding the target, right-aligned, with MASK in the last
    column carrying the target's day.

    Returns:
        EvalInstance | None: None when the user has fewer than 3 interactions
    """
    if mode not in SPLITS:
        raise ConfigError("split", f"must be one of {SPLITS}, got {mode!r}")
    if len(items) < 3:
        return None
    target = len(items) - 1 if mode == "test" else len(items) - 2
    history_items = list(np.asarray(items)[:target]) + [mask_token]
    history_days = list(np.asarray(days)[:target]) + [days[target]]
    return EvalInstance(pad_left(history_items, n), pad_left(history_days, n),
                        int(items[target]), int(days[target]))


def build_eval_set(dataset: Dataset, n: int, split: str, users: Sequence[int] | None = None) -> EvalSet:
    users = range(dataset.num_users) if users is None else users
    kept, rows, skipped = [], [], []
    for user in users:
        instance = make_eval_instance(*dataset.sequence(user), n, split, dataset.mask)
        if instance is None:
            skipped.append(user)
        else:
            kept.append(user)
            rows.append(instance)
    if skipped:
        logger.warning("%d user(s) with fewer than 3 interactions skipped for %s",
                       len(skipped), split)
    if rows:
        batch = Batch(np.stack([r.items for r in rows]), np.stack([r.days for r in rows]),
                      np.asarray(kept))
    else:
        batch = Batch(np.zeros((0, n), dtype=np.int64), np.zeros((0, n), dtype=np.int64),
                      np.zeros(0, dtype=np.int64))
    return EvalSet(batch=batch,
                   targets=np.asarray([r.target_item for r in rows], dtype=np.int64),
                   target_days=np.asarray([r.target_day for r in rows], dtype=np.int64),
                   skipped=np.asarray(skipped, dtype=np.int64), split=split)


class BatchPrefetcher(Thread):
    """BatchPrefetcher
    Assembles minibatches on a background thread ahead of the consumer, in order

    Args:
        source (Iterator[Batch]): batch producer
        depth (int): queue capacity
    """
    _DONE = object()

    def __init__(self, source: Iterator[Batch], depth: int = 2):
        super().__init__(daemon=True)
        self.__source = source
        self.__queue = queue.Queue(maxsize=max(1, depth))
        self.__error = None

    def run(self):
        try:
            for batch in self.__source:
                self.__queue.put(batch)
        except Exception as error:  # re-raised in the consumer
            self.__error = error
        finally:
            self.__queue.put(self._DONE)

    def __iter__(self) -> Iterator[Batch]:
        if not self.is_alive() and self.ident is None:
            self.start()
        while True:
            batch = self.__queue.get()
            if batch is self._DONE:
                break
            yield batch
        if self.__error is not None:
            raise self.__error


def _batches(rows: Batch, batch_size: int, order: np.ndarray) -> Iterator[Batch]:
    for start in range(0, len(order), batch_size):
        yield rows.take(order[start:start + batch_size])


def iterate_batches(rows: Batch, batch_size: int, rng: np.random.Generator | None = None,
                    shuffle: bool = True, prefetch: int = 0) -> Iterator[Batch]:
    """Split rows into minibatches

    Args:
        rows (Batch): all rows
        batch_size (int): rows per minibatch; the last one may be smaller
        rng (np.random.Generator, optional): shuffling source, required when shuffling
        shuffle (bool): permute rows first
        prefetch (int): queue depth of a background assembler; 0 assembles inline
    """
    if not isinstance(batch_size, int) or batch_size < 1:
        raise ConfigError("batch_size", f"must be an integer >= 1, got {batch_size!r}")
    if shuffle:
        if rng is None:
            raise ConfigError("rng", "shuffling needs a random generator")
        order = rng.permutation(len(rows))
    else:
        order = np.arange(len(rows))
    source = _batches(rows, batch_size, order)
    if prefetch > 0:
        return iter(BatchPrefetcher(source, prefetch))
    return source
