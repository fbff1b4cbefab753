"""Interactions

Reading and writing ``user_id,item_id,timestamp`` logs
"""
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np
import pandas as pd

from data.includes.constants import CSV_COLUMNS
from includes.constants import SECONDS_PER_DAY
from includes.exceptions import ParseError

logger = logging.getLogger(__name__)

_PANDAS_LINE = re.compile(r"line (\d+)")


def _first_undecodable_line(path: str | Path) -> int:
    """1-based number of the first line that is not UTF-8, 0 when every line decodes"""
    with open(path, "rb") as file:
        for number, raw in enumerate(file, start=1):
            try:
                raw.decode("utf-8")
            except UnicodeDecodeError:
                return number
    return 0


@dataclass(frozen=True)
class Interaction:
    """One (user, item, timestamp) event"""
    user: str
    item: str
    timestamp: int

    def __post_init__(self):
        if not isinstance(self.timestamp, int | np.integer):
            raise TypeError(f"Unexpected type for timestamp: {type(self.timestamp)}. "
                            "Expected: int")
        if self.timestamp < 0:
            raise ValueError(f"timestamp must be non-negative, got {self.timestamp}")


def day_index(timestamp, origin_day: int = 0):
    """Day of ``timestamp`` counted from ``origin_day``; works on arrays too"""
    return np.floor_divide(timestamp, SECONDS_PER_DAY) - origin_day


def interactions_frame(interactions: Iterable[Interaction] | pd.DataFrame) -> pd.DataFrame:
    """Frame with columns user, item, timestamp in input order"""
    if isinstance(interactions, pd.DataFrame):
        frame = interactions.rename(columns=dict(zip(CSV_COLUMNS, ("user", "item", "timestamp"))))
        return frame[["user", "item", "timestamp"]].astype(
            {"user": str, "item": str, "timestamp": np.int64}).reset_index(drop=True)
    rows = [(i.user, i.item, int(i.timestamp)) for i in interactions]
    return pd.DataFrame(rows, columns=["user", "item", "timestamp"]).astype(
        {"user": str, "item": str, "timestamp": np.int64})


def read_frame(path: str | Path) -> pd.DataFrame:
    """Parse an interaction CSV into a frame

    Raises:
        ParseError: missing header column, missing field or bad timestamp, or bytes that are
            not UTF-8
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skip_blank_lines=True,
                            encoding="utf-8")
    except pd.errors.EmptyDataError:
        logger.info("%s is empty", path)
        return pd.DataFrame({"user": pd.Series(dtype=str), "item": pd.Series(dtype=str),
                             "timestamp": pd.Series(dtype=np.int64)})
    except pd.errors.ParserError as error:
        found = _PANDAS_LINE.search(str(error))
        raise ParseError(int(found.group(1)) if found else 0, str(error)) from error
    except UnicodeDecodeError as error:
        raise ParseError(_first_undecodable_line(path), f"not UTF-8 text: {error.reason}") from error

    missing = [column for column in CSV_COLUMNS if column not in frame.columns]
    if missing:
        raise ParseError(1, f"header lacks column(s) {', '.join(missing)}")
    frame = frame[list(CSV_COLUMNS)]

    empty = (frame.isna() | (frame == "")).any(axis=1).to_numpy()
    if empty.any():
        raise ParseError(int(np.argmax(empty)) + 2, "missing field")
    stamps = frame["timestamp"].str.strip()
    bad = ~stamps.str.fullmatch(r"\d+").to_numpy(dtype=bool)
    if bad.any():
        row = int(np.argmax(bad))
        raise ParseError(row + 2, f"timestamp {frame['timestamp'].iloc[row]!r} "
                                  "is not a non-negative integer")
    return pd.DataFrame({"user": frame["user_id"].to_numpy(),
                         "item": frame["item_id"].to_numpy(),
                         "timestamp": stamps.astype(np.int64).to_numpy()})


def load_interactions(path: str | Path) -> list[Interaction]:
    """Load an interaction CSV

    Args:
        path (str | Path): CSV with header ``user_id,item_id,timestamp``; extra columns are ignored

    Returns:
        list[Interaction]: one per data row, in file order
    """
    frame = read_frame(path)
    logger.info("Loaded %d interactions from %s", len(frame), path)
    return [Interaction(user, item, int(stamp)) for user, item, stamp in
            zip(frame["user"], frame["item"], frame["timestamp"])]


def write_interactions(interactions: Iterable[Interaction] | pd.DataFrame, path: str | Path):
    """Write interactions with the ``user_id,item_id,timestamp`` header"""
    frame = interactions_frame(interactions)
    frame.columns = list(CSV_COLUMNS)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    logger.info("Wrote %d interactions to %s", len(frame), path)
