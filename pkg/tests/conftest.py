"""Shared fixtures"""
import numpy as np
import pytest

from data.dataset import preprocess
from data.interactions import Interaction
from includes.constants import SECONDS_PER_DAY
from model.config import ModelConfig
from model.network import TemProxRec
from training.config import TrainConfig

DAY = SECONDS_PER_DAY
ORIGIN = 1_300_000_000 - 1_300_000_000 % DAY


def make_log(events: dict) -> list[Interaction]:
    """``{user: [(item, day), ...]}`` -> interactions at noon of each day"""
    return [Interaction(user, item, ORIGIN + day * DAY + DAY // 2)
            for user, rows in events.items() for item, day in rows]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_events():
    return {
        "alice": [("a", 0), ("b", 1), ("c", 3), ("d", 6), ("e", 10)],
        "bob": [("b", 0), ("c", 2), ("a", 5), ("f", 7), ("g", 12), ("h", 15)],
        "carol": [("d", 1), ("e", 2), ("f", 4), ("g", 9)],
        "dave": [("h", 3), ("a", 8), ("b", 11), ("c", 14), ("d", 20)],
        "erin": [("e", 5), ("g", 6), ("h", 13)],
        "frank": [("f", 2), ("a", 4)],
    }


@pytest.fixture
def tiny_dataset(tiny_events):
    return preprocess(make_log(tiny_events), min_user=1, min_item=1)


@pytest.fixture
def small_model_cfg():
    return ModelConfig(hidden_dim=8, num_layers=1, max_len=6, clip_time=4, clip_position=2,
                       dropout_rate=0.0)


@pytest.fixture
def small_model(small_model_cfg, tiny_dataset):
    return TemProxRec(small_model_cfg, tiny_dataset.num_items, tiny_dataset.num_days,
                      rng=np.random.default_rng(0))


@pytest.fixture
def fast_train_cfg():
    return TrainConfig(batch_size=4, epochs=2, patience=2, num_negatives=5, k=3, delta=3,
                       tau=0.5, lam=0.3, prefetch=0, progress=False)
