"""Evaluator

Leave-one-out evaluation against sampled negatives
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from tqdm import tqdm

from data.dataset import Dataset
from data.sampling import sample_negatives, user_rng
from data.sequences import build_eval_set
from evaluation.metrics import hr_at_k, ndcg_at_k, rank_of_truth
from includes.constants import NUM_NEGATIVES, TOP_K
from model.network import TemProxRec
from numerics.tensor import no_grad

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    hr_at_k: float
    ndcg_at_k: float
    k: int
    num_users_evaluated: int
    num_skipped: int
    seed: int
    split: str
    num_negatives: int

    def to_dict(self) -> dict:
        return asdict(self)

    def write(self, path: str | Path):
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as file:
            json.dump(self.to_dict(), file, indent=2, sort_keys=True)
        logger.info("Wrote %s report to %s", self.split, path)


def score_last_position(model: TemProxRec, batch) -> np.ndarray:
    """Item scores at the final (MASK) column, ``B x (num_items + 2)``"""
    with no_grad():
        hidden = model.forward(batch, training=False)
        return model.output_logits(hidden[:, -1]).data


def evaluate(model: TemProxRec, dataset: Dataset, split: str = "test", k: int = TOP_K,
             num_negatives: int = NUM_NEGATIVES, seed: int = 0, batch_size: int = 256,
             users: Sequence[int] | None = None, strategy: str = "uniform",
             progress: bool = False) -> EvalReport:
    """HR@k and NDCG@k over every user with at least 3 interactions

    Each user's negatives come from a generator keyed on ``(seed, user)`` and exclude every
    item of the user's full history.
    """
    eval_set = build_eval_set(dataset, model.config.max_len, split, users)
    counts = dataset.item_counts() if strategy == "popularity" else None
    hits, gains = [], []
    starts = range(0, len(eval_set.targets), batch_size)
    for start in tqdm(starts, desc=f"evaluate {split}", leave=False, disable=not progress):
        rows = np.arange(start, min(start + batch_size, len(eval_set.targets)))
        scores = score_last_position(model, eval_set.batch.take(rows))
        for offset, row in enumerate(rows):
            user = int(eval_set.batch.users[row])
            truth = int(eval_set.targets[row])
            history, _ = dataset.sequence(user)
            negatives = sample_negatives(history, dataset.num_items, num_negatives,
                                         user_rng(seed, user), strategy, counts)
            candidates = np.concatenate([[truth], negatives]).astype(np.int64)
            rank = rank_of_truth(scores[offset, candidates], candidates, truth)
            hits.append(hr_at_k(rank, k))
            gains.append(ndcg_at_k(rank, k))
    report = EvalReport(hr_at_k=float(np.mean(hits)) if hits else 0.0,
                        ndcg_at_k=float(np.mean(gains)) if gains else 0.0, k=k,
                        num_users_evaluated=len(hits), num_skipped=len(eval_set.skipped),
                        seed=seed, split=split, num_negatives=num_negatives)
    logger.info("%s HR@%d %.4f NDCG@%d %.4f over %d users", split, k, report.hr_at_k, k,
                report.ndcg_at_k, report.num_users_evaluated)
    return report
