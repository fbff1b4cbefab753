"""Sweep

Grid search over training and model settings, one isolated fit per cell
"""
from __future__ import annotations

import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import pandas as pd

from data.dataset import Dataset
from includes.constants import GRID_CLIP_TIME, GRID_DELTA, GRID_DROPOUT, GRID_HIDDEN_DIM, \
    GRID_LAMBDA, GRID_LEARNING_RATE, GRID_TAU, GRID_WEIGHT_DECAY
from includes.exceptions import ConfigError
from model.config import ModelConfig
from training.config import TrainConfig
from training.includes.constants import SWEEP_CSV
from training.trainer import train_model

logger = logging.getLogger(__name__)

# grid key -> (config section, field)
GRID_KEYS = {
    "delta": ("train", "delta"),
    "kt": ("model", "clip_time"),
    "lambda": ("train", "lam"),
    "d": ("model", "hidden_dim"),
    "lr": ("train", "lr"),
    "dropout": ("model", "dropout_rate"),
    "tau": ("train", "tau"),
    "weight_decay": ("train", "weight_decay"),
}

# full search space, one list per grid key
SEARCH_SPACE = {
    "delta": list(GRID_DELTA),
    "kt": list(GRID_CLIP_TIME),
    "lambda": list(GRID_LAMBDA),
    "d": list(GRID_HIDDEN_DIM),
    "lr": list(GRID_LEARNING_RATE),
    "dropout": list(GRID_DROPOUT),
    "tau": list(GRID_TAU),
    "weight_decay": list(GRID_WEIGHT_DECAY),
}


def expand_grid(grid: dict) -> list[dict]:
    """Every combination of the grid values, seeds last, in key order"""
    unknown = [key for key in grid if key not in GRID_KEYS and key != "seeds"]
    if unknown:
        raise ConfigError(f"sweep.{unknown[0]}", f"unknown grid key; expected any of "
                                                 f"{sorted(GRID_KEYS) + ['seeds']}")
    keys = [key for key in grid if key != "seeds"]
    values = [list(grid[key]) for key in keys]
    seeds = list(grid.get("seeds", [None]))
    if any(not v for v in values) or not seeds:
        raise ConfigError("sweep", "every grid entry needs at least one value")
    return [dict(zip(keys, combo), seed=seed)
            for combo in itertools.product(*values) for seed in seeds]


def cell_configs(cell: dict, model_cfg: ModelConfig,
                 train_cfg: TrainConfig) -> tuple[ModelConfig, TrainConfig]:
    model_updates, train_updates = {}, {}
    for key, value in cell.items():
        if key == "seed":
            if value is not None:
                train_updates["seed"] = int(value)
            continue
        section, name = GRID_KEYS[key]
        (model_updates if section == "model" else train_updates)[name] = value
    return replace(model_cfg, **model_updates), replace(train_cfg, **train_updates)


def run_cell(args: tuple) -> dict:
    cell, dataset, model_cfg, train_cfg = args
    model_cfg, train_cfg = cell_configs(cell, model_cfg, train_cfg)
    result = train_model(dataset, model_cfg, train_cfg)
    k = train_cfg.k
    row = {key: value for key, value in cell.items() if key != "seed"}
    row.update({"seed": train_cfg.seed,
                f"val_hr@{k}": result.validation.hr_at_k,
                f"val_ndcg@{k}": result.validation.ndcg_at_k,
                f"test_hr@{k}": result.test.hr_at_k,
                f"test_ndcg@{k}": result.test.ndcg_at_k,
                "best_epoch": result.best_epoch})
    return row


def sweep(dataset: Dataset, grid: dict, model_cfg: ModelConfig, train_cfg: TrainConfig,
          workers: int = 1, out_dir: str | Path | None = None) -> pd.DataFrame:
    """Fit every grid cell and tabulate validation and test metrics

    Args:
        dataset (Dataset): shared data
        grid (dict): grid key -> values, plus optional ``seeds``
        model_cfg (ModelConfig): base model settings
        train_cfg (TrainConfig): base training settings
        workers (int): worker processes; 1 runs inline
        out_dir (str | Path, optional): where ``sweep.csv`` goes

    Returns:
        pd.DataFrame: one row per cell, in grid order
    """
    cells = expand_grid(grid)
    train_cfg = replace(train_cfg, progress=False)
    jobs = [(cell, dataset, model_cfg, train_cfg) for cell in cells]
    logger.info("Sweeping %d cell(s) on %d worker(s)", len(cells), workers)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_cell, jobs))
    else:
        rows = [run_cell(job) for job in jobs]
    table = pd.DataFrame(rows)
    if out_dir is not None:
        path = Path(out_dir) / SWEEP_CSV
        path.parent.mkdir(parents=True, exist_ok=True)
        table.to_csv(path, index=False)
        logger.info("Wrote %s", path)
    return table
