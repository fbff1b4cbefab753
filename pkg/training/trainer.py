"""Trainer

Joint masked-item and contrastive training with early stopping on validation NDCG
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from tqdm import tqdm

from data.dataset import Dataset
from data.sequences import Batch, build_sequences, iterate_batches
from evaluation.evaluator import EvalReport, evaluate
from model.config import ModelConfig
from model.network import TemProxRec
from numerics.tensor import Tensor, backward
from objectives import apply_mlm_mask, contrast_bank, mlm_loss, pseudo_positive, \
    real_item_logits, tcl_loss, tcl_sample, total_loss
from objectives.contrastive import ContrastStats
from training.ablation import apply_ablation
from training.config import TrainConfig
from training.includes.constants import BEST_CHECKPOINT_NAME, CHECKPOINT_NAME, METRICS_LOG, \
    STREAM_DROPOUT, STREAM_INIT, STREAM_MASK, STREAM_PSEUDO, STREAM_SHUFFLE
from training.optimizer import AdamState, adam_step

logger = logging.getLogger(__name__)

HOLDOUT = 2  # validation and test items stay out of training rows


def step_rng(seed: int, epoch: int, step: int, stream: int) -> np.random.Generator:
    """Independent generator per (seed, epoch, step, purpose)"""
    return np.random.default_rng([int(seed), int(epoch), int(step), int(stream)])


@dataclass
class StepLoss:
    total: Tensor
    mlm: Tensor
    tcl: Tensor | None = None
    stats: ContrastStats | None = None


@dataclass
class EpochStats:
    epoch: int
    mlm_loss: float
    tcl_loss: float
    total: float
    steps: int
    zero_norm_count: int = 0


@dataclass
class FitResult:
    model: TemProxRec
    best_epoch: int
    validation: EvalReport
    test: EvalReport | None
    history: list = field(default_factory=list)


def compute_loss(model: TemProxRec, batch: Batch, cfg: TrainConfig, epoch: int, step: int) -> StepLoss:
    """Mask, forward, and combine both tasks for one minibatch

    The contrastive path, including its second forward pass, runs only when lambda > 0.
    """
    masked = apply_mlm_mask(batch, cfg.rho, step_rng(cfg.seed, epoch, step, STREAM_MASK), model.mask)
    hidden = model.forward(masked.batch, training=True,
                           rng=step_rng(cfg.seed, epoch, step, STREAM_DROPOUT))
    logits = model.output_logits(hidden[masked.rows, masked.cols])
    mlm = mlm_loss(real_item_logits(logits), masked.targets)
    if cfg.lam == 0:
        return StepLoss(total=mlm, mlm=mlm)
    pseudo = pseudo_positive(model, masked.batch, step_rng(cfg.seed, epoch, step, STREAM_PSEUDO))
    inputs = masked.batch
    sets = tcl_sample(inputs.days, inputs.pad_mask, cfg.delta,
                      eligible=inputs.items != model.mask)
    tcl, stats = tcl_loss(contrast_bank(hidden, pseudo), sets, cfg.tau, cfg.tcl_form)
    return StepLoss(total=total_loss(mlm, tcl, cfg.lam), mlm=mlm, tcl=tcl, stats=stats)


def train_epoch(model: TemProxRec, rows: Batch, cfg: TrainConfig, state: AdamState,
                epoch: int) -> EpochStats:
    """One pass over ``rows`` in a shuffled order fixed by (seed, epoch)"""
    batches = iterate_batches(rows, cfg.batch_size, step_rng(cfg.seed, epoch, 0, STREAM_SHUFFLE),
                              shuffle=True, prefetch=cfg.prefetch)
    total = mlm = tcl = 0.0
    steps = zero_norm = 0
    for step, batch in enumerate(tqdm(batches, desc=f"epoch {epoch}", leave=False,
                                      total=-(-len(rows) // cfg.batch_size),
                                      disable=not cfg.progress)):
        model.params.zero_grad()
        loss = compute_loss(model, batch, cfg, epoch, step)
        backward(loss.total)
        adam_step(model.params, state, cfg)
        total += loss.total.item()
        mlm += loss.mlm.item()
        if loss.tcl is not None:
            tcl += loss.tcl.item()
            zero_norm += loss.stats.zero_norm_count
        steps += 1
        logger.debug("epoch %d step %d: total %.5f mlm %.5f tcl %.5f", epoch, step,
                     loss.total.item(), loss.mlm.item(),
                     0.0 if loss.tcl is None else loss.tcl.item())
    scale = 1.0 / max(steps, 1)
    return EpochStats(epoch=epoch, mlm_loss=mlm * scale, tcl_loss=tcl * scale,
                      total=total * scale, steps=steps, zero_norm_count=zero_norm)


def build_model(model_cfg: ModelConfig, cfg: TrainConfig, dataset: Dataset) -> TemProxRec:
    return TemProxRec(model_cfg, dataset.num_items, dataset.num_days,
                      rng=np.random.default_rng([cfg.seed, STREAM_INIT]))


def _validate(model: TemProxRec, dataset: Dataset, cfg: TrainConfig) -> EvalReport:
    return evaluate(model, dataset, "validation", cfg.k, cfg.num_negatives, cfg.seed,
                    cfg.eval_batch_size, strategy=cfg.negative_strategy)


def fit(model: TemProxRec, dataset: Dataset, cfg: TrainConfig, out_dir: str | Path | None = None,
        test: bool = True) -> FitResult:
    """Train until ``cfg.epochs`` or until validation NDCG@k stalls for ``cfg.patience`` epochs

    The best validation parameters are restored before returning. With ``out_dir`` a JSON
    line per epoch goes to ``metrics.jsonl`` and the restored model to ``checkpoint.npz``.
    """
    cfg = cfg.validate()
    out_dir = Path(out_dir) if out_dir is not None else None
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / METRICS_LOG).write_text("", encoding="utf-8")
    rows = build_sequences(dataset, model.config.max_len, holdout=HOLDOUT)
    logger.info("Training on %d sequences, %d parameters, ablation %s", len(rows),
                model.params.num_parameters(), cfg.ablation)

    state = AdamState()
    best_report = _validate(model, dataset, cfg)
    best_state, best_epoch, stale, history = model.params.state(), 0, 0, []
    for epoch in range(1, cfg.epochs + 1):
        stats = train_epoch(model, rows, cfg, state, epoch)
        report = _validate(model, dataset, cfg)
        record = {"epoch": epoch, "mlm_loss": stats.mlm_loss, "tcl_loss": stats.tcl_loss,
                  "total": stats.total, f"val_HR@{cfg.k}": report.hr_at_k,
                  f"val_NDCG@{cfg.k}": report.ndcg_at_k}
        history.append(record)
        if out_dir is not None:
            with open(out_dir / METRICS_LOG, "a", encoding="utf-8") as log:
                log.write(json.dumps(record) + "\n")
        logger.info("epoch %d: total %.4f (mlm %.4f, tcl %.4f) val NDCG@%d %.4f", epoch,
                    stats.total, stats.mlm_loss, stats.tcl_loss, cfg.k, report.ndcg_at_k)
        if stats.zero_norm_count:
            logger.warning("epoch %d: %d zero-norm representations", epoch, stats.zero_norm_count)
        if report.ndcg_at_k > best_report.ndcg_at_k:
            best_report, best_state, best_epoch, stale = report, model.params.state(), epoch, 0
            if out_dir is not None:
                model.save_checkpoint(out_dir / BEST_CHECKPOINT_NAME, {"epoch": epoch})
        else:
            stale += 1
            if stale >= cfg.patience:
                logger.info("Early stop at epoch %d; best epoch %d", epoch, best_epoch)
                break
    model.params.load_state(best_state)
    if out_dir is not None:
        model.save_checkpoint(out_dir / CHECKPOINT_NAME, {"epoch": best_epoch})
    test_report = None
    if test:
        test_report = evaluate(model, dataset, "test", cfg.k, cfg.num_negatives, cfg.seed,
                               cfg.eval_batch_size, strategy=cfg.negative_strategy)
    return FitResult(model=model, best_epoch=best_epoch, validation=best_report,
                     test=test_report, history=history)


def train_model(dataset: Dataset, model_cfg: ModelConfig, cfg: TrainConfig,
                out_dir: str | Path | None = None, test: bool = True) -> FitResult:
    """Apply the configured ablation, build a fresh model and fit it"""
    model_cfg, cfg = apply_ablation(model_cfg, cfg)
    return fit(build_model(model_cfg, cfg, dataset), dataset, cfg, out_dir, test)
