"""Contrastive

Temporal-proximity contrastive task across the sequences of a minibatch.

Representations live in one bank: the ``B x n`` final hidden states flattened row-major,
followed by the ``B`` pseudo-positive rows. A ContrastSet refers to bank rows by index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from data.sequences import Batch
from includes.exceptions import ConfigError, ContractError, DimensionError
from model.network import TemProxRec
from numerics.functional import l2_normalize
from numerics.tensor import Tensor, concat

logger = logging.getLogger(__name__)

FORMS = ("standard", "as_printed")


@dataclass(frozen=True)
class ContrastSet:
    """Positives and negatives of one anchor, as bank row indices"""
    anchor: int
    anchor_row: int
    anchor_col: int
    anchor_day: int
    positives: np.ndarray
    negatives: np.ndarray
    delta: int


@dataclass(frozen=True)
class ContrastStats:
    num_anchors: int
    mean_positives: float
    mean_negatives: float
    zero_norm_count: int

    def to_dict(self) -> dict:
        return {"num_anchors": self.num_anchors, "mean_positives": self.mean_positives,
                "mean_negatives": self.mean_negatives, "zero_norm_count": self.zero_norm_count}


def anchor_columns(pad_mask: np.ndarray) -> np.ndarray:
    """Last real column of each row"""
    pad_mask = np.asarray(pad_mask, dtype=bool)
    return pad_mask.shape[1] - 1 - np.argmax(pad_mask[:, ::-1], axis=1)


def tcl_sample(days: np.ndarray, pad_mask: np.ndarray, delta: int,
               eligible: np.ndarray | None = None, with_pseudo: bool = True) -> list[ContrastSet]:
    """One ContrastSet per row, anchored at the row's last real position

    Every eligible position of another row is a positive when its day lies within ``delta``
    days of the anchor's (inclusive) and a negative otherwise. With ``with_pseudo`` the
    row's pseudo-positive, bank row ``B * n + row``, is appended to the positives.

    Args:
        days (np.ndarray): ``B x n`` day indices
        pad_mask (np.ndarray): ``B x n`` True on real tokens, MASK included
        delta (int): window radius in days
        eligible (np.ndarray, optional): ``B x n`` candidate positions; defaults to
            ``pad_mask``, pass ``pad_mask & (items != MASK)`` to leave masked items out
    """
    days = np.asarray(days, dtype=np.int64)
    pad_mask = np.asarray(pad_mask, dtype=bool)
    eligible = pad_mask if eligible is None else np.asarray(eligible, dtype=bool) & pad_mask
    if days.shape != pad_mask.shape or days.shape != eligible.shape:
        raise DimensionError("days and masks differ in shape", days.shape, pad_mask.shape,
                             eligible.shape)
    if delta < 0:
        raise ConfigError("train.delta", f"must be >= 0, got {delta}")
    rows, n = days.shape
    anchors = anchor_columns(pad_mask)
    flat_days = days.reshape(-1)
    flat_eligible = eligible.reshape(-1)
    owner = np.repeat(np.arange(rows), n)
    sets = []
    for row in range(rows):
        col = int(anchors[row])
        anchor_day = int(days[row, col])
        candidates = flat_eligible & (owner != row)
        within = np.abs(flat_days - anchor_day) <= delta
        positives = np.flatnonzero(candidates & within)
        if with_pseudo:
            positives = np.append(positives, rows * n + row)
        sets.append(ContrastSet(anchor=row * n + col, anchor_row=row, anchor_col=col,
                                anchor_day=anchor_day, positives=positives,
                                negatives=np.flatnonzero(candidates & ~within), delta=int(delta)))
    return sets


def pseudo_positive(model: TemProxRec, batch: Batch, rng: np.random.Generator,
                    training: bool = True) -> Tensor:
    """Anchor representations from a second forward pass under fresh dropout

    Raises:
        ContractError: called with dropout off, where both passes coincide
    """
    if not training:
        raise ContractError("pseudo-positives need a training-mode forward pass")
    h = model.forward(batch, training=True, rng=rng)
    return h[np.arange(len(batch)), anchor_columns(batch.pad_mask)]


def contrast_bank(hidden: Tensor, pseudo: Tensor | None = None) -> Tensor:
    """Flatten ``B x n x d`` states and append the pseudo-positive rows"""
    rows, n, d = hidden.shape
    flat = hidden.reshape(rows * n, d)
    return flat if pseudo is None else concat([flat, pseudo], axis=0)


def tcl_loss(bank: Tensor, sets: list[ContrastSet], tau: float,
             form: str = "standard") -> tuple[Tensor, ContrastStats]:
    """Mean over anchors of the positive-averaged contrastive term

    For a positive ``p`` with ``s_p = cos(h_i, h_p) / tau`` the standard term is
    ``-log(e^s_p / (e^s_p + sum_n e^s_n))`` and the ``as_printed`` term is
    ``-log(e^s_p / sum_n e^s_n)``; an anchor without negatives adds 0 to the latter.

    Args:
        bank (Tensor): ``R x d`` representations
        sets (list[ContrastSet]): anchors with at least one positive each
        tau (float): temperature
        form (str): ``standard`` or ``as_printed``

    Returns:
        tuple[Tensor, ContrastStats]: scalar loss and set sizes
    """
    if form not in FORMS:
        raise ConfigError("train.tcl_form", f"must be one of {FORMS}, got {form!r}")
    if not tau > 0:
        raise ConfigError("train.tau", f"must be > 0, got {tau}")
    if not sets:
        raise ValueError("tcl_loss needs at least one anchor")
    if any(len(s.positives) == 0 for s in sets):
        raise ContractError("every anchor needs at least one positive")

    size = bank.shape[0]
    positive = np.zeros((len(sets), size))
    negative = np.zeros((len(sets), size))
    for index, contrast in enumerate(sets):
        positive[index, contrast.positives] = 1.0
        negative[index, contrast.negatives] = 1.0
    if (positive * negative).any():
        raise ContractError("a candidate is both positive and negative")

    unit, zero_norm = l2_normalize(bank)
    anchors = unit[np.array([s.anchor for s in sets])]
    shift = 1.0 / tau  # cosine <= 1, so every shifted logit is <= 0
    logits = (anchors @ unit.T) * (1.0 / tau) - shift
    neg_mass = (logits.exp() * negative).sum(axis=1, keepdims=True)
    if form == "standard":
        # -log(e^s / (e^s + N)) = log(1 + N e^-s)
        terms = (neg_mass * (-logits).exp()).log1p()
        has_term = np.ones((len(sets), 1))
    else:
        has_term = (negative.sum(axis=1, keepdims=True) > 0).astype(np.float64)
        safe_mass = neg_mass * has_term + (1.0 - has_term)
        terms = (safe_mass.log() - logits) * has_term
    per_anchor = (terms * positive).sum(axis=1) * (1.0 / positive.sum(axis=1))
    loss = per_anchor.mean()

    stats = ContrastStats(num_anchors=len(sets), mean_positives=float(positive.sum(axis=1).mean()),
                          mean_negatives=float(negative.sum(axis=1).mean()),
                          zero_norm_count=zero_norm)
    return loss, stats
