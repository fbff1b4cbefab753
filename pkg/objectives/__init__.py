"""Objectives

Masked-item and temporal contrastive tasks and their weighted sum
"""
from objectives.masking import MaskedBatch, apply_mlm_mask
from objectives.mlm import mlm_loss, real_item_logits
from objectives.contrastive import ContrastSet, ContrastStats, anchor_columns, contrast_bank, \
    pseudo_positive, tcl_loss, tcl_sample
from includes.exceptions import ConfigError
from numerics.tensor import Tensor


def total_loss(mlm: Tensor, tcl: Tensor | None, lam: float) -> Tensor:
    """``mlm + lam * tcl``; the contrastive term is skipped when ``lam`` is 0 or it is absent"""
    if lam < 0:
        raise ConfigError("train.lambda", f"must be >= 0, got {lam}")
    if tcl is None or lam == 0:
        return mlm
    return mlm + tcl * lam
