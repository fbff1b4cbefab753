"""MLM

Negative log-likelihood of the masked items
"""
import numpy as np

from includes.exceptions import DimensionError
from numerics.functional import log_softmax
from numerics.tensor import Tensor


def mlm_loss(logits: Tensor, targets: np.ndarray) -> Tensor:
    """Mean of ``-log softmax(logits)[target]``

    Args:
        logits (Tensor): ``M x |V|`` scores over the real items, column ``i - 1`` for item ``i``
        targets (np.ndarray): ``M`` item indices in ``[1, |V|]``

    Returns:
        Tensor: scalar loss
    """
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or logits.shape[0] != len(targets):
        raise DimensionError("one logit row per target expected", logits.shape, targets.shape)
    if not len(targets):
        raise DimensionError("mlm_loss needs at least one target", targets.shape)
    if targets.min() < 1 or targets.max() > logits.shape[1]:
        raise IndexError(f"target outside [1, {logits.shape[1]}]")
    log_probs = log_softmax(logits)
    return -log_probs[np.arange(len(targets)), targets - 1].mean()


def real_item_logits(logits: Tensor) -> Tensor:
    """Drop the PAD and MASK columns of full-width output logits"""
    return logits[:, 1:-1]
