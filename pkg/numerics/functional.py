"""Functional

Differentiable neural-network ops built on Tensor. Each op has a fused backward
rule instead of being composed from primitives.
"""
import logging

import numpy as np

from includes.constants import GELU_COEF, LAYER_NORM_EPS
from includes.exceptions import ConfigError, DimensionError, EmptyRowError
from numerics.tensor import Tensor, as_tensor

logger = logging.getLogger(__name__)

_SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def softmax_masked(scores: Tensor, key_mask) -> Tensor:
    """Softmax over the last axis, ignoring masked keys

    Args:
        scores (Tensor): ``(..., n_q, n_k)`` attention scores
        key_mask (array-like): boolean, broadcastable to ``scores``; True marks a usable key

    Returns:
        Tensor: weights, exactly 0 on masked keys, each row summing to 1

    Raises:
        EmptyRowError: a row has no usable key
    """
    scores = as_tensor(scores)
    mask = np.broadcast_to(np.asarray(key_mask, dtype=bool), scores.shape)
    if not mask.any(axis=-1).all():
        raise EmptyRowError("softmax row has no unmasked key")
    shifted = np.where(mask, scores.data, -np.inf)
    shifted = shifted - shifted.max(axis=-1, keepdims=True)
    exps = np.where(mask, np.exp(shifted), 0.0)
    weights = exps / exps.sum(axis=-1, keepdims=True)

    def backward(grad):
        inner = (grad * weights).sum(axis=-1, keepdims=True)
        scores.accumulate(weights * (grad - inner))
    return Tensor.make(weights, (scores,), "softmax_masked", backward)


def log_softmax(logits: Tensor) -> Tensor:
    """Log-softmax over the last axis; ``-inf`` entries stay excluded"""
    logits = as_tensor(logits)
    peak = logits.data.max(axis=-1, keepdims=True)
    shifted = logits.data - peak
    log_norm = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    out_data = shifted - log_norm
    probs = np.exp(out_data)

    def backward(grad):
        logits.accumulate(grad - probs * grad.sum(axis=-1, keepdims=True))
    return Tensor.make(out_data, (logits,), "log_softmax", backward)


def layer_norm(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = LAYER_NORM_EPS) -> Tensor:
    """Normalize the last axis, then scale by ``gamma`` and shift by ``beta``"""
    x, gamma, beta = as_tensor(x), as_tensor(gamma), as_tensor(beta)
    width = x.shape[-1]
    if gamma.shape != (width,) or beta.shape != (width,):
        raise DimensionError("layer_norm gain/bias must match the last axis",
                             x.shape, gamma.shape, beta.shape)
    mean = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mean
    inv_std = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    normed = centered * inv_std

    def backward(grad):
        gamma.accumulate((grad * normed).reshape(-1, width).sum(axis=0))
        beta.accumulate(grad.reshape(-1, width).sum(axis=0))
        if x.requires_grad:
            g_norm = grad * gamma.data
            x.accumulate(inv_std * (g_norm - g_norm.mean(axis=-1, keepdims=True)
                                    - normed * (g_norm * normed).mean(axis=-1, keepdims=True)))
    return Tensor.make(normed * gamma.data + beta.data, (x, gamma, beta), "layer_norm", backward)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation"""
    x = as_tensor(x)
    inner = _SQRT_2_OVER_PI * (x.data + GELU_COEF * x.data ** 3)
    tanh = np.tanh(inner)

    def backward(grad):
        d_inner = _SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_COEF * x.data ** 2)
        x.accumulate(grad * (0.5 * (1.0 + tanh) + 0.5 * x.data * (1.0 - tanh ** 2) * d_inner))
    return Tensor.make(0.5 * x.data * (1.0 + tanh), (x,), "gelu", backward)


def dropout(x: Tensor, rate: float, rng: np.random.Generator | None, training: bool) -> Tensor:
    """Inverted dropout

    Args:
        x (Tensor): input
        rate (float): drop probability in [0, 1)
        rng (np.random.Generator): mask source, required when training with rate > 0
        training (bool): identity when False

    Raises:
        ConfigError: rate outside [0, 1)
    """
    if not isinstance(rate, int | float):
        raise TypeError(f"Unexpected type for rate: {type(rate)}. Expected: int, float")
    if rate < 0 or rate >= 1:
        raise ConfigError("dropout_rate", f"must lie in [0, 1), got {rate}")
    if not training or rate == 0:
        return x
    if not isinstance(rng, np.random.Generator):
        raise TypeError(f"Unexpected type for rng: {type(rng)}. Expected: numpy Generator")
    scale = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return Tensor.make(x.data * scale, (x,), "dropout", lambda grad: x.accumulate(grad * scale))


def linear(x: Tensor, weight: Tensor, bias: Tensor | None = None) -> Tensor:
    out = x @ weight
    return out if bias is None else out + bias


def l2_normalize(x: Tensor) -> tuple[Tensor, int]:
    """Scale rows of ``x`` to unit length

    Zero rows stay zero (their cosine with anything is 0) and are counted.

    Returns:
        tuple[Tensor, int]: normalized rows and the number of zero rows
    """
    x = as_tensor(x)
    norms = np.sqrt((x.data ** 2).sum(axis=-1, keepdims=True))
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    unit = np.where(zero, 0.0, x.data / safe)
    zero_count = int(zero.sum())
    if zero_count:
        logger.warning("%d zero-norm representation(s); cosine taken as 0", zero_count)

    def backward(grad):
        radial = (grad * unit).sum(axis=-1, keepdims=True)
        x.accumulate(np.where(zero, 0.0, (grad - unit * radial) / safe))
    return Tensor.make(unit, (x,), "l2_normalize", backward), zero_count
