"""Optimizer

Bias-corrected Adam with decoupled weight decay
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from includes.exceptions import NonFiniteGradientError
from model.parameters import Parameters
from training.config import TrainConfig

logger = logging.getLogger(__name__)


@dataclass
class AdamState:
    """First and second moments per parameter name, plus the step count"""
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)
    step: int = 0


def check_finite(params: Parameters):
    for name, tensor in params.named().items():
        if tensor.grad is not None and not np.isfinite(tensor.grad).all():
            raise NonFiniteGradientError(name)


def adam_step(params: Parameters, state: AdamState, cfg: TrainConfig) -> AdamState:
    """Apply one update from the gradients stored on ``params``

    Parameters without a gradient are left alone.

    Raises:
        NonFiniteGradientError: NaN or Inf in some gradient; nothing is updated
    """
    check_finite(params)
    state.step += 1
    correction1 = 1.0 - cfg.beta1 ** state.step
    correction2 = 1.0 - cfg.beta2 ** state.step
    for name, tensor in params.named().items():
        grad = tensor.grad
        if grad is None:
            continue
        if name not in state.m:
            state.m[name] = np.zeros_like(tensor.data)
            state.v[name] = np.zeros_like(tensor.data)
        state.m[name] = cfg.beta1 * state.m[name] + (1.0 - cfg.beta1) * grad
        state.v[name] = cfg.beta2 * state.v[name] + (1.0 - cfg.beta2) * grad * grad
        m_hat = state.m[name] / correction1
        v_hat = state.v[name] / correction2
        update = m_hat / (np.sqrt(v_hat) + cfg.adam_eps)
        if cfg.weight_decay:
            update = update + cfg.weight_decay * tensor.data
        tensor.data = tensor.data - cfg.lr * update
    return state
