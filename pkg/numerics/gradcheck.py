"""Gradient check

Compare analytic gradients against central finite differences
"""
import logging
from typing import Callable, Iterable, Mapping

import numpy as np

from includes.constants import FD_EPS, REL_ERR_FLOOR
from numerics.tensor import Tensor, backward

logger = logging.getLogger(__name__)


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    """|a - b| / max(|a|, |b|, 1e-8); two zeros give 0"""
    scale = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), REL_ERR_FLOOR)
    return np.abs(analytic - numeric) / scale


def _as_list(params) -> list[tuple[str, Tensor]]:
    if isinstance(params, Tensor):
        return [(params.name or "param", params)]
    if isinstance(params, Mapping):
        return list(params.items())
    if hasattr(params, "named"):
        return list(params.named().items())
    return [(p.name or f"param{i}", p) for i, p in enumerate(params)]


def grad_check(f: Callable[[], Tensor], params: Iterable[Tensor] | Mapping | Tensor,
               eps: float = FD_EPS, noise_floor: float = 0.0) -> float:
    """Worst relative error between backprop and central differences

    Args:
        f (Callable[[], Tensor]): rebuilds the scalar loss from the current parameter values;
            must be deterministic (dropout off or seeded inside ``f``)
        params: tensors to check; a Tensor, a sequence, a name -> Tensor mapping,
            or anything with ``named()``
        eps (float, optional): finite-difference step
        noise_floor (float, optional): coordinates where both gradients are below this
            magnitude count as matching; finite differences of an exactly-zero gradient
            only return rounding noise

    Returns:
        float: max over every coordinate of every parameter
    """
    named = _as_list(params)
    for _, tensor in named:
        tensor.zero_grad()
    backward(f())
    worst = 0.0
    for name, tensor in named:
        analytic = np.zeros(tensor.shape) if tensor.grad is None else tensor.grad.copy()
        numeric = np.zeros(tensor.shape)
        flat = tensor.data.reshape(-1)
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + eps
            upper = f().item()
            flat[index] = original - eps
            lower = f().item()
            flat[index] = original
            numeric.reshape(-1)[index] = (upper - lower) / (2.0 * eps)
        errors = relative_error(analytic, numeric)
        errors[(np.abs(analytic) < noise_floor) & (np.abs(numeric) < noise_floor)] = 0.0
        error = float(errors.max(initial=0.0))
        logger.debug("grad_check %s: max relative error %.3e", name, error)
        worst = max(worst, error)
    return worst
