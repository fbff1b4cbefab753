"""Layers

One MHAR transformer block: heads, output projection, feed-forward network, post-norm
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from model.attention import HeadWeights, absolute_head, content_head, relative_head
from model.config import ModelConfig
from model.includes.constants import ABS_POS, ABS_TIME, CONTENT, REL_POS, REL_TIME
from model.parameters import Parameters
from numerics.functional import dropout, gelu, layer_norm, linear
from numerics.tensor import Tensor, concat


@dataclass
class LayerContext:
    """Per-batch inputs shared by every layer

    Attributes:
        pad_mask: ``B x n`` real-token mask
        time_embedding: ``B x n x d`` rows of the time table at each day
        position_embedding: ``n x d`` rows of the position table
        time_intervals: ``B x n x n`` clipped day gaps
        position_intervals: ``n x n`` clipped offsets shifted to ``[0, 2k_p]``
    """
    pad_mask: np.ndarray
    time_embedding: Tensor
    position_embedding: Tensor
    time_intervals: np.ndarray
    position_intervals: np.ndarray


def head_weights(params: Parameters, layer: int, head: int) -> HeadWeights:
    prefix = f"layers.{layer}.heads.{head}"
    optional = lambda name: params[f"{prefix}.{name}"] if f"{prefix}.{name}" in params else None
    return HeadWeights(query=params[f"{prefix}.query"], key=params[f"{prefix}.key"],
                       value=params[f"{prefix}.value"], embedding=optional("embedding"),
                       relation=optional("relation"),
                       content_bias=optional("content_bias"), position_bias=optional("position_bias"))


def run_head(kind: str, h: Tensor, ctx: LayerContext, params: Parameters,
             weights: HeadWeights) -> tuple[Tensor, Tensor]:
    if kind == ABS_TIME:
        return absolute_head(h, ctx.time_embedding, ctx.pad_mask, weights)
    if kind == ABS_POS:
        return absolute_head(h, ctx.position_embedding, ctx.pad_mask, weights)
    if kind == REL_TIME:
        return relative_head(h, params["time_interval_table"], ctx.time_intervals,
                             ctx.pad_mask, weights)
    if kind == REL_POS:
        return relative_head(h, params["position_interval_table"], ctx.position_intervals,
                             ctx.pad_mask, weights)
    if kind == CONTENT:
        return content_head(h, ctx.pad_mask, weights)
    raise ValueError(f"unknown head kind {kind!r}")


def mhar_layer(h: Tensor, ctx: LayerContext, params: Parameters, cfg: ModelConfig, layer: int,
               training: bool, rng: np.random.Generator | None) -> tuple[Tensor, list[Tensor]]:
    """Attention sublayer then feed-forward sublayer, each with dropout, residual and norm

    Returns:
        tuple[Tensor, list[Tensor]]: ``B x n x d`` output and the weights of each head
    """
    prefix = f"layers.{layer}"
    outputs, weights = [], []
    for head, kind in enumerate(cfg.head_plan):
        out, attention = run_head(kind, h, ctx, params, head_weights(params, layer, head))
        outputs.append(out)
        weights.append(attention)
    attended = concat(outputs, axis=-1) @ params[f"{prefix}.output"]
    h = layer_norm(h + dropout(attended, cfg.dropout_rate, rng, training),
                   params[f"{prefix}.attn_norm.gain"], params[f"{prefix}.attn_norm.bias"])
    hidden = gelu(linear(h, params[f"{prefix}.ffn.w1"], params[f"{prefix}.ffn.b1"]))
    fed = linear(hidden, params[f"{prefix}.ffn.w2"], params[f"{prefix}.ffn.b2"])
    h = layer_norm(h + dropout(fed, cfg.dropout_rate, rng, training),
                   params[f"{prefix}.ffn_norm.gain"], params[f"{prefix}.ffn_norm.bias"])
    return h, weights
