"""Network

The sequential recommender: item embedding, stacked MHAR layers and the tied output head
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from data.sequences import Batch
from includes.constants import MASK_OFFSET, PAD
from includes.exceptions import DimensionError
from model.attention import compute_PI, compute_TI
from model.config import ModelConfig
from model.layers import LayerContext, mhar_layer
from model.parameters import Parameters, init_parameters, read_checkpoint, write_checkpoint
from numerics.functional import gelu, layer_norm, linear
from numerics.tensor import Tensor, gather_rows, where

logger = logging.getLogger(__name__)


class TemProxRec:
    """TemProxRec
    Bidirectional transformer over item sequences whose heads see absolute and relative
    time and position

    Args:
        cfg (ModelConfig): network shape
        num_items (int): |V|; the item table gets two extra rows for PAD and MASK
        num_days (int): |T|, rows of the absolute time table
        params (Parameters, optional): existing weights, fresh ones when omitted
        rng (np.random.Generator, optional): initialization source
    """
    def __init__(self, cfg: ModelConfig, num_items: int, num_days: int,
                 params: Parameters | None = None, rng: np.random.Generator | None = None):
        if not isinstance(cfg, ModelConfig):
            raise TypeError(f"Unexpected type for cfg: {type(cfg)}. Expected: ModelConfig")
        self.__cfg = cfg.validate()
        self.__num_items = int(num_items)
        self.__num_days = max(int(num_days), 1)
        if params is None:
            params = init_parameters(cfg, self.__num_items, self.__num_days,
                                     rng if rng is not None else np.random.default_rng(0))
        self.__params = params
        self.__valid_columns = np.ones(self.__num_items + 2, dtype=bool)
        self.__valid_columns[[PAD, self.mask]] = False

    @property
    def config(self) -> ModelConfig:
        return self.__cfg

    @property
    def params(self) -> Parameters:
        return self.__params

    @property
    def num_items(self) -> int:
        return self.__num_items

    @property
    def num_days(self) -> int:
        return self.__num_days

    @property
    def mask(self) -> int:
        return self.__num_items + MASK_OFFSET

    def embed_items(self, items: np.ndarray) -> Tensor:
        """H0: item table rows, nothing else added"""
        return gather_rows(self.__params["item_table"], items)

    def context(self, batch: Batch) -> LayerContext:
        n, cfg = batch.length, self.__cfg
        if n > cfg.max_len:
            raise DimensionError("batch rows longer than the position table",
                                 batch.items.shape, (cfg.max_len,))
        # days beyond the trained span fall back to the edge rows
        clamped = np.clip(batch.days, 0, self.__num_days - 1)
        return LayerContext(
            pad_mask=batch.pad_mask,
            time_embedding=gather_rows(self.__params["time_table"], clamped),
            position_embedding=gather_rows(self.__params["position_table"], batch.positions[0] - 1),
            time_intervals=compute_TI(batch.days, cfg.clip_time),
            position_intervals=compute_PI(n, cfg.clip_position) + cfg.clip_position,
        )

    def forward(self, batch: Batch, training: bool = False, rng: np.random.Generator | None = None,
                return_attention: bool = False):
        """Final hidden states ``B x n x d``

        Args:
            batch (Batch): input rows
            training (bool): apply dropout
            rng (np.random.Generator, optional): dropout source, required when training
            return_attention (bool): also return per-layer lists of head weights

        Returns:
            Tensor | tuple[Tensor, list[list[Tensor]]]
        """
        ctx = self.context(batch)
        h = self.embed_items(batch.items)
        if self.__cfg.input_position:
            h = h + ctx.position_embedding
        if self.__cfg.input_time:
            h = h + ctx.time_embedding
        attention = []
        for layer in range(self.__cfg.num_layers):
            h, weights = mhar_layer(h, ctx, self.__params, self.__cfg, layer, training, rng)
            attention.append(weights)
        return (h, attention) if return_attention else h

    def output_logits(self, h_rows: Tensor) -> Tensor:
        """Scores over every item index; PAD and MASK columns are ``-inf``

        Args:
            h_rows (Tensor): ``M x d`` hidden rows

        Returns:
            Tensor: ``M x (num_items + 2)``
        """
        p = self.__params
        z = layer_norm(gelu(linear(h_rows, p["head.dense"], p["head.dense_bias"])),
                       p["head.norm.gain"], p["head.norm.bias"])
        logits = z @ p["item_table"].T + p["head.item_bias"]
        return where(self.__valid_columns, logits, Tensor(-np.inf))

    def save_checkpoint(self, path: str | Path, extra: dict | None = None):
        write_checkpoint(path, self.__params, {"model": self.__cfg.to_dict(),
                                               "num_items": self.__num_items,
                                               "num_days": self.__num_days,
                                               "extra": extra or {}})

    @classmethod
    def load_checkpoint(cls, path: str | Path) -> "TemProxRec":
        manifest, arrays = read_checkpoint(path)
        cfg = ModelConfig.from_dict(manifest["model"])
        params = Parameters({name: Tensor(arrays[name], requires_grad=True, name=name)
                             for name in manifest["parameters"]})
        model = cls(cfg, manifest["num_items"], manifest["num_days"], params=params)
        logger.info("Loaded checkpoint %s (%d parameters)", path, params.num_parameters())
        return model


def save_checkpoint(model: TemProxRec, path: str | Path, extra: dict | None = None):
    model.save_checkpoint(path, extra)


def load_checkpoint(path: str | Path) -> TemProxRec:
    return TemProxRec.load_checkpoint(path)
