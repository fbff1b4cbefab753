"""Parameters

Learnable tables and weights of the network, their initialization and checkpoints
"""
from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterator

import numpy as np

from includes.constants import INIT_STD, INIT_TRUNC
from model.config import ModelConfig
from model.includes.constants import ABSOLUTE_HEADS, CHECKPOINT_FORMAT_VERSION, \
    FFN_MULTIPLIER, MANIFEST_KEY, RELATIVE_HEADS
from numerics.tensor import Tensor

logger = logging.getLogger(__name__)


def truncated_normal(rng: np.random.Generator, shape: tuple, std: float = INIT_STD,
                     bound: float = INIT_TRUNC) -> np.ndarray:
    """Normal draws re-sampled until they fall inside ``[-bound, bound]``"""
    values = rng.normal(0.0, std, size=shape)
    outside = np.abs(values) > bound
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > bound
    return values


class Parameters:
    """Parameters
    Ordered name -> Tensor store

    Args:
        tensors (dict[str, Tensor], optional): initial entries
    """
    def __init__(self, tensors: dict[str, Tensor] | None = None):
        self.__tensors: dict[str, Tensor] = {}
        for name, tensor in (tensors or {}).items():
            self.add(name, tensor)

    def add(self, name: str, value) -> Tensor:
        if name in self.__tensors:
            raise KeyError(f"duplicate parameter {name!r}")
        tensor = value if isinstance(value, Tensor) else Tensor(value, requires_grad=True, name=name)
        tensor.name = name
        self.__tensors[name] = tensor
        return tensor

    def named(self) -> dict[str, Tensor]:
        return dict(self.__tensors)

    def names(self) -> list[str]:
        return list(self.__tensors)

    def __getitem__(self, name: str) -> Tensor:
        return self.__tensors[name]

    def __contains__(self, name: str) -> bool:
        return name in self.__tensors

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.__tensors.values())

    def __len__(self) -> int:
        return len(self.__tensors)

    def zero_grad(self):
        for tensor in self:
            tensor.zero_grad()

    def num_parameters(self) -> int:
        return int(sum(tensor.size for tensor in self))

    def state(self) -> dict[str, np.ndarray]:
        """Copies of every value array"""
        return {name: tensor.data.copy() for name, tensor in self.__tensors.items()}

    def load_state(self, state: dict[str, np.ndarray]):
        missing = sorted(set(self.__tensors) - set(state))
        extra = sorted(set(state) - set(self.__tensors))
        if missing or extra:
            raise KeyError(f"state mismatch: missing {missing}, unexpected {extra}")
        for name, tensor in self.__tensors.items():
            tensor.data = state[name]

    def copy(self) -> "Parameters":
        return Parameters({name: Tensor(tensor.data, requires_grad=tensor.requires_grad, name=name)
                           for name, tensor in self.__tensors.items()})


def init_parameters(cfg: ModelConfig, num_items: int, num_days: int,
                    rng: np.random.Generator) -> Parameters:
    """Fresh parameters for ``cfg``

    Tables and projections use the truncated normal; layer-norm gains start at 1 and every
    bias vector except the relative-head ``u``/``w`` at 0.
    """
    d, d_h = cfg.hidden_dim, cfg.head_dim
    params = Parameters()
    trunc = lambda *shape: truncated_normal(rng, shape)
    params.add("item_table", trunc(num_items + 2, d))
    params.add("time_table", trunc(max(num_days, 1), d))
    params.add("position_table", trunc(cfg.max_len, d))
    params.add("time_interval_table", trunc(cfg.clip_time + 1, d))
    params.add("position_interval_table", trunc(2 * cfg.clip_position + 1, d))
    for layer in range(cfg.num_layers):
        prefix = f"layers.{layer}"
        for head, kind in enumerate(cfg.head_plan):
            head_prefix = f"{prefix}.heads.{head}"
            params.add(f"{head_prefix}.query", trunc(d, d_h))
            params.add(f"{head_prefix}.key", trunc(d, d_h))
            params.add(f"{head_prefix}.value", trunc(d, d_h))
            if kind in ABSOLUTE_HEADS:
                params.add(f"{head_prefix}.embedding", trunc(d, d))
            if kind in RELATIVE_HEADS:
                params.add(f"{head_prefix}.relation", trunc(d, d_h))
                params.add(f"{head_prefix}.content_bias", trunc(d_h))
                params.add(f"{head_prefix}.position_bias", trunc(d_h))
        params.add(f"{prefix}.output", trunc(d, d))
        params.add(f"{prefix}.attn_norm.gain", np.ones(d))
        params.add(f"{prefix}.attn_norm.bias", np.zeros(d))
        params.add(f"{prefix}.ffn.w1", trunc(d, FFN_MULTIPLIER * d))
        params.add(f"{prefix}.ffn.b1", np.zeros(FFN_MULTIPLIER * d))
        params.add(f"{prefix}.ffn.w2", trunc(FFN_MULTIPLIER * d, d))
        params.add(f"{prefix}.ffn.b2", np.zeros(d))
        params.add(f"{prefix}.ffn_norm.gain", np.ones(d))
        params.add(f"{prefix}.ffn_norm.bias", np.zeros(d))
    params.add("head.dense", trunc(d, d))
    params.add("head.dense_bias", np.zeros(d))
    params.add("head.norm.gain", np.ones(d))
    params.add("head.norm.bias", np.zeros(d))
    params.add("head.item_bias", np.zeros(num_items + 2))
    logger.debug("Initialized %d parameter tensors, %d values", len(params), params.num_parameters())
    return params


def write_checkpoint(path: str | Path, params: Parameters, manifest: dict):
    """One ``.npz``: a JSON manifest plus every parameter as little-endian float64"""
    manifest = dict(manifest, format_version=CHECKPOINT_FORMAT_VERSION,
                    parameters={name: list(t.shape) for name, t in params.named().items()})
    arrays = {name: tensor.data.astype("<f8") for name, tensor in params.named().items()}
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as file:
        np.savez(file, **{MANIFEST_KEY: np.array(json.dumps(manifest, sort_keys=True))}, **arrays)
    logger.info("Wrote checkpoint %s", path)


def read_checkpoint(path: str | Path) -> tuple[dict, dict[str, np.ndarray]]:
    with np.load(path, allow_pickle=False) as archive:
        manifest = json.loads(str(archive[MANIFEST_KEY]))
        if manifest.get("format_version") != CHECKPOINT_FORMAT_VERSION:
            raise ValueError(f"unsupported checkpoint format {manifest.get('format_version')}")
        arrays = {name: archive[name].astype(np.float64) for name in manifest["parameters"]}
    for name, shape in manifest["parameters"].items():
        if list(arrays[name].shape) != shape:
            raise ValueError(f"checkpoint entry {name} has shape {arrays[name].shape}, "
                             f"manifest says {shape}")
    return manifest, arrays
