"""Model config"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

from includes.constants import CLIP_POSITION, CLIP_TIME, DROPOUT, HIDDEN_DIM, MAX_LEN, NUM_LAYERS
from includes.exceptions import ConfigError
from model.includes.constants import DEFAULT_HEAD_PLAN, HEAD_KINDS


@dataclass
class ModelConfig:
    """Network shape

    ``input_position`` and ``input_time`` add the absolute position and time tables to the
    input embedding, as plain transformer encoders do; both are off for the MHAR network,
    which injects them inside its heads instead.
    """
    hidden_dim: int = HIDDEN_DIM
    num_layers: int = NUM_LAYERS
    max_len: int = MAX_LEN
    clip_time: int = CLIP_TIME
    clip_position: int = CLIP_POSITION
    dropout_rate: float = DROPOUT
    head_plan: tuple = field(default=DEFAULT_HEAD_PLAN)
    input_position: bool = False
    input_time: bool = False

    def __post_init__(self):
        self.head_plan = tuple(self.head_plan)

    @property
    def head_dim(self) -> int:
        return self.hidden_dim // len(self.head_plan)

    def validate(self) -> "ModelConfig":
        for name, low in (("hidden_dim", 1), ("num_layers", 0), ("max_len", 2),
                          ("clip_time", 1), ("clip_position", 1)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < low:
                raise ConfigError(f"model.{name}", f"must be an integer >= {low}, got {value!r}")
        if not isinstance(self.dropout_rate, int | float) or not 0 <= self.dropout_rate < 1:
            raise ConfigError("model.dropout_rate", f"must lie in [0, 1), got {self.dropout_rate!r}")
        if not self.head_plan:
            raise ConfigError("model.head_plan", "needs at least one head")
        unknown = [kind for kind in self.head_plan if kind not in HEAD_KINDS]
        if unknown:
            raise ConfigError("model.head_plan", f"unknown head kind(s) {unknown}; "
                                                 f"expected any of {HEAD_KINDS}")
        if self.hidden_dim % len(self.head_plan):
            raise ConfigError("model.hidden_dim", f"{self.hidden_dim} is not divisible by "
                                                  f"{len(self.head_plan)} heads")
        return self

    def to_dict(self) -> dict:
        values = asdict(self)
        values["head_plan"] = list(self.head_plan)
        return values

    @classmethod
    def from_dict(cls, values: dict) -> "ModelConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"model.{unknown[0]}", "unknown key")
        return cls(**values).validate()
