"""Training config"""
from __future__ import annotations

from dataclasses import asdict, dataclass

from includes.constants import ADAM_BETAS, ADAM_EPS, BATCH_SIZE, LEARNING_RATE, MASK_PROB, \
    NUM_NEGATIVES, PATIENCE, TCL_DELTA, TCL_LAMBDA, TCL_TAU, TOP_K, WEIGHT_DECAY
from includes.exceptions import ConfigError
from training.includes.constants import ABLATIONS, DEFAULT_EPOCHS, MIN_TAU


@dataclass
class TrainConfig:
    lr: float = LEARNING_RATE
    beta1: float = ADAM_BETAS[0]
    beta2: float = ADAM_BETAS[1]
    adam_eps: float = ADAM_EPS
    weight_decay: float = WEIGHT_DECAY
    batch_size: int = BATCH_SIZE
    epochs: int = DEFAULT_EPOCHS
    patience: int = PATIENCE
    seed: int = 0
    rho: float = MASK_PROB
    delta: int = TCL_DELTA
    tau: float = TCL_TAU
    lam: float = TCL_LAMBDA
    ablation: str = "full"
    tcl_form: str = "standard"
    k: int = TOP_K
    num_negatives: int = NUM_NEGATIVES
    negative_strategy: str = "uniform"
    eval_batch_size: int = 256
    prefetch: int = 2
    progress: bool = True

    def validate(self) -> "TrainConfig":
        if not self.lr > 0:
            raise ConfigError("train.lr", f"must be > 0, got {self.lr}")
        for name in ("beta1", "beta2"):
            if not 0 <= getattr(self, name) < 1:
                raise ConfigError(f"train.{name}", f"must lie in [0, 1), got {getattr(self, name)}")
        if not self.adam_eps > 0:
            raise ConfigError("train.adam_eps", "must be > 0")
        if self.weight_decay < 0:
            raise ConfigError("train.weight_decay", "must be >= 0")
        for name, low in (("batch_size", 1), ("epochs", 0), ("patience", 1), ("k", 1),
                          ("num_negatives", 1), ("eval_batch_size", 1), ("prefetch", 0),
                          ("delta", 0)):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < low:
                raise ConfigError(f"train.{name}", f"must be an integer >= {low}, got {value!r}")
        if not 0 < self.rho <= 1:
            raise ConfigError("train.rho", f"must lie in (0, 1], got {self.rho}")
        if not self.tau >= MIN_TAU:
            raise ConfigError("train.tau", f"must be >= {MIN_TAU}, got {self.tau}")
        if self.lam < 0:
            raise ConfigError("train.lam", f"must be >= 0, got {self.lam}")
        if self.ablation not in ABLATIONS:
            raise ConfigError("train.ablation", f"must be one of {ABLATIONS}, got {self.ablation!r}")
        if self.tcl_form not in ("standard", "as_printed"):
            raise ConfigError("train.tcl_form", f"unknown form {self.tcl_form!r}")
        if self.negative_strategy not in ("uniform", "popularity"):
            raise ConfigError("train.negative_strategy", f"unknown strategy {self.negative_strategy!r}")
        return self

    def to_dict(self) -> dict:
        return asdict(self)
