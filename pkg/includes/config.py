"""Config

Run configuration: dataclass defaults, then a YAML file, then command-line overrides.
Every run writes the resolved result back out as YAML, which reproduces the run.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from analysis.temporal import OverlapConfig
from data.dataset import date_bound
from data.includes.constants import PRESETS
from data.sequences import SPLITS
from data.synth import SynthConfig
from includes.constants import GRID_DELTA
from includes.exceptions import ConfigError
from model.config import ModelConfig
from training.config import TrainConfig
from training.includes.constants import ABLATIONS
from training.sweep import GRID_KEYS

logger = logging.getLogger(__name__)

RESOLVED_CONFIG = "resolved_config.yaml"


@dataclass
class DataConfig:
    path: str | None = None
    min_user: int = 5
    min_item: int = 5
    date_range: list | None = None
    iterate: bool = False
    preset: str | None = None

    def validate(self) -> "DataConfig":
        if self.preset is not None and self.preset not in PRESETS:
            raise ConfigError("data.preset", f"must be one of {sorted(PRESETS)}, got {self.preset!r}")
        for name in ("min_user", "min_item"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                raise ConfigError(f"data.{name}", f"must be an integer >= 1, got {value!r}")
        if self.date_range is not None:
            if not isinstance(self.date_range, list | tuple) or len(self.date_range) != 2:
                raise ConfigError("data.date_range", "must hold exactly [start, end]")
            start = date_bound(self.date_range[0], end=False)
            if start > date_bound(self.date_range[1], end=True):
                raise ConfigError("data.date_range", "start lies after end")
        return self

    def with_preset(self) -> "DataConfig":
        """Thresholds and date range of the named benchmark preset, if any"""
        if self.preset is None:
            return self
        min_user, min_item, date_range = PRESETS[self.preset]
        return replace(self, min_user=min_user, min_item=min_item, date_range=list(date_range))


@dataclass
class SweepConfig:
    grid: dict = field(default_factory=lambda: {"delta": list(GRID_DELTA), "seeds": [0]})
    workers: int = 1
    full_grid: bool = False

    def validate(self) -> "SweepConfig":
        if not isinstance(self.grid, dict) or not self.grid:
            raise ConfigError("sweep.grid", "must be a non-empty mapping")
        for key, values in self.grid.items():
            if key not in GRID_KEYS and key != "seeds":
                raise ConfigError(f"sweep.grid.{key}", "unknown grid key")
            if not isinstance(values, list) or not values:
                raise ConfigError(f"sweep.grid.{key}", "must be a non-empty list")
        if not isinstance(self.workers, int) or self.workers < 1:
            raise ConfigError("sweep.workers", f"must be an integer >= 1, got {self.workers!r}")
        return self


@dataclass
class EvalConfig:
    checkpoint: str | None = None
    split: str = "test"

    def validate(self) -> "EvalConfig":
        if self.split not in SPLITS:
            raise ConfigError("evaluate.split", f"must be one of {SPLITS}, got {self.split!r}")
        return self


@dataclass
class AblateConfig:
    variants: list = field(default_factory=lambda: list(ABLATIONS))

    def validate(self) -> "AblateConfig":
        if not self.variants or any(v not in ABLATIONS for v in self.variants):
            raise ConfigError("ablate.variants", f"must be a non-empty list drawn from {ABLATIONS}, "
                                                 f"got {self.variants!r}")
        return self


SECTIONS = {
    "data": DataConfig,
    "synth": SynthConfig,
    "model": ModelConfig,
    "train": TrainConfig,
    "analysis": OverlapConfig,
    "sweep": SweepConfig,
    "evaluate": EvalConfig,
    "ablate": AblateConfig,
}


def _coerce(name: str, cls, values: dict) -> dict:
    """YAML reads ``1e-3`` as a string; turn such values of float fields into floats"""
    values = dict(values)
    for field_ in fields(cls):
        value = values.get(field_.name)
        if "float" not in str(field_.type) or value is None or isinstance(value, bool):
            continue
        if isinstance(value, str | int):
            try:
                values[field_.name] = float(value)
            except ValueError as error:
                raise ConfigError(f"{name}.{field_.name}", f"not a number: {value!r}") from error
    return values


def _section(name: str, values) -> object:
    cls = SECTIONS[name]
    if values is None:
        return cls()
    if not isinstance(values, dict):
        raise ConfigError(name, "must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError(f"{name}.{unknown[0]}", "unknown key")
    try:
        return cls(**_coerce(name, cls, values))
    except TypeError as error:
        raise ConfigError(name, str(error)) from error


@dataclass
class RunConfig:
    """Everything a subcommand needs

    ``seed`` is the master seed; resolving copies it into the train and synth sections.
    """
    seed: int = 0
    out: str = "runs/default"
    data: DataConfig = field(default_factory=DataConfig)
    synth: SynthConfig = field(default_factory=SynthConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    analysis: OverlapConfig = field(default_factory=OverlapConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    evaluate: EvalConfig = field(default_factory=EvalConfig)
    ablate: AblateConfig = field(default_factory=AblateConfig)

    @classmethod
    def from_dict(cls, values: dict | None) -> "RunConfig":
        values = values or {}
        if not isinstance(values, dict):
            raise ConfigError("config", "top level must be a mapping")
        unknown = sorted(set(values) - {"seed", "out"} - set(SECTIONS))
        if unknown:
            raise ConfigError(unknown[0], "unknown section")
        sections = {name: _section(name, values.get(name)) for name in SECTIONS}
        return cls(seed=values.get("seed", 0), out=values.get("out", "runs/default"), **sections)

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls()
        try:
            with open(path, "r", encoding="utf-8") as file:
                values = yaml.safe_load(file)
        except (yaml.YAMLError, ValueError) as error:
            raise ConfigError("config", f"cannot parse {path}: {error}") from error
        return cls.from_dict(values)

    def override(self, dotted: dict) -> "RunConfig":
        """Apply ``{"section.field": value}`` overrides; None values are skipped"""
        for key, value in dotted.items():
            if value is None:
                continue
            if "." not in key:
                if key not in ("seed", "out"):
                    raise ConfigError(key, "unknown key")
                setattr(self, key, value)
                continue
            section, name = key.split(".", 1)
            target = getattr(self, section, None)
            if section not in SECTIONS or name not in {f.name for f in fields(target)}:
                raise ConfigError(key, "unknown key")
            setattr(self, section, replace(target, **{name: value}))
        return self

    def resolve(self) -> "RunConfig":
        """Propagate the master seed and validate every section"""
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", f"must be an integer >= 0, got {self.seed!r}")
        self.train = replace(self.train, seed=self.seed)
        self.synth = replace(self.synth, seed=self.seed)
        for name in SECTIONS:
            getattr(self, name).validate()
        return self

    def to_dict(self) -> dict:
        values = {"seed": self.seed, "out": str(self.out)}
        for name in SECTIONS:
            section = asdict(getattr(self, name))
            values[name] = {key: list(value) if isinstance(value, tuple) else value
                            for key, value in section.items()}
        return values

    def dump(self, directory: str | Path) -> Path:
        path = Path(directory) / RESOLVED_CONFIG
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as file:
            yaml.safe_dump(self.to_dict(), file, sort_keys=False)
        logger.info("Wrote %s", path)
        return path
