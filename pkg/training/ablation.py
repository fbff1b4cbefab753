"""Ablation

Encoder and objective wiring of each ablation variant
"""
import logging
from dataclasses import replace

from includes.exceptions import ConfigError
from model.config import ModelConfig
from model.includes.constants import ABS_POS, ABS_TIME, CONTENT, DEFAULT_HEAD_PLAN, REL_POS, \
    REL_TIME
from training.config import TrainConfig
from training.includes.constants import ABLATIONS

logger = logging.getLogger(__name__)


def apply_ablation(model_cfg: ModelConfig, train_cfg: TrainConfig,
                   ablation: str | None = None) -> tuple[ModelConfig, TrainConfig]:
    """Configs rewired for ``ablation`` (``train_cfg.ablation`` when omitted)

    ``no_abs_mhar`` and ``no_rel_mhar`` split d over the two remaining heads. ``no_mhar`` and
    ``transformer_t`` use content heads with learned position (and, for ``transformer_t``,
    time) embeddings added to the input.

    Raises:
        ConfigError: unknown name
    """
    ablation = train_cfg.ablation if ablation is None else ablation
    if ablation not in ABLATIONS:
        raise ConfigError("train.ablation", f"must be one of {ABLATIONS}, got {ablation!r}")
    train_cfg = replace(train_cfg, ablation=ablation)
    content_plan = (CONTENT,) * len(DEFAULT_HEAD_PLAN)
    match ablation:
        case "no_tcl":
            train_cfg = replace(train_cfg, lam=0.0)
        case "no_abs_mhar":
            model_cfg = replace(model_cfg, head_plan=(REL_TIME, REL_POS))
        case "no_rel_mhar":
            model_cfg = replace(model_cfg, head_plan=(ABS_TIME, ABS_POS))
        case "no_mhar":
            model_cfg = replace(model_cfg, head_plan=content_plan, input_position=True,
                                input_time=False)
        case "transformer_t":
            model_cfg = replace(model_cfg, head_plan=content_plan, input_position=True,
                                input_time=True)
    logger.debug("Ablation %s: heads %s, lambda %s", ablation, model_cfg.head_plan, train_cfg.lam)
    return model_cfg.validate(), train_cfg.validate()
