"""Training

Optimizer, epoch loop, ablation wiring and grid sweeps
"""
from training.config import TrainConfig
from training.optimizer import AdamState, adam_step
from training.ablation import apply_ablation
from training.trainer import EpochStats, FitResult, build_model, compute_loss, fit, step_rng, \
    train_epoch, train_model
from training.sweep import expand_grid, sweep
