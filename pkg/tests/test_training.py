"""Optimizer, ablation wiring, the training loop and sweeps"""
import json
from dataclasses import replace

import numpy as np
import pytest

from data.dataset import preprocess
from data.sequences import Batch, build_sequences
from data.synth import SynthConfig, synth_generate
from includes.exceptions import ConfigError, NonFiniteGradientError
from model.config import ModelConfig
from model.includes.constants import ABS_POS, ABS_TIME, CONTENT, REL_POS, REL_TIME
from model.network import load_checkpoint
from model.parameters import Parameters
from numerics.tensor import Tensor, backward
from training.ablation import apply_ablation
from training.config import TrainConfig
from training.includes.constants import ABLATIONS, CHECKPOINT_NAME, METRICS_LOG
from training.optimizer import AdamState, adam_step
from training.sweep import GRID_KEYS, SEARCH_SPACE, expand_grid, sweep
from training.trainer import build_model, compute_loss, fit, step_rng, train_epoch, train_model


def single(value, grad):
    params = Parameters({"w": Tensor(np.array(value, dtype=float), requires_grad=True)})
    params["w"].grad = np.array(grad, dtype=float)
    return params


class TestTrainConfig:
    @pytest.mark.parametrize("changes", [dict(lr=0.0), dict(tau=0.001), dict(lam=-1.0),
                                         dict(ablation="nope"), dict(rho=0.0),
                                         dict(tcl_form="x"), dict(batch_size=0)])
    def test_invalid(self, changes):
        with pytest.raises(ConfigError):
            replace(TrainConfig(), **changes).validate()


class TestAdam:
    def test_first_step_moves_by_lr(self):
        params = single([1.0, -2.0], [0.5, -3.0])
        adam_step(params, AdamState(), TrainConfig(lr=0.1))
        np.testing.assert_allclose(params["w"].data, [0.9, -1.9], atol=1e-7)

    def test_bias_correction_over_steps(self):
        cfg = TrainConfig(lr=0.01, beta1=0.9, beta2=0.999, adam_eps=1e-8)
        params, state = single([0.0], [2.0]), AdamState()
        m = v = 0.0
        expected = 0.0
        for step in range(1, 6):
            grad = 2.0 / step
            params["w"].grad = np.array([grad])
            adam_step(params, state, cfg)
            m = 0.9 * m + 0.1 * grad
            v = 0.999 * v + 0.001 * grad ** 2
            expected -= 0.01 * (m / (1 - 0.9 ** step)) / (np.sqrt(v / (1 - 0.999 ** step)) + 1e-8)
        assert state.step == 5
        np.testing.assert_allclose(params["w"].data, [expected], rtol=1e-12)

    def test_decoupled_weight_decay(self):
        params = single([2.0], [0.0])
        adam_step(params, AdamState(), TrainConfig(lr=0.1, weight_decay=0.5))
        np.testing.assert_allclose(params["w"].data, [2.0 - 0.1 * 0.5 * 2.0])

    def test_nan_gradient_raises_and_leaves_params(self):
        params = single([1.0], [np.nan])
        with pytest.raises(NonFiniteGradientError):
            adam_step(params, AdamState(), TrainConfig())
        np.testing.assert_array_equal(params["w"].data, [1.0])

    def test_descends_a_quadratic_bowl(self):
        center = np.array([1.5, -0.5, 3.0])
        params, state = single(np.zeros(3), np.zeros(3)), AdamState()
        cfg = TrainConfig(lr=0.05)
        losses = []
        for _ in range(300):
            w = params["w"]
            losses.append(float(((w.data - center) ** 2).sum()))
            w.grad = 2.0 * (w.data - center)
            adam_step(params, state, cfg)
        assert losses[1] < losses[0]
        assert losses[-1] < 1e-2 * losses[0]

    def test_parameters_without_gradient_are_skipped(self):
        params = single([1.0], [1.0])
        params.add("frozen", Tensor(np.ones(2), requires_grad=True))
        state = adam_step(params, AdamState(), TrainConfig())
        assert "frozen" not in state.m
        np.testing.assert_array_equal(params["frozen"].data, [1.0, 1.0])


class TestAblation:
    def test_variants(self, small_model_cfg):
        train = TrainConfig()
        plans = {name: apply_ablation(small_model_cfg, train, name) for name in ABLATIONS}
        assert plans["full"][0].head_plan == (ABS_TIME, ABS_POS, REL_TIME, REL_POS)
        assert plans["no_tcl"][1].lam == 0.0
        assert plans["no_abs_mhar"][0].head_plan == (REL_TIME, REL_POS)
        assert plans["no_rel_mhar"][0].head_plan == (ABS_TIME, ABS_POS)
        no_mhar = plans["no_mhar"][0]
        assert set(no_mhar.head_plan) == {CONTENT} and no_mhar.input_position and not no_mhar.input_time
        assert plans["transformer_t"][0].input_time
        assert all(cfg.ablation == name for name, (_, cfg) in plans.items())

    def test_no_mhar_ignores_days(self, small_model_cfg, tiny_dataset):
        items = np.array([[0, 1, 5, 2], [3, 1, 8, 7]])
        early, late = np.array([[0, 2, 4, 6], [1, 3, 5, 7]]), np.array([[0, 11, 12, 20], [0, 0, 9, 9]])
        outputs = {}
        for name in ("no_mhar", "transformer_t"):
            model_cfg, train = apply_ablation(small_model_cfg, TrainConfig(), name)
            model = build_model(model_cfg, train, tiny_dataset)
            outputs[name] = [model.forward(Batch(items, days)).data for days in (early, late)]
        np.testing.assert_allclose(*outputs["no_mhar"], atol=1e-12)
        assert not np.allclose(*outputs["transformer_t"])

    def test_unknown(self, small_model_cfg):
        with pytest.raises(ConfigError):
            apply_ablation(small_model_cfg, TrainConfig(), "w/o everything")


class TestTrainer:
    def test_step_rng_streams_differ(self):
        assert step_rng(0, 1, 2, 3).random() != step_rng(0, 1, 2, 4).random()
        assert step_rng(0, 1, 2, 3).random() == step_rng(0, 1, 2, 3).random()

    def test_no_tcl_skips_second_pass(self, small_model, tiny_dataset, fast_train_cfg):
        batch = build_sequences(tiny_dataset, small_model.config.max_len)
        loss = compute_loss(small_model, batch, replace(fast_train_cfg, lam=0.0), 1, 0)
        assert loss.tcl is None and loss.total is loss.mlm

    def test_total_gradient_is_sum_of_parts(self, small_model, tiny_dataset, fast_train_cfg):
        batch = build_sequences(tiny_dataset, small_model.config.max_len)
        cfg = replace(fast_train_cfg, lam=0.3)

        def gradients(part):
            small_model.params.zero_grad()
            backward(getattr(compute_loss(small_model, batch, cfg, 1, 0), part))
            return {name: np.zeros(t.shape) if t.grad is None else t.grad.copy()
                    for name, t in small_model.params.named().items()}
        total, mlm, tcl = gradients("total"), gradients("mlm"), gradients("tcl")
        for name, grad in total.items():
            np.testing.assert_allclose(grad, mlm[name] + 0.3 * tcl[name], atol=1e-10)

    def test_no_tcl_trains_like_zero_lambda(self, tiny_dataset, small_model_cfg, fast_train_cfg):
        ablated = train_model(tiny_dataset, small_model_cfg,
                              replace(fast_train_cfg, ablation="no_tcl"), test=False)
        weighted = train_model(tiny_dataset, small_model_cfg, replace(fast_train_cfg, lam=0.0),
                               test=False)
        assert ablated.best_epoch == weighted.best_epoch
        first, second = ablated.model.params.state(), weighted.model.params.state()
        assert all(np.array_equal(first[k], second[k]) for k in first)

    def test_epoch_reduces_loss(self, tiny_dataset, small_model_cfg, fast_train_cfg):
        cfg = replace(fast_train_cfg, lr=0.01)
        model = build_model(small_model_cfg, cfg, tiny_dataset)
        rows = build_sequences(tiny_dataset, small_model_cfg.max_len)
        state = AdamState()
        losses = [train_epoch(model, rows, cfg, state, epoch).total for epoch in range(1, 31)]
        assert losses[-1] < losses[0]

    def test_fit_writes_metrics_and_checkpoint(self, tiny_dataset, small_model_cfg,
                                               fast_train_cfg, tmp_path):
        result = train_model(tiny_dataset, small_model_cfg, fast_train_cfg, tmp_path)
        lines = (tmp_path / METRICS_LOG).read_text().splitlines()
        assert 1 <= len(lines) <= fast_train_cfg.epochs
        record = json.loads(lines[0])
        assert set(record) == {"epoch", "mlm_loss", "tcl_loss", "total", "val_HR@3", "val_NDCG@3"}
        assert record["tcl_loss"] > 0
        assert 0 <= result.best_epoch <= len(lines)
        assert result.test is not None and result.test.split == "test"
        restored = load_checkpoint(tmp_path / CHECKPOINT_NAME)
        for name, tensor in result.model.params.named().items():
            np.testing.assert_array_equal(restored.params[name].data, tensor.data)

    def test_no_tcl_logs_zero_contrastive_loss(self, tiny_dataset, small_model_cfg,
                                               fast_train_cfg, tmp_path):
        train_model(tiny_dataset, small_model_cfg, replace(fast_train_cfg, ablation="no_tcl"),
                    tmp_path)
        for line in (tmp_path / METRICS_LOG).read_text().splitlines():
            assert json.loads(line)["tcl_loss"] == 0.0

    def test_same_seed_same_weights(self, tiny_dataset, small_model_cfg, fast_train_cfg):
        cfg = replace(small_model_cfg, dropout_rate=0.2)
        first = train_model(tiny_dataset, cfg, fast_train_cfg, test=False).model.params.state()
        second = train_model(tiny_dataset, cfg, replace(fast_train_cfg, prefetch=2),
                             test=False).model.params.state()
        assert all(np.array_equal(first[k], second[k]) for k in first)

    def test_zero_epochs_keeps_initial_model(self, tiny_dataset, small_model_cfg, fast_train_cfg):
        cfg = replace(fast_train_cfg, epochs=0)
        model = build_model(small_model_cfg, cfg, tiny_dataset)
        initial = model.params.state()
        result = fit(model, tiny_dataset, cfg)
        assert result.best_epoch == 0 and result.history == []
        assert all(np.array_equal(initial[k], v) for k, v in model.params.state().items())


class TestSweep:
    def test_expand_grid_order(self):
        cells = expand_grid({"delta": [7, 30], "lambda": [0.1], "seeds": [0, 1]})
        assert cells == [{"delta": 7, "lambda": 0.1, "seed": 0}, {"delta": 7, "lambda": 0.1, "seed": 1},
                         {"delta": 30, "lambda": 0.1, "seed": 0}, {"delta": 30, "lambda": 0.1, "seed": 1}]

    def test_search_space_covers_every_key(self):
        assert set(SEARCH_SPACE) == set(GRID_KEYS)
        cells = expand_grid({**SEARCH_SPACE, "seeds": [0]})
        assert len(cells) == int(np.prod([len(v) for v in SEARCH_SPACE.values()]))
        assert cells[0] == {key: values[0] for key, values in SEARCH_SPACE.items()} | {"seed": 0}

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            expand_grid({"alpha": [1]})

    def test_sweep_csv(self, tiny_dataset, small_model_cfg, fast_train_cfg, tmp_path):
        cfg = replace(fast_train_cfg, epochs=1)
        table = sweep(tiny_dataset, {"delta": [1, 5]}, small_model_cfg, cfg, out_dir=tmp_path)
        assert list(table["delta"]) == [1, 5]
        assert {"val_hr@3", "val_ndcg@3", "test_hr@3", "test_ndcg@3", "best_epoch"} <= set(table)
        assert (tmp_path / "sweep.csv").exists()


def synthetic_dataset(seed):
    cfg = SynthConfig(num_users=2000, num_items=500, horizon_days=365, trend_window=30,
                      p_trend=0.7, seed=seed)
    return preprocess(synth_generate(cfg), min_user=5, min_item=5)


def mean_and_error(values):
    values = np.asarray(values, dtype=float)
    return values.mean(), values.std(ddof=1) / np.sqrt(len(values))


@pytest.mark.slow
class TestPlantedStructure:
    """Scaled-down reproductions on synthetic data; each takes many minutes"""
    MODEL = dict(hidden_dim=32, num_layers=2, max_len=30, dropout_rate=0.2)

    def run(self, ablation, seed, **train):
        dataset = synthetic_dataset(seed)
        cfg = TrainConfig(seed=seed, ablation=ablation, epochs=20, progress=False, **train)
        return train_model(dataset, ModelConfig(**self.MODEL), cfg)

    def test_contrastive_task_helps(self):
        gains = [self.run("full", s).test.hr_at_k - self.run("no_tcl", s).test.hr_at_k
                 for s in range(5)]
        mean, error = mean_and_error(gains)
        assert mean > 0 and mean >= 2 * error

    def test_mhar_beats_content_heads(self):
        gains = [self.run("full", s).test.ndcg_at_k - self.run("no_mhar", s).test.ndcg_at_k
                 for s in range(5)]
        mean, error = mean_and_error(gains)
        assert mean > 0 and mean >= 2 * error

    def test_best_window_matches_trend_length(self):
        dataset = synthetic_dataset(0)
        table = sweep(dataset, {"delta": [7, 15, 30, 60, 100], "seeds": [0, 1, 2]},
                      ModelConfig(**self.MODEL), TrainConfig(epochs=20, progress=False))
        best = table.groupby("delta")["val_hr@10"].mean().idxmax()
        assert best in (15, 30, 60)
