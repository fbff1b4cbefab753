"""Interval matrices, heads, the full network and its gradients"""
from dataclasses import replace

import numpy as np
import pytest

from data.sequences import Batch, build_sequences
from includes.constants import FD_NOISE_FLOOR
from includes.exceptions import ConfigError, DimensionError
from model.attention import HeadWeights, absolute_head, compute_PI, compute_TI, content_head, \
    relative_head
from model.config import ModelConfig
from model.includes.constants import CONTENT
from model.network import TemProxRec, load_checkpoint
from model.parameters import init_parameters, truncated_normal
from numerics.gradcheck import grad_check
from numerics.tensor import Tensor, backward
from training.config import TrainConfig
from training.trainer import compute_loss

TOL = 1e-4


def widen(params, rng, std=0.3):
    """Re-draw every non-norm tensor with a larger spread so gradients are not tiny"""
    for name, tensor in params.named().items():
        if not name.endswith("norm.gain"):
            tensor.data = rng.normal(0.0, std, size=tensor.shape)


def head(rng, d, d_h, relative=False, absolute=False):
    draw = lambda *shape: Tensor(rng.normal(0.0, 0.5, size=shape), requires_grad=True)
    extra = dict(relation=draw(d, d_h), content_bias=draw(d_h), position_bias=draw(d_h)) \
        if relative else {}
    if absolute:
        extra["embedding"] = draw(d, d)
    return HeadWeights(query=draw(d, d_h), key=draw(d, d_h), value=draw(d, d_h), **extra)


def grid_batch(rng, rows=2, n=4, num_items=6, span=30):
    items = rng.integers(1, num_items + 1, size=(rows, n))
    days = np.sort(rng.integers(0, span, size=(rows, n)), axis=1)
    return Batch(items, days)


class TestIntervals:
    def test_time_intervals(self, rng):
        for _ in range(1000):
            days = np.sort(rng.integers(0, 500, size=int(rng.integers(1, 12))))
            k = int(rng.integers(1, 64))
            ti = compute_TI(days, k)
            assert ti.min() >= 0 and ti.max() <= k
            np.testing.assert_array_equal(ti, ti.T)
            assert np.all(np.diag(ti) == 0)
            np.testing.assert_array_equal(ti, np.minimum(np.abs(days[None, :] - days[:, None]), k))

    def test_time_intervals_example(self):
        np.testing.assert_array_equal(compute_TI(np.array([0, 3, 300]), 256),
                                      [[0, 3, 256], [3, 0, 256], [256, 256, 0]])

    def test_position_intervals(self):
        for n in range(1, 12):
            for k in range(1, 5):
                pi = compute_PI(n, k)
                assert pi.min() >= -k and pi.max() <= k
                np.testing.assert_array_equal(pi, -pi.T)
        np.testing.assert_array_equal(compute_PI(3, 1), [[0, 1, 1], [-1, 0, 1], [-1, -1, 0]])


class TestHeads:
    def test_pad_keys_get_zero_weight(self, rng):
        h = Tensor(rng.normal(size=(2, 4, 8)))
        pad_mask = np.array([[False, True, True, True], [False, False, True, True]])
        for out, weights in (content_head(h, pad_mask, head(rng, 8, 2)),
                             absolute_head(h, Tensor(rng.normal(size=(4, 8))), pad_mask,
                                           head(rng, 8, 2, absolute=True)),
                             relative_head(h, Tensor(rng.normal(size=(3, 8))), compute_PI(4, 1) + 1,
                                           pad_mask, head(rng, 8, 2, relative=True))):
            assert out.shape == (2, 4, 2)
            assert np.all(weights.data[0, :, 0] == 0.0)
            assert np.all(weights.data[1, :, :2] == 0.0)
            np.testing.assert_allclose(weights.data.sum(axis=-1), 1.0, atol=1e-9)

    def test_absolute_head_with_zero_embedding_is_content_head(self, rng):
        h = Tensor(rng.normal(size=(1, 3, 4)))
        weights = head(rng, 4, 2, absolute=True)
        mask = np.ones((1, 3), dtype=bool)
        np.testing.assert_allclose(absolute_head(h, Tensor(np.zeros((3, 4))), mask, weights)[0].data,
                                   content_head(h, mask, weights)[0].data, atol=1e-12)

    def test_absolute_head_scores(self, rng):
        h = Tensor(rng.normal(size=(1, 3, 4)))
        e_abs = Tensor(rng.normal(size=(3, 4)))
        weights = head(rng, 4, 2, absolute=True)
        _, attention = absolute_head(h, e_abs, np.ones((1, 3), dtype=bool), weights)
        fused = h.data[0] + e_abs.data @ weights.embedding.data
        q, k = fused @ weights.query.data, fused @ weights.key.data
        scores = q @ k.T / np.sqrt(2.0)
        expected = np.exp(scores - scores.max(axis=1, keepdims=True))
        expected /= expected.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(attention.data[0], expected, atol=1e-12)

    def test_absolute_head_projects_the_embedding(self, rng):
        h = Tensor(rng.normal(size=(1, 3, 4)))
        e_abs = Tensor(rng.normal(size=(3, 4)))
        weights = head(rng, 4, 2, absolute=True)
        mask = np.ones((1, 3), dtype=bool)
        before = absolute_head(h, e_abs, mask, weights)[1].data
        weights.embedding.data = np.zeros((4, 4))
        np.testing.assert_allclose(absolute_head(h, e_abs, mask, weights)[1].data,
                                   content_head(h, mask, weights)[1].data, atol=1e-12)
        assert not np.allclose(before, content_head(h, mask, weights)[1].data)

    def test_absolute_head_needs_embedding_projection(self, rng):
        with pytest.raises(DimensionError):
            absolute_head(Tensor(rng.normal(size=(1, 3, 4))), Tensor(np.ones((3, 4))),
                          np.ones((1, 3), dtype=bool), head(rng, 4, 2))

    def test_absolute_head_gradients(self, rng):
        h = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
        e_abs = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
        weights = head(rng, 4, 2, absolute=True)
        mask = np.array([[True, True, True], [False, True, True]])
        f = lambda: (absolute_head(h, e_abs, mask, weights)[0] ** 2).sum()
        assert grad_check(f, [h, e_abs, weights.query, weights.key, weights.value,
                              weights.embedding]) < TOL

    def test_relative_head_scores(self, rng):
        # one query, two keys: compare with the score formula written out
        h = Tensor(rng.normal(size=(1, 2, 4)))
        weights = head(rng, 4, 4, relative=True)
        table = Tensor(rng.normal(size=(3, 4)))
        index = np.array([[0, 2], [1, 0]])
        _, attention = relative_head(h, table, index, np.ones((1, 2), dtype=bool), weights)
        q, k = h.data[0] @ weights.query.data, h.data[0] @ weights.key.data
        r = table.data @ weights.relation.data
        u, w = weights.content_bias.data, weights.position_bias.data
        scores = np.array([[(q[i] + u) @ k[j] + (q[i] + w) @ r[index[i, j]] for j in range(2)]
                           for i in range(2)]) / 2.0
        expected = np.exp(scores - scores.max(axis=1, keepdims=True))
        expected /= expected.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(attention.data[0], expected, atol=1e-12)

    def test_interval_index_shape(self, rng):
        with pytest.raises(DimensionError):
            relative_head(Tensor(rng.normal(size=(1, 3, 4))), Tensor(np.ones((3, 4))),
                          np.zeros((2, 2), dtype=int), np.ones((1, 3), dtype=bool),
                          head(rng, 4, 2, relative=True))

    def test_head_gradients(self, rng):
        h = Tensor(rng.normal(size=(2, 3, 4)), requires_grad=True)
        table = Tensor(rng.normal(size=(5, 4)), requires_grad=True)
        weights = head(rng, 4, 2, relative=True)
        index = compute_TI(np.array([[0, 1, 9], [2, 2, 3]]), 4)
        mask = np.array([[True, True, True], [False, True, True]])
        f = lambda: (relative_head(h, table, index, mask, weights)[0] ** 2).sum()
        assert grad_check(f, [h, table, weights.query, weights.key, weights.value,
                              weights.relation, weights.content_bias, weights.position_bias]) < TOL


class TestModelConfig:
    def test_head_dim(self):
        assert ModelConfig(hidden_dim=64).head_dim == 16

    @pytest.mark.parametrize("changes", [dict(hidden_dim=10), dict(head_plan=("abs_time", "bogus")),
                                         dict(dropout_rate=1.0), dict(max_len=1)])
    def test_invalid(self, changes):
        with pytest.raises(ConfigError):
            replace(ModelConfig(), **changes).validate()

    def test_dict_round_trip(self):
        cfg = ModelConfig(hidden_dim=16, head_plan=[CONTENT, CONTENT])
        assert ModelConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ConfigError):
            ModelConfig.from_dict({"width": 3})


class TestParameters:
    def test_truncated_normal_bounds(self, rng):
        values = truncated_normal(rng, (2000,), std=0.02, bound=0.02)
        assert np.abs(values).max() <= 0.02

    def test_table_shapes(self, small_model_cfg):
        params = init_parameters(small_model_cfg, num_items=10, num_days=30,
                                 rng=np.random.default_rng(0))
        assert params["item_table"].shape == (12, 8)
        assert params["time_table"].shape == (30, 8)
        assert params["time_interval_table"].shape == (5, 8)
        assert params["position_interval_table"].shape == (5, 8)
        assert "layers.0.heads.2.relation" in params
        assert "layers.0.heads.0.relation" not in params
        assert params["layers.0.heads.0.embedding"].shape == (8, 8)
        assert "layers.0.heads.2.embedding" not in params
        assert params["layers.0.ffn.w1"].shape == (8, 32)

    def test_same_seed_same_weights(self, small_model_cfg):
        first = init_parameters(small_model_cfg, 5, 5, np.random.default_rng(3)).state()
        second = init_parameters(small_model_cfg, 5, 5, np.random.default_rng(3)).state()
        assert all(np.array_equal(first[k], second[k]) for k in first)


class TestNetwork:
    def test_forward_shape_and_attention(self, small_model, rng):
        batch = grid_batch(rng, rows=3, n=5, num_items=small_model.num_items, span=10)
        hidden, attention = small_model.forward(batch, return_attention=True)
        assert hidden.shape == (3, 5, 8)
        assert len(attention) == 1 and len(attention[0]) == 4

    def test_rows_longer_than_max_len(self, small_model, rng):
        with pytest.raises(DimensionError):
            small_model.forward(grid_batch(rng, rows=1, n=7, num_items=small_model.num_items))

    def test_embedding_gradient_counts_occurrences(self, small_model):
        items = np.array([[1, 2, 2], [2, 3, 1]])
        h0 = small_model.embed_items(items)
        small_model.params.zero_grad()
        backward(h0.sum())
        grad = small_model.params["item_table"].grad
        np.testing.assert_allclose(grad[2], np.full(8, 3.0))
        np.testing.assert_allclose(grad[1], np.full(8, 2.0))
        np.testing.assert_allclose(grad[4], 0.0)

    def test_output_excludes_pad_and_mask(self, small_model, rng):
        logits = small_model.output_logits(Tensor(rng.normal(size=(2, 8)))).data
        assert logits.shape == (2, small_model.num_items + 2)
        assert np.all(np.isneginf(logits[:, [0, small_model.mask]]))
        assert np.isfinite(logits[:, 1:-1]).all()

    def test_batch_order_does_not_change_rows(self, small_model, tiny_dataset):
        batch = build_sequences(tiny_dataset, small_model.config.max_len)
        order = np.random.default_rng(3).permutation(len(batch))
        np.testing.assert_allclose(small_model.forward(batch.take(order)).data,
                                   small_model.forward(batch).data[order], atol=1e-12)

    def test_pad_days_are_ignored(self, small_model):
        # days under PAD are zeroed by Batch, so they cannot reach real positions
        base = Batch(np.array([[0, 0, 3, 4]]), np.array([[0, 0, 2, 5]]))
        longer = Batch(np.array([[0, 0, 3, 4]]), np.array([[7, 1, 2, 5]]))
        np.testing.assert_allclose(small_model.forward(base).data[0, 2:],
                                   small_model.forward(longer).data[0, 2:], atol=1e-12)

    def test_days_beyond_span_are_clamped(self, small_model):
        batch = Batch(np.array([[1, 2, 3]]), np.array([[0, 5, 10_000]]))
        assert np.isfinite(small_model.forward(batch).data).all()

    def test_relative_only_model_is_shift_invariant(self, small_model_cfg, tiny_dataset):
        cfg = replace(small_model_cfg, head_plan=("rel_time", "rel_pos"))
        model = TemProxRec(cfg, tiny_dataset.num_items, 200, rng=np.random.default_rng(1))
        items = np.array([[1, 4, 2, 6]])
        days = np.array([[0, 3, 4, 9]])
        np.testing.assert_allclose(model.forward(Batch(items, days)).data,
                                   model.forward(Batch(items, days + 50)).data, atol=1e-12)

    def test_zero_temporal_tables_give_content_transformer(self, small_model_cfg, tiny_dataset):
        model = TemProxRec(small_model_cfg, tiny_dataset.num_items, tiny_dataset.num_days,
                           rng=np.random.default_rng(2))
        content_cfg = replace(small_model_cfg, head_plan=(CONTENT,) * 4)
        content = TemProxRec(content_cfg, tiny_dataset.num_items, tiny_dataset.num_days,
                             rng=np.random.default_rng(5))
        for name, tensor in model.params.named().items():
            if name.endswith(("_table", "content_bias", "position_bias")) and name != "item_table":
                tensor.data = np.zeros(tensor.shape)
            if name in content.params:
                content.params[name].data = tensor.data
        batch = Batch(np.array([[0, 1, 5, 2], [3, 1, 8, 7]]), np.array([[0, 1, 4, 9], [2, 3, 5, 20]]))
        np.testing.assert_allclose(model.forward(batch).data, content.forward(batch).data,
                                   atol=1e-9)

    def test_checkpoint_round_trip(self, small_model, tmp_path, rng):
        path = tmp_path / "model.npz"
        small_model.save_checkpoint(path, {"epoch": 3})
        loaded = load_checkpoint(path)
        assert loaded.config == small_model.config
        batch = grid_batch(rng, rows=2, n=4, num_items=small_model.num_items, span=5)
        np.testing.assert_array_equal(loaded.forward(batch).data, small_model.forward(batch).data)

    def test_one_layer_gradient(self, small_model_cfg, rng):
        cfg = replace(small_model_cfg, max_len=4)
        model = TemProxRec(cfg, num_items=6, num_days=30, rng=np.random.default_rng(0))
        widen(model.params, rng)
        batch = grid_batch(rng, rows=1, n=4)
        target = rng.normal(size=(1, 4, 8))
        f = lambda: (model.forward(batch) * target).sum()
        assert grad_check(f, model.params, noise_floor=FD_NOISE_FLOOR) < TOL

    def test_full_model_gradient_with_both_losses(self, small_model_cfg, rng):
        cfg = replace(small_model_cfg, max_len=4, dropout_rate=0.1)
        model = TemProxRec(cfg, num_items=6, num_days=30, rng=np.random.default_rng(0))
        widen(model.params, rng)
        train = TrainConfig(rho=0.5, delta=5, tau=0.5, lam=0.5, seed=11)
        batch = grid_batch(rng, rows=2, n=4)
        loss = compute_loss(model, batch, train, epoch=1, step=0)
        assert loss.tcl is not None
        assert grad_check(lambda: compute_loss(model, batch, train, epoch=1, step=0).total,
                          model.params, noise_floor=FD_NOISE_FLOOR) < TOL
