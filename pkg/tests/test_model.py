import math

import numpy as np
import pytest

from pcconv.data import Dataset, Split, sbm_generate, split_ratio
from pcconv.errors import InvalidArgumentError
from pcconv.filters import FilterParams, spectral_oracle
from pcconv.graph import Graph, pc_laplacian
from pcconv.linalg import SparseMatrix
from pcconv.model import (AdamState, ModelConfig, TrainConfig, adam_step, backward, baseline_mode, evaluate,
                          forward, init_model, load_model, loss, predict, save_model, train)

from conftest import random_graph


def softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def objective(model, L, X, y, idx):
    probs, _ = forward(model, L, X)
    return loss(probs, y, idx)


def instance(seed, layers, m=20, d=8, C=3, K=3, t=0.5, N=6):
    rng = np.random.default_rng(seed)
    G = random_graph(rng, m, 0.2)
    cfg = ModelConfig(t=t, N=N, K=K, hidden=6, mlp_layers=layers, dropout=0.0)
    model = init_model(d, C, cfg, seed)
    model.params["theta"] = rng.uniform(-1, 1, K + 1)
    for name in ("b1", "b2"):
        if name in model.params:
            model.params[name] = rng.uniform(-0.5, 0.5, model.params[name].shape)
    X = rng.standard_normal((m, d))
    y = rng.integers(0, C, m)
    idx = rng.choice(m, 12, replace=False)
    return model, model.operator(G), X, y, idx


class TestForward:
    def test_identity_path(self, rng):
        cfg = ModelConfig(K=2, mlp_layers=1, dropout=0.0)
        model = init_model(4, 4, cfg)
        model.params.update(W1=np.eye(4), b1=np.zeros(4), theta=np.array([1.0, 0.0, 0.0]))
        X = rng.standard_normal((6, 4))
        L = pc_laplacian(random_graph(rng, 6, 0.5))
        probs, _ = forward(model, L, X)
        np.testing.assert_allclose(probs, softmax(X), atol=1e-14)

    def test_zero_operator(self, rng):
        model = init_model(5, 3, ModelConfig(K=3, dropout=0.0))
        model.params["theta"] = np.array([0.2, -0.4, 1.1, 0.3])
        X = rng.standard_normal((7, 5))
        probs, cache = forward(model, SparseMatrix.zeros(7), X)
        np.testing.assert_allclose(probs, softmax(1.2 * cache["H"]), atol=1e-13)

    def test_logits_match_spectral_oracle(self, rng):
        cfg = ModelConfig(t=0.5, N=25, K=4, hidden=8, dropout=0.0)
        model = init_model(6, 3, cfg, 3)
        model.params["theta"] = rng.uniform(-1, 1, 5)
        L = pc_laplacian(random_graph(rng, 30, 0.15))
        X = rng.standard_normal((30, 6))
        _, cache = forward(model, L, X)
        ref = spectral_oracle(L.to_dense(), cache["H"], model.filter_params())
        assert np.abs(cache["logits"] - ref).max() <= 1e-7

    def test_rows_sum_to_one(self, rng):
        model, L, X, _, _ = instance(1, 2)
        probs, _ = forward(model, L, 50 * X)
        assert np.abs(probs.sum(axis=1) - 1.0).max() <= 1e-12

    def test_e0_is_graph_independent(self, rng):
        model = init_model(5, 3, ModelConfig(K=2, dropout=0.0), 0)
        model.params["theta"] = np.array([1.0, 0.0, 0.0])
        X = rng.standard_normal((15, 5))
        z1 = forward(model, pc_laplacian(random_graph(rng, 15, 0.2)), X)[1]["logits"]
        z2 = forward(model, pc_laplacian(random_graph(rng, 15, 0.6)), X)[1]["logits"]
        assert np.array_equal(z1, z2)

    def test_dropout_needs_rng_and_changes_output(self, rng):
        model, L, X, _, _ = instance(2, 2)
        model = init_model(X.shape[1], 3, ModelConfig(K=3, hidden=6, dropout=0.5))
        with pytest.raises(InvalidArgumentError):
            forward(model, L, X, training=True)
        p_train = forward(model, L, X, training=True, rng=np.random.default_rng(0))[0]
        p_eval = forward(model, L, X)[0]
        assert not np.allclose(p_train, p_eval)

    def test_dimension_mismatch(self, rng):
        model, L, X, _, _ = instance(0, 1)
        with pytest.raises(InvalidArgumentError):
            forward(model, L, X[:, :3])
        with pytest.raises(InvalidArgumentError):
            forward(model, SparseMatrix.zeros(3), X)


class TestLoss:
    def test_perfect(self):
        assert loss(np.eye(3), [0, 1, 2], [0, 1, 2]) <= 1e-7

    def test_uniform(self):
        assert loss(np.full((4, 5), 0.2), [0, 1, 2, 3], [0, 1, 2, 3]) == pytest.approx(math.log(5))

    def test_two_nodes(self):
        value = loss(np.array([[0.8, 0.2], [0.4, 0.6]]), [0, 1], [0, 1])
        assert value == pytest.approx(-(math.log(0.8) + math.log(0.6)) / 2)
        assert abs(value - 0.3669) <= 1e-4

    def test_clamped(self):
        assert np.isfinite(loss(np.array([[1.0, 0.0]]), [1], [0]))

    def test_empty_index(self):
        with pytest.raises(InvalidArgumentError):
            loss(np.eye(2), [0, 1], [])


class TestBackward:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    @pytest.mark.parametrize("layers", [1, 2])
    def test_finite_differences(self, seed, layers):
        model, L, X, y, idx = instance(seed, layers)
        _, cache = forward(model, L, X)
        grads = backward(model, cache, y, idx)
        h = 1e-5
        for name, value in model.params.items():
            fd = np.zeros_like(value)
            for pos in np.ndindex(value.shape):
                orig = value[pos]
                value[pos] = orig + h
                up = objective(model, L, X, y, idx)
                value[pos] = orig - h
                down = objective(model, L, X, y, idx)
                value[pos] = orig
                fd[pos] = (up - down) / (2 * h)
            err = np.abs(grads[name] - fd).max() / max(np.abs(fd).max(), 1e-8)
            assert err <= 1e-4, name

    def test_weight_decay_only_on_weights(self):
        model, L, X, y, idx = instance(4, 2)
        _, cache = forward(model, L, X)
        g0 = backward(model, cache, y, idx)
        g1 = backward(model, cache, y, idx, weight_decay=0.1)
        for name in g0:
            extra = 0.1 * model.params[name] if name in ("W1", "W2") else 0.0
            np.testing.assert_allclose(g1[name], g0[name] + extra, atol=1e-15)

    def test_zero_signal(self, rng):
        model = init_model(3, 3, ModelConfig(K=2, mlp_layers=1, dropout=0.0))
        model.params.update(W1=np.eye(3), b1=np.zeros(3), theta=np.array([1.0, 0.0, 0.0]))
        y = rng.integers(0, 3, 10)
        X = 60.0 * np.eye(3)[y]
        L = pc_laplacian(random_graph(rng, 10, 0.3))
        _, cache = forward(model, L, X)
        grads = backward(model, cache, y, np.arange(10))
        assert max(np.abs(g).max() for g in grads.values()) <= 1e-6

    def test_theta_gradient_is_bilinear(self):
        model, L, X, y, idx = instance(6, 1)
        _, cache = forward(model, L, X)
        grads = backward(model, cache, y, idx)
        G = cache["probs"].copy()
        G[idx, y[idx]] -= 1.0
        mask = np.zeros(len(y), bool)
        mask[idx] = True
        G = np.where(mask[:, None], G, 0.0) / len(idx)
        inner = np.array([np.sum(G * P) for P in cache["powers"]])
        T = model.table.taylor()
        expected = np.concatenate([[inner[0]], T.T @ inner])
        np.testing.assert_allclose(grads["theta"], expected, rtol=1e-12, atol=1e-15)
        np.testing.assert_allclose(2 * expected, np.concatenate([[2 * inner[0]], T.T @ (2 * inner)]))

    def test_stale_cache(self):
        model, L, X, y, idx = instance(7, 1)
        _, cache = forward(model, L, X)
        model.version += 1
        with pytest.raises(InvalidArgumentError):
            backward(model, cache, y, idx)


class TestAdam:
    def test_zero_gradient(self):
        params = {"w": np.array([1.0, -2.0])}
        adam_step(AdamState(), params, {"w": np.zeros(2)}, 0.1)
        assert params["w"].tolist() == [1.0, -2.0]

    def test_first_step_is_sign(self):
        params = {"w": np.zeros(3)}
        adam_step(AdamState(), params, {"w": np.array([0.3, -5.0, 1e-3])}, 0.01)
        np.testing.assert_allclose(params["w"], [-0.01, 0.01, -0.01], rtol=1e-4)

    def test_constant_gradient_monotone(self):
        params = {"w": np.array([0.0])}
        state = AdamState()
        trace = []
        for _ in range(20):
            adam_step(state, params, {"w": np.array([2.0])}, 0.05)
            trace.append(params["w"][0])
        assert all(b < a for a, b in zip(trace, trace[1:]))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            adam_step(AdamState(), {"w": np.zeros(2)}, {"w": np.zeros(3)}, 0.1)


def toy_dataset():
    G = Graph.from_edges(6, [(0, 1), (2, 3), (4, 5)])
    X = np.eye(6)
    return Dataset(G, X, np.array([0, 0, 1, 1, 0, 1]), 2)


class TestEvaluate:
    def _model_predicting(self, ds, pred):
        cfg = ModelConfig(K=1, mlp_layers=1, dropout=0.0)
        model = init_model(6, 2, cfg)
        W = np.zeros((6, 2))
        W[np.arange(6), pred] = 1.0
        model.params.update(W1=W, b1=np.zeros(2), theta=np.array([1.0, 0.0]))
        return model

    def test_all_correct(self):
        ds = toy_dataset()
        assert evaluate(self._model_predicting(ds, ds.labels), ds, np.arange(6)) == 1.0

    def test_four_of_six(self):
        ds = toy_dataset()
        pred = ds.labels.copy()
        pred[[0, 3]] = 1 - pred[[0, 3]]
        assert round(evaluate(self._model_predicting(ds, pred), ds, np.arange(6)), 4) == 0.6667

    def test_flipped_labels_complement(self):
        ds = toy_dataset()
        pred = np.array([0, 1, 1, 0, 0, 0])
        model = self._model_predicting(ds, pred)
        flipped = Dataset(ds.graph, ds.X, 1 - ds.labels, 2)
        acc = evaluate(model, ds, np.arange(6))
        assert evaluate(model, flipped, np.arange(6)) == pytest.approx(1 - acc)

    def test_ties_pick_lowest_class(self):
        ds = toy_dataset()
        model = self._model_predicting(ds, ds.labels)
        model.params["W1"] = np.zeros((6, 2))
        assert predict(model, model.operator(ds.graph), ds.X).tolist() == [0] * 6

    def test_empty_index(self):
        ds = toy_dataset()
        with pytest.raises(InvalidArgumentError):
            evaluate(self._model_predicting(ds, ds.labels), ds, [])


def small_sbm(seed=0, sigma=0.1):
    ds = sbm_generate(90, 3, 0.1, 0.01, 8, mu=1.0, sigma=sigma, seed=seed)
    return ds, split_ratio(ds, 0.6, 0.2, seed)


class TestTrain:
    def test_separable_fits_training_set(self):
        ds, split = small_sbm()
        model, _ = train(ds, split, ModelConfig(K=2, hidden=16, dropout=0.0),
                         TrainConfig(lr=0.05, max_epochs=200, patience=200))
        assert evaluate(model, ds, split.train_idx) == 1.0

    def test_patience_zero(self):
        ds, split = small_sbm()
        _, history = train(ds, split, ModelConfig(K=2, hidden=8), TrainConfig(max_epochs=50, patience=0))
        assert len(history) == 1

    def test_deterministic(self):
        ds, split = small_sbm(sigma=1.0)
        runs = [train(ds, split, ModelConfig(K=2, hidden=8), TrainConfig(max_epochs=40, patience=40, seed=3))
                for _ in range(2)]
        assert runs[0][1].rows() == runs[1][1].rows()
        for name in runs[0][0].params:
            assert np.array_equal(runs[0][0].params[name], runs[1][0].params[name])

    def test_best_epoch_weights_returned(self):
        ds, split = small_sbm(sigma=1.0)
        model, history = train(ds, split, ModelConfig(K=2, hidden=8), TrainConfig(max_epochs=60, patience=60))
        assert evaluate(model, ds, split.val_idx) == history.best_val_acc == max(history.val_acc)

    def test_mlp_only_freezes_theta(self):
        ds, split = small_sbm()
        model, _ = train(ds, split, baseline_mode(ModelConfig(K=3, hidden=8), "mlp_only"),
                         TrainConfig(max_epochs=20, patience=20))
        assert model.params["theta"].tolist() == [1.0, 0.0, 0.0, 0.0]

    def test_lowpass_keeps_t(self):
        ds, split = small_sbm()
        model, _ = train(ds, split, baseline_mode(ModelConfig(K=3, hidden=8), "lowpass"),
                         TrainConfig(max_epochs=10, patience=10))
        assert model.config.t == 1e-6


class TestBaselines:
    def test_unknown_flag(self):
        with pytest.raises(InvalidArgumentError):
            baseline_mode(ModelConfig(), "chebyshev")

    def test_mlp_only_equals_pcnet_without_edges(self, rng):
        G = Graph(8, np.zeros((0, 2)))
        X = rng.standard_normal((8, 4))
        pc = init_model(4, 3, ModelConfig(K=3, dropout=0.0), 1)
        # on an edgeless graph the filter bank collapses to sum(theta); normalize it to the identity
        pc.params["theta"] = pc.params["theta"] / pc.params["theta"].sum()
        mlp = init_model(4, 3, baseline_mode(ModelConfig(K=3, dropout=0.0), "mlp_only"), 1)
        za = forward(pc, pc.operator(G), X)[1]["logits"]
        zb = forward(mlp, mlp.operator(G), X)[1]["logits"]
        np.testing.assert_allclose(za, zb, atol=1e-14)

    def test_lowpass_first_filter(self, rng):
        cfg = baseline_mode(ModelConfig(K=2, N=10, dropout=0.0), "lowpass")
        model = init_model(4, 3, cfg, 0)
        model.params["theta"] = np.array([0.0, 1.0, 0.0])
        L = model.operator(random_graph(rng, 12, 0.3))
        X = rng.standard_normal((12, 4))
        _, cache = forward(model, L, X)
        expected = cache["H"] - L.to_dense() @ cache["H"]
        assert np.abs(cache["logits"] - expected).max() <= 1e-4


class TestPersistence:
    @pytest.mark.parametrize("layers", [1, 2])
    def test_round_trip(self, tmp_path, layers):
        model, L, X, _, _ = instance(8, layers)
        path = save_model(model, tmp_path / "m.pcn")
        assert path.read_bytes()[:4] == b"PCN1"
        back = load_model(path)
        assert back.config == model.config
        for name in model.params:
            assert np.array_equal(back.params[name], model.params[name])
        assert np.array_equal(forward(back, L, X)[0], forward(model, L, X)[0])

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "junk.pcn"
        path.write_bytes(b"NOPE" + bytes(100))
        with pytest.raises(InvalidArgumentError):
            load_model(path)


class TestConfig:
    @pytest.mark.parametrize("kwargs", [dict(t=2.0, K=3), dict(mlp_layers=3), dict(dropout=1.0), dict(mode="x"),
                                        dict(eta=2.0), dict(p=1.0)])
    def test_model_config(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            ModelConfig(**kwargs)

    @pytest.mark.parametrize("kwargs", [dict(lr=0.0), dict(theta_lr=-1.0), dict(patience=2000),
                                        dict(max_epochs=0), dict(weight_decay=-1.0)])
    def test_train_config(self, kwargs):
        with pytest.raises(InvalidArgumentError):
            TrainConfig(**kwargs)


def test_split_bounds_checked():
    ds, _ = small_sbm()
    with pytest.raises(InvalidArgumentError):
        train(ds, Split([0, 1], [2], [500]), ModelConfig(K=2), TrainConfig(max_epochs=2, patience=1))
