import math

import numpy as np
import pytest

from slicegcn.errors import DataError, DivergenceError
from slicegcn.gcn import (
    GcnParams,
    Predictions,
    TrainConfig,
    backward,
    baseline_linear,
    forward,
    init_params,
    load_checkpoint,
    loss,
    predict,
    save_checkpoint,
    train,
)
from slicegcn.graph import TextGraph, normalize_adjacency


def random_graph(n_words, n_slices, dim, seed, density=0.5):
    """Random symmetric adjacency honoring the structural zeros."""
    rng = np.random.default_rng(seed)
    n = n_words + n_slices
    rows, cols, vals = [], [], []
    for i in range(n):
        rows.append(i)
        cols.append(i)
        vals.append(1.0)
    for i in range(n):
        for j in range(i + 1, n):
            if i >= n_words and j >= n_words:
                continue  # slice-slice stays zero
            if rng.random() < density:
                w = float(rng.random()) + 0.1
                rows.extend((i, j))
                cols.extend((j, i))
                vals.extend((w, w))
    g = TextGraph(
        n_words=n_words,
        n_slices=n_slices,
        words=[f"w{i}" for i in range(n_words)],
        slice_ids=list(range(n_slices)),
        rows=np.array(rows, dtype=np.int64),
        cols=np.array(cols, dtype=np.int64),
        vals=np.array(vals),
    )
    normalize_adjacency(g)
    g.features = rng.standard_normal((n, dim))
    return g


def single_node_graph(x):
    g = TextGraph(
        n_words=0, n_slices=1, words=[], slice_ids=[0],
        rows=np.array([0], dtype=np.int64), cols=np.array([0], dtype=np.int64),
        vals=np.array([1.0]),
    )
    normalize_adjacency(g)
    g.features = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return g


class TestForward:
    def test_zero_output_head_gives_uniform(self):
        g = random_graph(2, 4, 3, seed=0)
        p = init_params(3, seed=1, hidden=7)
        p.W_out[:] = 0.0
        p.b_out[:] = 0.0
        preds, _ = forward(g, p)
        assert np.allclose(preds.probs, 0.5, atol=1e-15)

    def test_single_node_reduces_to_mlp(self):
        x = np.array([0.3, -1.2, 2.0, 0.7])
        g = single_node_graph(x)
        p = init_params(4, seed=5, hidden=6)
        preds, _ = forward(g, p)
        h1 = np.maximum(x @ p.W1 + p.b1, 0.0)
        h2 = np.maximum(h1 @ p.W2 + p.b2, 0.0)
        logits = h2 @ p.W_out + p.b_out
        expected = np.exp(logits) / np.exp(logits).sum()
        assert np.allclose(preds.probs[0], expected, atol=1e-12)

    def test_tiny_graph_hand_chain(self):
        # 3 nodes (1 word + 2 slices), dim 2, all-ones weights and zero
        # biases; compare against an explicit dense matrix chain.
        g = TextGraph(
            n_words=1, n_slices=2, words=["w"], slice_ids=[0, 1],
            rows=np.array([0, 0, 1, 1, 2, 2, 0]),
            cols=np.array([0, 1, 0, 1, 2, 0, 2]),
            vals=np.array([1.0, 0.5, 0.5, 1.0, 1.0, 0.25, 0.25]),
        )
        normalize_adjacency(g)
        X = np.array([[1.0, 2.0], [0.5, -1.0], [2.0, 0.0]])
        g.features = X
        hidden = 3
        p = GcnParams(
            W1=np.ones((2, hidden)), b1=np.zeros(hidden),
            W2=np.ones((hidden, hidden)), b2=np.zeros(hidden),
            W_out=np.ones((hidden, 2)), b_out=np.zeros(2),
        )
        preds, cache = forward(g, p)
        A = g.to_dense(normalized=True)
        H1 = np.maximum(A @ X @ p.W1, 0.0)
        H2 = np.maximum(A @ H1 @ p.W2, 0.0)
        logits = H2 @ p.W_out
        assert np.allclose(cache.logits, logits, atol=1e-12)

    def test_probs_sum_to_one(self):
        g = random_graph(3, 5, 4, seed=2)
        p = init_params(4, seed=3, hidden=8)
        for mode, rng in (("eval", None), ("train", 11)):
            preds, _ = forward(g, p, mode=mode, rng=rng)
            assert np.max(np.abs(preds.probs.sum(axis=1) - 1.0)) <= 1e-12

    def test_shape_mismatch(self):
        g = random_graph(2, 2, 3, seed=0)
        p = init_params(5, seed=0, hidden=4)
        with pytest.raises(DataError, match="dim"):
            forward(g, p)

    def test_eval_deterministic_train_stochastic(self):
        g = random_graph(2, 4, 3, seed=4)
        p = init_params(3, seed=0, hidden=6)
        e1, _ = forward(g, p)
        e2, _ = forward(g, p)
        assert np.array_equal(e1.probs, e2.probs)
        t1, _ = forward(g, p, mode="train", rng=1)
        t2, _ = forward(g, p, mode="train", rng=2)
        assert not np.array_equal(t1.probs, t2.probs)
        t3, _ = forward(g, p, mode="train", rng=1)
        assert np.array_equal(t1.probs, t3.probs)


class TestLoss:
    def test_perfect_predictions(self):
        preds = Predictions(
            probs=np.array([[1.0, 0.0], [0.0, 1.0]]),
            log_probs=np.log(np.array([[1.0, 1e-300], [1e-300, 1.0]])),
            labels=np.array([0, 1]),
            positions=np.arange(2),
        )
        assert loss(preds, np.array([0, 1]), np.array([True, True])) == pytest.approx(0.0, abs=1e-12)

    def test_uniform_is_ln2(self):
        probs = np.full((3, 2), 0.5)
        preds = Predictions(
            probs=probs, log_probs=np.log(probs),
            labels=np.zeros(3, dtype=int), positions=np.arange(3),
        )
        val = loss(preds, np.array([0, 1, 0]), np.ones(3, dtype=bool))
        assert val == pytest.approx(math.log(2), abs=1e-15)

    def test_hand_value(self):
        probs = np.array([[0.9, 0.1], [0.2, 0.8]])
        preds = Predictions(
            probs=probs, log_probs=np.log(probs),
            labels=probs.argmax(axis=1), positions=np.arange(2),
        )
        val = loss(preds, np.array([0, 1]), np.ones(2, dtype=bool))
        assert val == pytest.approx(-(math.log(0.9) + math.log(0.8)) / 2, abs=1e-15)
        assert val == pytest.approx(0.16425203348635055, abs=1e-12)

    def test_empty_mask(self):
        probs = np.full((2, 2), 0.5)
        preds = Predictions(
            probs=probs, log_probs=np.log(probs),
            labels=np.zeros(2, dtype=int), positions=np.arange(2),
        )
        with pytest.raises(DataError):
            loss(preds, np.array([0, 1]), np.zeros(2, dtype=bool))


def fd_loss(g, params, labels, mask, dropout_p, rng_seed):
    preds, _ = forward(
        g, params, mode="train" if dropout_p > 0 else "eval",
        rng=rng_seed, dropout_p=dropout_p,
    )
    return loss(preds, labels, mask)


def grad_check(g, labels, mask, hidden, dropout_p, seed, h=1e-5):
    """Exhaustive central finite differences over every parameter entry."""
    params = init_params(g.features.shape[1], seed, hidden=hidden)
    _, cache = forward(
        g, params, mode="train" if dropout_p > 0 else "eval",
        rng=seed, dropout_p=dropout_p,
    )
    grads = backward(cache, labels, mask)
    worst = 0.0
    for name, tensor in params.tensors():
        analytic = getattr(grads, name)
        numeric = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        num_flat = numeric.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + h
            up = fd_loss(g, params, labels, mask, dropout_p, seed)
            flat[k] = orig - h
            down = fd_loss(g, params, labels, mask, dropout_p, seed)
            flat[k] = orig
            num_flat[k] = (up - down) / (2 * h)
        denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-8)
        rel = np.linalg.norm(analytic - numeric) / denom
        worst = max(worst, rel)
    return worst


class TestBackward:
    def test_gradcheck_no_dropout(self):
        g = random_graph(2, 4, 5, seed=0)
        labels = np.array([0, 1, 1, 0])
        mask = np.array([True, True, True, False])
        assert grad_check(g, labels, mask, hidden=5, dropout_p=0.0, seed=0) < 1e-6

    def test_gradcheck_with_dropout_masks_fixed_by_seed(self):
        g = random_graph(2, 4, 4, seed=1)
        labels = np.array([1, 0, 1, 0])
        mask = np.ones(4, dtype=bool)
        assert grad_check(g, labels, mask, hidden=4, dropout_p=0.5, seed=3) < 1e-6

    def test_zero_loss_zero_grads(self):
        g = random_graph(1, 2, 3, seed=2)
        p = init_params(3, seed=0, hidden=4)
        p.W_out[:] = 0.0
        # Push one logit far positive via bias so predictions are confident
        # and correct: gradients collapse toward zero.
        p.b_out[:] = [40.0, -40.0]
        labels = np.zeros(2, dtype=int)
        preds, cache = forward(g, p)
        assert loss(preds, labels, np.ones(2, dtype=bool)) < 1e-12
        grads = backward(cache, labels, np.ones(2, dtype=bool))
        for _, t in grads.tensors():
            assert np.max(np.abs(t)) < 1e-12

    def test_stale_cache_rejected(self):
        g = random_graph(2, 4, 4, seed=8)
        labels = np.array([0, 1, 0, 1])
        params = init_params(4, seed=0, hidden=5)
        _, cache = forward(g, params)
        from slicegcn.graph import normalize_adjacency

        normalize_adjacency(g)  # replaces hat_vals after the forward pass
        with pytest.raises(DataError, match="stale cache"):
            backward(cache, labels, np.ones(4, dtype=bool))

    def test_mean_invariance_under_duplicated_mask_weight(self):
        # Doubling every node's contribution leaves the mean-loss gradient
        # unchanged; with a boolean mask this reduces to: gradients depend
        # only on which nodes are masked, not how many times we'd count them.
        g = random_graph(2, 4, 4, seed=5)
        labels = np.array([0, 1, 0, 1])
        mask = np.ones(4, dtype=bool)
        _, cache = forward(g, init_params(4, seed=1, hidden=5))
        g1 = backward(cache, labels, mask)
        g2 = backward(cache, labels, mask)
        for (_, a), (_, b) in zip(g1.tensors(), g2.tensors()):
            assert np.array_equal(a, b)


class TestTrain:
    def planted(self, seed=0):
        g = random_graph(3, 8, 6, seed=seed)
        rng = np.random.default_rng(seed)
        labels = rng.integers(0, 2, size=8)
        mask = np.ones(8, dtype=bool)
        mask[6:] = False
        return g, labels, mask

    def test_lr_zero_equivalent_no_update(self):
        # learning_rate must be > 0 by contract; the null-update check uses
        # an epsilon rate so Adam's step size is the limiting factor.
        g, labels, mask = self.planted()
        cfg = TrainConfig(learning_rate=1e-300, epochs=3, seed=0, dropout_p=0.0)
        params, _ = train(g, cfg, labels, mask)
        fresh = init_params(6, 0, hidden=cfg.hidden)
        for (_, a), (_, b) in zip(params.tensors(), fresh.tensors()):
            assert np.max(np.abs(a - b)) < 1e-290

    def test_lr_must_be_positive(self):
        with pytest.raises(DataError):
            TrainConfig(learning_rate=0.0)

    def test_same_seed_bit_identical(self):
        g, labels, mask = self.planted(3)
        cfg = TrainConfig(epochs=5, seed=9)
        p1, h1 = train(g, cfg, labels, mask)
        p2, h2 = train(g, cfg, labels, mask)
        assert h1 == h2
        for (_, a), (_, b) in zip(p1.tensors(), p2.tensors()):
            assert np.array_equal(a, b)

    def test_loss_history_finite(self):
        g, labels, mask = self.planted(1)
        _, hist = train(g, TrainConfig(epochs=10, seed=0), labels, mask)
        assert len(hist) == 10
        assert all(np.isfinite(h) for h in hist)

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_guard(self):
        # Adam's normalized steps keep finite inputs finite, so force the
        # non-finite path directly: an inf feature makes the first loss nan.
        g, labels, mask = self.planted(2)
        g.features[0, 0] = np.inf
        cfg = TrainConfig(epochs=5, seed=0)
        with pytest.raises(DivergenceError, match="non-finite"):
            train(g, cfg, labels, mask)


class TestPermutationEquivariance:
    def test_permuting_nodes_permutes_predictions(self):
        g = random_graph(3, 5, 4, seed=7)
        p = init_params(4, seed=1, hidden=6)
        base, _ = forward(g, p)
        perm = np.random.default_rng(0).permutation(g.n_nodes)
        inv = np.argsort(perm)
        # Permute the COO triples and features; word/slice partition must be
        # preserved for predictions to stay comparable, so permute within
        # slices only.
        slice_perm = 3 + np.random.default_rng(1).permutation(5)
        full = np.concatenate([np.arange(3), slice_perm])
        inv = np.argsort(full)
        g2 = TextGraph(
            n_words=3, n_slices=5, words=g.words,
            slice_ids=[g.slice_ids[i - 3] for i in slice_perm],
            rows=inv[g.rows], cols=inv[g.cols], vals=g.vals.copy(),
        )
        normalize_adjacency(g2)
        g2.features = g.features[full]
        permuted, _ = forward(g2, p)
        expected = base.probs[slice_perm - 3]
        assert np.allclose(permuted.probs, expected, atol=1e-12)


class TestPredict:
    def test_uniform_params(self):
        g = random_graph(2, 4, 3, seed=0)
        p = init_params(3, seed=0, hidden=5)
        p.W_out[:] = 0
        p.b_out[:] = 0
        preds = predict(g, p, np.array([True, False, True, False]))
        assert preds.probs.shape == (2, 2)
        assert np.allclose(preds.probs, 0.5)
        assert list(preds.positions) == [0, 2]

    def test_empty_mask_empty_predictions(self):
        g = random_graph(2, 3, 3, seed=1)
        p = init_params(3, seed=0, hidden=4)
        preds = predict(g, p, np.zeros(3, dtype=bool))
        assert preds.probs.shape == (0, 2)


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path):
        params = init_params(5, seed=4, hidden=6)
        cfg = TrainConfig(epochs=3, seed=4, learning_rate=0.01, dropout_p=0.25)
        hist = [0.7, 0.5, 0.3]
        path = str(tmp_path / "ckpt.txt")
        save_checkpoint(path, params, cfg, hist)
        p2, cfg2, hist2 = load_checkpoint(path)
        for (_, a), (_, b) in zip(params.tensors(), p2.tensors()):
            assert np.array_equal(a, b)  # 17 sig digits round-trips float64
        assert cfg2.learning_rate == cfg.learning_rate
        assert cfg2.seed == cfg.seed
        assert hist2 == hist

    def test_rejects_garbage(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("not a checkpoint\n")
        with pytest.raises(DataError):
            load_checkpoint(str(p))


class TestBaseline:
    def test_separable_two_points(self):
        X = np.array([[1.0, 0.0], [-1.0, 0.0]] * 4)
        labels = np.array([1, 0] * 4)
        mask = np.ones(8, dtype=bool)
        report, pred = baseline_linear(
            X, labels, mask, mask, TrainConfig(epochs=300, seed=0)
        )
        assert report.f1 == 1.0

    def test_all_same_label_warns(self):
        X = np.random.default_rng(0).standard_normal((6, 3))
        labels = np.ones(6, dtype=int)
        mask = np.ones(6, dtype=bool)
        with pytest.warns(UserWarning, match="one class"):
            baseline_linear(X, labels, mask, mask, TrainConfig(epochs=5, seed=0))
