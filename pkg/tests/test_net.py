import numpy as np
import pytest

from opcaug.cbow import similarity_table
from opcaug.errors import CacheMismatch, OutOfVocabulary
from opcaug.net import (
    FIELDS,
    ModelParams,
    ModelShape,
    adam_step,
    backward,
    bce_loss,
    count_parameters,
    forward,
    init_adam_state,
    init_params,
    load_checkpoint,
    loss_and_grads,
    save_checkpoint,
    snapshot_embedding,
    zero_params,
)

SMALL = ModelShape(vocab_size=10, emb_dim=3, num_filters=4, filter_len=3)


def finite_difference_grads(params, seq, y, step=1e-5):
    """Independent oracle: central differences of bce(forward(.)) over
    every parameter entry."""
    out = {}
    for name in FIELDS:
        arr = getattr(params, name)
        flat = np.atleast_1d(arr.reshape(-1))
        fd = np.empty(flat.size)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = bce_loss(forward(params, seq)[0], y)
            flat[i] = orig - step
            down = bce_loss(forward(params, seq)[0], y)
            flat[i] = orig
            fd[i] = (up - down) / (2 * step)
        out[name] = fd.reshape(arr.shape)
    return out


def draw_kink_free_instance(seed, margin=1e-3, attempts=50):
    """Random small model and input at a differentiable point.

    Central differences are only a valid oracle away from the ReLU and
    max-pool kinks, so instances where a pooled pre-activation or the
    gap to the runner-up lies within `margin` of a kink are redrawn
    (deterministically, by bumping an attempt counter).
    """
    for attempt in range(attempts):
        rng = np.random.default_rng((seed, attempt))
        shape = ModelShape(
            vocab_size=int(rng.integers(10, 51)),
            emb_dim=int(rng.integers(2, 5)),
            num_filters=int(rng.integers(2, 7)),
            filter_len=int(rng.integers(2, 5)),
        )
        params = init_params(shape, seed=seed * 1000 + attempt)
        length = int(rng.integers(shape.filter_len, 65))
        seq = rng.integers(0, shape.vocab_size, size=length)
        y = int(rng.integers(0, 2))
        _, cache = forward(params, seq)
        act = np.maximum(cache["preact"], 0.0)
        top2 = np.sort(act, axis=1)[:, -2:]
        pooled_ok = (np.abs(cache["pooled"]) > margin).all()
        gap_ok = ((top2[:, 1] - top2[:, 0]) > margin).all()
        if pooled_ok and gap_ok:
            return params, seq, y
    raise AssertionError("could not find a kink-free instance")


def max_relative_error(analytic: ModelParams, numeric: dict) -> float:
    worst = 0.0
    for name in FIELDS:
        a = np.atleast_1d(getattr(analytic, name)).reshape(-1)
        n = np.atleast_1d(numeric[name]).reshape(-1)
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
        worst = max(worst, float((np.abs(a - n) / denom).max()))
    return worst


class TestForward:
    def test_zero_network_outputs_half(self):
        params = zero_params(SMALL)
        for seq in ([1, 2, 3], [4] * 10, [9]):
            p, _ = forward(params, seq)
            assert p == 0.5

    def test_hand_computed_single_filter(self):
        """emb[k] = k with one length-1 filter of weight 1 makes the
        network compute sigmoid(max(seq))."""
        shape = ModelShape(vocab_size=5, emb_dim=1, num_filters=1, filter_len=1)
        params = zero_params(shape)
        params.embedding[:, 0] = np.arange(5)
        params.conv_w[0, 0, 0] = 1.0
        params.lin_w[0] = 1.0
        p, cache = forward(params, [2, 3, 1])
        assert cache["pooled"][0] == 3.0
        assert p == pytest.approx(0.95257, abs=5e-6)

    def test_short_sequence_right_padded(self):
        params = init_params(SMALL, seed=0)
        p_short, cache = forward(params, [5])
        np.testing.assert_array_equal(cache["padded"], [5, 0, 0])
        p_padded, _ = forward(params, [5, 0, 0])
        assert p_short == p_padded

    def test_sequence_of_filter_len_has_one_position(self):
        params = init_params(SMALL, seed=1)
        _, cache = forward(params, [1, 2, 3])
        assert cache["preact"].shape == (4, 1)
        np.testing.assert_array_equal(cache["t_star"], np.zeros(4, dtype=np.int64))

    def test_out_of_vocab(self):
        params = zero_params(SMALL)
        with pytest.raises(OutOfVocabulary):
            forward(params, [1, 10])

    def test_probability_strictly_inside_unit_interval(self):
        params = zero_params(SMALL)
        params.lin_b[()] = 1000.0
        p, _ = forward(params, [1, 2, 3])
        assert 0.0 < p < 1.0
        params.lin_b[()] = -1000.0
        p, _ = forward(params, [1, 2, 3])
        assert 0.0 < p < 1.0

    def test_pooling_depends_only_on_column_maxima(self):
        """Permuting conv activations over time cannot change the pooled
        vector, hence not the probability."""
        params = init_params(SMALL, seed=3)
        seq = np.arange(1, 10)
        _, cache = forward(params, seq)
        act = np.maximum(cache["preact"], 0.0)
        rng = np.random.default_rng(0)
        permuted = act[:, rng.permutation(act.shape[1])]
        np.testing.assert_allclose(np.sort(permuted.max(axis=1)), np.sort(cache["pooled"]))


class TestBceLoss:
    def test_half_probability(self):
        assert bce_loss(0.5, 1) == pytest.approx(np.log(2), rel=1e-12)

    def test_confident_correct(self):
        assert bce_loss(1 - 1e-12, 1) == pytest.approx(0.0, abs=1e-11)

    def test_confident_wrong(self):
        assert bce_loss(0.9, 0) == pytest.approx(-np.log(0.1), rel=1e-9)


class TestBackward:
    def test_zero_network_gradients(self):
        """At the all-zero point only the output bias sees gradient;
        ReLU's zero subgradient blocks everything upstream."""
        for y in (0, 1):
            params = zero_params(SMALL)
            p, cache = forward(params, [1, 2, 3, 4])
            grads = backward(params, [1, 2, 3, 4], y, cache)
            assert float(grads.lin_b) == pytest.approx(0.5 - y)
            assert not grads.embedding.any()
            assert not grads.conv_w.any()
            assert not grads.conv_b.any()
            # pooled vector is zero, so lin_w gets zero gradient too
            assert not grads.lin_w.any()

    @pytest.mark.parametrize("seed", range(20))
    def test_matches_finite_differences(self, seed):
        params, seq, y = draw_kink_free_instance(seed)
        _, _, grads = loss_and_grads(params, seq, y)
        numeric = finite_difference_grads(params, seq, y)
        assert max_relative_error(grads, numeric) < 1e-4

    def test_absent_opcode_row_gradient_is_zero(self):
        params = init_params(SMALL, seed=5)
        seq = [1, 2, 3, 1]
        _, _, grads = loss_and_grads(params, seq, 1)
        for row in range(SMALL.vocab_size):
            if row not in {1, 2, 3}:
                assert not grads.embedding[row].any()

    def test_stale_cache_rejected(self):
        params = init_params(SMALL, seed=6)
        p, cache = forward(params, [1, 2, 3])
        fresh = params.copy()
        with pytest.raises(CacheMismatch):
            backward(fresh, [1, 2, 3], 1, cache)
        with pytest.raises(CacheMismatch):
            backward(params, [3, 2, 1], 1, cache)


class TestBatchSemantics:
    def test_batch_loss_is_mean_of_per_sample_losses(self):
        params = init_params(SMALL, seed=7)
        rng = np.random.default_rng(0)
        seqs = [rng.integers(1, 10, size=12) for _ in range(6)]
        ys = [int(rng.integers(0, 2)) for _ in range(6)]
        losses = [loss_and_grads(params, s, y)[0] for s, y in zip(seqs, ys)]
        assert np.mean(losses) == pytest.approx(sum(losses) / 6, rel=1e-15)


class TestAdam:
    def test_first_step_magnitude(self):
        shape = ModelShape(vocab_size=2, emb_dim=1, num_filters=1, filter_len=1)
        params = zero_params(shape)
        grads = zero_params(shape)
        grads.lin_b[()] = 1.0
        state = init_adam_state(shape)
        new_params, new_state = adam_step(params, grads, state, lr=1e-3)
        assert float(new_params.lin_b) == pytest.approx(-1e-3, rel=1e-7)
        assert new_state.step_count == 1

    def test_zero_gradient_leaves_params(self):
        params = init_params(SMALL, seed=8)
        state = init_adam_state(SMALL)
        new_params, _ = adam_step(params, zero_params(SMALL), state, lr=1e-3)
        for name in FIELDS:
            np.testing.assert_array_equal(getattr(new_params, name), getattr(params, name))

    def test_two_steps_match_hand_recurrences(self):
        """Constant gradient: evaluate the moment recurrences and bias
        corrections directly and compare."""
        shape = ModelShape(vocab_size=2, emb_dim=1, num_filters=1, filter_len=1)
        lr, b1, b2, eps, g = 1e-3, 0.9, 0.999, 1e-8, 0.7
        params = zero_params(shape)
        grads = zero_params(shape)
        grads.conv_b[0] = g
        state = init_adam_state(shape)

        theta, m, v = 0.0, 0.0, 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            theta -= lr * (m / (1 - b1 ** t)) / (np.sqrt(v / (1 - b2 ** t)) + eps)
            params, state = adam_step(params, grads, state, lr=lr, beta1=b1, beta2=b2, eps=eps)
            assert float(params.conv_b[0]) == pytest.approx(theta, rel=1e-12)
            assert state.step_count == t


class TestSnapshotAndShape:
    def test_snapshot_is_isolated_copy(self):
        params = init_params(SMALL, seed=9)
        snap = snapshot_embedding(params)
        before = snap.rows.copy()
        params.embedding += 1.0
        np.testing.assert_array_equal(snap.rows, before)
        assert snap.rows.shape == (SMALL.vocab_size, SMALL.emb_dim)

    def test_snapshot_feeds_similarity_table(self):
        params = init_params(SMALL, seed=10)
        table = similarity_table(snapshot_embedding(params), k=3)
        assert set(table.neighbours) == set(range(1, SMALL.vocab_size))

    def test_parameter_count_formula(self):
        shape = ModelShape(vocab_size=219, emb_dim=8, num_filters=64, filter_len=8)
        assert count_parameters(shape) == 219 * 8 + 64 * 8 * 8 + 64 + 64 + 1 == 5977


class TestCheckpoint:
    def test_round_trip_bit_equal(self, tmp_path):
        params = init_params(ModelShape(vocab_size=7, emb_dim=2, num_filters=3, filter_len=2), seed=11)
        path = tmp_path / "model.ckpt"
        save_checkpoint(params, path)
        loaded = load_checkpoint(path)
        for name in FIELDS:
            np.testing.assert_array_equal(getattr(loaded, name), getattr(params, name))

    def test_header_checked(self, tmp_path):
        path = tmp_path / "bad.ckpt"
        path.write_text("something else\n")
        with pytest.raises(Exception):
            load_checkpoint(path)
