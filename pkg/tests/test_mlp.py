"""Network evaluation, gradients, Adam, Lipschitz machinery, checkpoints."""

import numpy as np
import pytest

from deep_euler import mlp
from deep_euler.errors import (
    EmptyBatch,
    InvalidArchitecture,
    InvalidInput,
    ModelFormatError,
    NonFiniteGradient,
)
from deep_euler.mlp import (
    AdamState,
    MlpParams,
    TrainConfig,
    adam_step,
    clip_weights,
    forward,
    forward_batch,
    init,
    lipschitz_bound,
    load_model,
    loss_and_grad,
    save_model,
    train,
)


def single_layer(weight_rows, bias):
    w = np.asarray(weight_rows, dtype=float)
    return MlpParams((w.shape[1], w.shape[0]), (w,), (np.asarray(bias, dtype=float),))


def finite_difference_grads(params, inputs, targets, eps=1e-5):
    """Central differences of the loss in every parameter entry."""
    fd_w = [np.zeros_like(w) for w in params.weights]
    fd_b = [np.zeros_like(b) for b in params.biases]

    def loss_at(weights, biases):
        p = MlpParams(params.layer_widths, tuple(weights), tuple(biases))
        return loss_and_grad(p, inputs, targets)[0]

    for k, w in enumerate(params.weights):
        for idx in np.ndindex(w.shape):
            for sign, store in ((1.0, "hi"), (-1.0, "lo")):
                ws = [a.copy() for a in params.weights]
                ws[k][idx] += sign * eps
                val = loss_at(ws, params.biases)
                if store == "hi":
                    hi = val
                else:
                    lo = val
            fd_w[k][idx] = (hi - lo) / (2 * eps)
    for k, b in enumerate(params.biases):
        for idx in np.ndindex(b.shape):
            for sign, store in ((1.0, "hi"), (-1.0, "lo")):
                bs = [a.copy() for a in params.biases]
                bs[k][idx] += sign * eps
                val = loss_at(params.weights, bs)
                if store == "hi":
                    hi = val
                else:
                    lo = val
            fd_b[k][idx] = (hi - lo) / (2 * eps)
    return fd_w, fd_b


def min_preactivation_margin(params, inputs):
    """Smallest |pre-activation| over the hidden layers for a batch."""
    a = np.atleast_2d(inputs)
    margin = np.inf
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = a @ w.T + b
        margin = min(margin, float(np.min(np.abs(z))))
        a = np.maximum(z, 0.0)
    return margin


def sample_away_from_kinks(params, batch, rng, margin=1e-3):
    """Random batch whose ReLU pre-activations and L1 gaps avoid the kinks."""
    for _ in range(200):
        x = rng.normal(size=(batch, params.layer_widths[0]))
        y = rng.normal(size=(batch, params.layer_widths[-1]))
        gap = np.min(np.abs(forward_batch(params, x) - y))
        if min_preactivation_margin(params, x) > margin and gap > margin:
            return x, y
    raise AssertionError("could not find a kink-free batch")


class TestInit:
    def test_shape_contract(self):
        params = init([3, 1], seed=9)
        assert params.weights[0].shape == (1, 3)
        assert np.array_equal(params.biases[0], [0.0])

    def test_same_seed_is_bitwise_identical(self):
        a, b = init([4, 7, 2], seed=5), init([4, 7, 2], seed=5)
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_different_seed_differs(self):
        a, b = init([4, 7, 2], seed=5), init([4, 7, 2], seed=6)
        assert not np.array_equal(a.weights[0], b.weights[0])

    def test_benchmark_architecture_parameter_count(self):
        params = init([3] + [80] * 8 + [1], seed=0)
        expected = 3 * 80 + 80 + 7 * (80 * 80 + 80) + 80 * 1 + 1
        assert params.parameter_count() == expected

    def test_weight_entries_respect_fan_in_bound(self):
        params = init([5, 11, 2], seed=1)
        for w, fan_in in zip(params.weights, (5, 11)):
            assert np.max(np.abs(w)) <= np.sqrt(6.0 / fan_in)

    @pytest.mark.parametrize("widths", [[3], [3, 0, 1], [0, 4], [3, -2, 1]])
    def test_invalid_widths(self, widths):
        with pytest.raises(InvalidArchitecture):
            init(widths, seed=0)


class TestForward:
    def test_zero_network_returns_final_bias(self, rng):
        params = MlpParams(
            (3, 4, 2),
            (np.zeros((4, 3)), np.zeros((2, 4))),
            (np.zeros(4), np.array([1.5, -2.0])),
        )
        for _ in range(5):
            assert np.array_equal(forward(params, rng.normal(size=3)), [1.5, -2.0])

    def test_single_layer_affine(self):
        params = single_layer([[1.0, 2.0, 3.0]], [1.0])
        assert np.array_equal(forward(params, [1.0, 1.0, 1.0]), [7.0])

    def test_relu_kills_negative_path(self):
        params = MlpParams(
            (1, 1, 1),
            (np.array([[-1.0]]), np.array([[1.0]])),
            (np.zeros(1), np.zeros(1)),
        )
        assert np.array_equal(forward(params, [5.0]), [0.0])

    def test_non_finite_input_rejected(self):
        params = init([2, 3, 1], seed=0)
        with pytest.raises(InvalidInput):
            forward(params, [np.nan, 1.0])

    def test_batch_matches_single(self, rng):
        params = init([4, 6, 3], seed=2)
        xs = rng.normal(size=(8, 4))
        batched = forward_batch(params, xs)
        for row, x in zip(batched, xs):
            assert np.allclose(row, forward(params, x), atol=1e-14)


class TestLossAndGrad:
    def test_loss_zero_at_exact_fit(self, rng):
        params = init([3, 5, 2], seed=4)
        x = rng.normal(size=(6, 3))
        y = forward_batch(params, x)
        loss, grads = loss_and_grad(params, x, y)
        assert loss == 0.0
        for g in (*grads.weights, *grads.biases):
            assert np.array_equal(g, np.zeros_like(g))

    def test_zero_network_single_sample(self):
        params = single_layer([[0.0]], [0.0])
        loss, grads = loss_and_grad(params, [[1.0]], [[2.0]])
        assert loss == 2.0
        assert grads.biases[0][0] == -1.0

    def test_empty_batch(self):
        params = init([2, 1], seed=0)
        with pytest.raises(EmptyBatch):
            loss_and_grad(params, np.empty((0, 2)), np.empty((0, 1)))

    def test_matches_central_differences(self, rng):
        params = init([3, 5, 2], seed=7)
        x, y = sample_away_from_kinks(params, batch=4, rng=rng)
        _, grads = loss_and_grad(params, x, y)
        fd_w, fd_b = finite_difference_grads(params, x, y)
        for got, want in zip((*grads.weights, *grads.biases), (*fd_w, *fd_b)):
            assert np.allclose(got, want, rtol=1e-4, atol=1e-7)


class TestAdam:
    def test_zero_gradient_keeps_params_and_moments(self):
        params = init([2, 3, 1], seed=0)
        grads = mlp.Gradients(
            tuple(np.zeros_like(w) for w in params.weights),
            tuple(np.zeros_like(b) for b in params.biases),
        )
        new_params, new_state = adam_step(params, grads, AdamState.initial(params), 0.01)
        for a, b in zip(new_params.weights, params.weights):
            assert np.array_equal(a, b)
        for m in (*new_state.first_weights, *new_state.second_weights):
            assert np.array_equal(m, np.zeros_like(m))
        assert new_state.step_count == 1

    def test_first_step_moves_by_learning_rate(self):
        # Bias correction makes the very first update lr * sign(grad).
        params = single_layer([[0.0]], [0.0])
        grads = mlp.Gradients((np.array([[1.0]]),), (np.zeros(1),))
        new_params, _ = adam_step(params, grads, AdamState.initial(params), 0.1)
        assert new_params.weights[0][0, 0] == pytest.approx(-0.1, abs=1e-8)

    def test_deterministic_sequences(self, rng):
        params = init([3, 4, 2], seed=1)
        grad_seq = []
        for _ in range(5):
            grad_seq.append(
                mlp.Gradients(
                    tuple(rng.normal(size=w.shape) for w in params.weights),
                    tuple(rng.normal(size=b.shape) for b in params.biases),
                )
            )

        def run():
            p, s = params, AdamState.initial(params)
            for g in grad_seq:
                p, s = adam_step(p, g, s, 0.01)
            return p

        a, b = run(), run()
        for wa, wb in zip(a.weights, b.weights):
            assert np.array_equal(wa, wb)

    def test_non_finite_gradient_rejected(self):
        params = single_layer([[0.0]], [0.0])
        grads = mlp.Gradients((np.array([[np.inf]]),), (np.zeros(1),))
        with pytest.raises(NonFiniteGradient):
            adam_step(params, grads, AdamState.initial(params), 0.1)


class TestLipschitz:
    def test_single_layer_row_sum(self):
        assert lipschitz_bound(single_layer([[2.0]], [0.0])) == 2.0

    def test_two_layer_power(self):
        params = MlpParams(
            (2, 1, 1),
            (np.array([[1.0, -1.0]]), np.array([[3.0]])),
            (np.zeros(1), np.zeros(1)),
        )
        assert lipschitz_bound(params) == 9.0

    def test_empirical_ratio_never_exceeds_bound(self, rng):
        params = init([4, 10, 10, 3], seed=11)
        bound = lipschitz_bound(params)
        u = rng.normal(scale=4.0, size=(1000, 4))
        v = rng.normal(scale=4.0, size=(1000, 4))
        num = np.max(np.abs(forward_batch(params, u) - forward_batch(params, v)), axis=1)
        den = np.max(np.abs(u - v), axis=1)
        assert np.all(num <= bound * den)


class TestClipWeights:
    def test_identity_when_under_bound(self):
        params = single_layer([[0.5, 0.25]], [1.0])
        clipped = clip_weights(params, 1.0)
        assert np.array_equal(clipped.weights[0], params.weights[0])

    def test_scales_oversized_row(self):
        clipped = clip_weights(single_layer([[4.0]], [0.0]), 2.0)
        assert np.array_equal(clipped.weights[0], [[2.0]])

    def test_bound_after_clipping(self):
        params = init([3, 8, 8, 2], seed=3)
        clipped = clip_weights(params, 1.2)
        assert lipschitz_bound(clipped) <= 1.2**3 * (1 + 1e-12)

    def test_biases_untouched(self):
        params = MlpParams((1, 1), (np.array([[5.0]]),), (np.array([2.0]),))
        assert np.array_equal(clip_weights(params, 1.0).biases[0], [2.0])


class TestCheckpointFormat:
    def test_round_trip_is_bitwise(self):
        params = init([3, 6, 2], seed=8)
        blob = save_model(params)
        restored = load_model(blob)
        assert save_model(restored) == blob
        assert restored.layer_widths == params.layer_widths
        for a, b in zip(restored.weights, params.weights):
            assert np.array_equal(a, b)

    def test_truncated_stream(self):
        blob = save_model(init([3, 4, 1], seed=0))
        with pytest.raises(ModelFormatError):
            load_model(blob[: len(blob) - 8])

    def test_header_payload_mismatch(self):
        blob = save_model(init([3, 4, 1], seed=0))
        with pytest.raises(ModelFormatError):
            load_model(blob + b"\x00" * 8)

    def test_bad_magic(self):
        blob = save_model(init([2, 1], seed=0))
        with pytest.raises(ModelFormatError):
            load_model(b"XXXX" + blob[4:])

    def test_bad_version(self):
        blob = save_model(init([2, 1], seed=0))
        tampered = blob[:4] + (99).to_bytes(4, "little") + blob[8:]
        with pytest.raises(ModelFormatError):
            load_model(tampered)


class TestTraining:
    @staticmethod
    def linear_dataset(seed, n=256):
        rng = np.random.default_rng(seed)
        x = rng.uniform(-1.0, 1.0, size=(n, 3))
        coef = np.array([[0.5, -1.0, 2.0], [1.0, 0.0, -0.5]])
        return x, x @ coef.T

    @pytest.mark.parametrize("seed", range(10))
    def test_loss_decreases_on_linear_target(self, seed):
        x, y = self.linear_dataset(seed)
        cfg = TrainConfig(epochs=5, learning_rate=5e-3, batch_size=32, seed=seed)
        _, losses = train(x, y, [3, 16, 2], cfg)
        assert losses[-1] < losses[0]

    def test_bitwise_deterministic(self):
        x, y = self.linear_dataset(0)
        cfg = TrainConfig(epochs=3, learning_rate=5e-3, batch_size=32, seed=42)
        a, _ = train(x, y, [3, 8, 2], cfg)
        b, _ = train(x, y, [3, 8, 2], cfg)
        assert save_model(a) == save_model(b)

    def test_clip_bound_enforced_during_training(self):
        x, y = self.linear_dataset(1)
        cfg = TrainConfig(epochs=2, learning_rate=5e-3, batch_size=32, seed=0, clip_bound=1.1)
        params, _ = train(x, y, [3, 8, 2], cfg)
        assert lipschitz_bound(params) <= 1.1**2 * (1 + 1e-12)

    def test_config_invariants(self):
        from deep_euler.errors import ConfigError

        with pytest.raises(ConfigError):
            TrainConfig(epochs=0)
        with pytest.raises(ConfigError):
            TrainConfig(epochs=1, learning_rate=1.5)
        with pytest.raises(ConfigError):
            TrainConfig(epochs=1, batch_size=0)
