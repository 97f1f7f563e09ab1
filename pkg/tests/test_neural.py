"""Tests for the one-hidden-layer network: a NumPy-free forward oracle,
gradient checking, an exact gradient-duplication identity for the weighted
loss, training behaviour on separable data, and model persistence.
"""

import math

import numpy as np
import pytest

from tpselect.neural import (
    ModelFormatError,
    NetConfig,
    NeuralNet,
    _loss_and_grads,
    forward,
    gradient_check,
    load_net,
    save_net,
    train,
)


def _sig(v):
    return 1.0 / (1.0 + math.exp(-v))


def _forward_oracle(net, x):
    """Pure-Python forward pass, written independently of the module."""
    xs = [(xi - m) / s for xi, m, s in zip(x, net.input_mean, net.input_std)]
    h = []
    for i in range(net.num_hidden):
        z = net.b1[i]
        for j in range(net.num_inputs):
            z += net.w1[i][j] * xs[j]
        h.append(_sig(z))
    z = net.b2
    for i in range(net.num_hidden):
        z += net.w2[i] * h[i]
    return _sig(z)


def _net(num_inputs=3, num_hidden=4, seed=11):
    rng = np.random.default_rng(seed)
    return NeuralNet(
        w1=rng.normal(size=(num_hidden, num_inputs)),
        b1=rng.normal(size=num_hidden),
        w2=rng.normal(size=num_hidden),
        b2=float(rng.normal()),
        input_mean=rng.normal(size=num_inputs),
        input_std=np.abs(rng.normal(size=num_inputs)) + 0.5,
    )


class TestForward:
    def test_matches_pure_python_oracle(self):
        for seed in range(10):
            net = _net(seed=seed)
            rng = np.random.default_rng(100 + seed)
            x = rng.normal(size=3)
            assert forward(net, x) == pytest.approx(_forward_oracle(net, x), abs=1e-12)

    def test_hand_computed_single_unit(self):
        net = NeuralNet(
            w1=np.array([[2.0]]),
            b1=np.array([-1.0]),
            w2=np.array([3.0]),
            b2=0.5,
            input_mean=np.array([1.0]),
            input_std=np.array([2.0]),
        )
        # x=3 -> standardized 1 -> hidden sigmoid(1) -> out sigmoid(3*sig(1)+0.5)
        expected = _sig(3.0 * _sig(1.0) + 0.5)
        assert forward(net, [3.0]) == pytest.approx(expected, abs=1e-12)

    def test_output_in_open_interval(self):
        net = _net()
        for x in ([0, 0, 0], [50, -50, 50], [-1e3, 1e3, 0]):
            out = forward(net, x)
            assert 0.0 < out < 1.0

    def test_wrong_width_rejected(self):
        with pytest.raises(ValueError):
            forward(_net(num_inputs=3), [1.0, 2.0])


class TestLossGradients:
    def test_gradient_check_small_error(self):
        rng = np.random.default_rng(5)
        net = _net(num_inputs=4, num_hidden=6, seed=5)
        samples = [(rng.normal(size=4), float(i % 2)) for i in range(12)]
        assert gradient_check(net, samples) < 1e-6

    def test_gradient_check_weighted(self):
        rng = np.random.default_rng(6)
        net = _net(num_inputs=2, num_hidden=3, seed=6)
        samples = [(rng.normal(size=2), float(i % 2)) for i in range(8)]
        assert gradient_check(net, samples, pos_class_weight=2.0) < 1e-6

    def test_weighting_equals_sample_duplication(self):
        # Weighted sum-loss with integer positive weight k must equal the
        # unweighted loss over a set where each positive appears k times,
        # both in value and in every gradient component.
        net = _net(num_inputs=2, num_hidden=3, seed=9)
        rng = np.random.default_rng(9)
        pos = rng.normal(size=(3, 2))
        neg = rng.normal(size=(4, 2))
        x_w = np.vstack([pos, neg])
        y_w = np.array([1.0] * 3 + [0.0] * 4)
        w = np.where(y_w == 1, 2.0, 1.0)

        x_dup = np.vstack([pos, pos, neg])
        y_dup = np.array([1.0] * 6 + [0.0] * 4)

        loss_w, grads_w = _loss_and_grads(net, x_w, y_w, w)
        loss_d, grads_d = _loss_and_grads(net, x_dup, y_dup, np.ones(10))
        assert loss_w == pytest.approx(loss_d, abs=1e-9)
        for gw, gd in zip(grads_w, grads_d):
            assert np.allclose(gw, gd, atol=1e-9)

    def test_epsilon_validated(self):
        net = _net()
        with pytest.raises(ValueError):
            gradient_check(net, [([1.0, 2.0, 3.0], 1.0)], epsilon=0.5)


def _separable(n_per_class=20, seed=3):
    rng = np.random.default_rng(seed)
    pos = rng.normal(loc=2.0, scale=0.3, size=(n_per_class, 2))
    neg = rng.normal(loc=-2.0, scale=0.3, size=(n_per_class, 2))
    return [(p, 1.0) for p in pos] + [(n, 0.0) for n in neg]


class TestTrain:
    def test_perfect_accuracy_on_separable_data(self):
        samples = _separable()
        config = NetConfig(num_inputs=2, num_hidden=4, learning_rate=0.01,
                           max_iterations=1000, momentum=0.5, seed=1)
        net, log = train(config, samples)
        correct = sum((forward(net, x) >= 0.5) == (y == 1.0) for x, y in samples)
        assert correct == len(samples)
        assert log[-1] < log[0]

    def test_single_step_matches_finite_difference_direction(self):
        # With momentum 0 and one iteration, the parameter update must be
        # exactly -lr * gradient at the initial point.
        samples = _separable(n_per_class=5, seed=4)
        config = NetConfig(num_inputs=2, num_hidden=3, learning_rate=0.05,
                           max_iterations=1, momentum=0.0, seed=4)
        net, _ = train(config, samples)

        config2 = NetConfig(num_inputs=2, num_hidden=3, learning_rate=0.05,
                            max_iterations=1000, momentum=0.0, seed=4)
        from tpselect.neural import _init_net

        x = np.asarray([s[0] for s in samples])
        y = np.asarray([s[1] for s in samples])
        init = _init_net(config2, x)
        w = np.where(y == 1, config2.pos_class_weight, 1.0)
        _, (gw1, gb1, gw2, gb2) = _loss_and_grads(init, x, y, w)
        assert np.allclose(net.w1, init.w1 - 0.05 * gw1, atol=1e-12)
        assert np.allclose(net.b1, init.b1 - 0.05 * gb1, atol=1e-12)
        assert np.allclose(net.w2, init.w2 - 0.05 * gw2, atol=1e-12)
        assert net.b2 == pytest.approx(init.b2 - 0.05 * gb2, abs=1e-12)

    def test_momentum_accumulates_velocity(self):
        # Two momentum-0.9 steps: theta2 = theta1 + (0.9*v1 - lr*g1).
        samples = _separable(n_per_class=5, seed=8)
        c1 = NetConfig(num_inputs=2, num_hidden=3, learning_rate=0.01,
                       max_iterations=1, momentum=0.9, seed=8)
        c2 = NetConfig(num_inputs=2, num_hidden=3, learning_rate=0.01,
                       max_iterations=2, momentum=0.9, seed=8)
        net1, _ = train(c1, samples)
        net2, _ = train(c2, samples)
        from tpselect.neural import _init_net

        x = np.asarray([s[0] for s in samples])
        y = np.asarray([s[1] for s in samples])
        init = _init_net(c1, x)
        w = np.where(y == 1, c1.pos_class_weight, 1.0)
        _, (g0, *_rest0) = _loss_and_grads(init, x, y, w)
        v1_w1 = -0.01 * g0
        _, (g1, *_rest1) = _loss_and_grads(net1, x, y, w)
        v2_w1 = 0.9 * v1_w1 - 0.01 * g1
        assert np.allclose(net2.w1, net1.w1 + v2_w1, atol=1e-12)

    def test_deterministic(self):
        samples = _separable(seed=7)
        config = NetConfig(num_inputs=2, num_hidden=4, seed=7)
        net_a, log_a = train(config, samples)
        net_b, log_b = train(config, samples)
        assert log_a == log_b
        assert np.array_equal(net_a.w1, net_b.w1)
        assert net_a.b2 == net_b.b2

    def test_standardizer_frozen_from_training_set(self):
        samples = _separable(seed=2)
        x = np.asarray([s[0] for s in samples])
        config = NetConfig(num_inputs=2, num_hidden=3, max_iterations=5, seed=2)
        net, _ = train(config, samples)
        assert np.allclose(net.input_mean, x.mean(axis=0))
        assert np.allclose(net.input_std, x.std(axis=0))

    def test_zero_variance_input_gets_unit_std(self):
        samples = [([1.0, v], lab) for v, lab in
                   [(-1, 0.0), (-2, 0.0), (1, 1.0), (2, 1.0)]]
        config = NetConfig(num_inputs=2, num_hidden=2, max_iterations=5, seed=0)
        net, _ = train(config, samples)
        assert net.input_std[0] == 1.0

    def test_single_class_rejected(self):
        config = NetConfig(num_inputs=1, num_hidden=1)
        with pytest.raises(ValueError):
            train(config, [([1.0], 1.0), ([2.0], 1.0)])

    def test_momentum_range_validated(self):
        with pytest.raises(ValueError):
            NetConfig(num_inputs=1, num_hidden=1, momentum=1.5)
        with pytest.raises(ValueError):
            NetConfig(num_inputs=1, num_hidden=1, momentum=-0.1)
        NetConfig(num_inputs=1, num_hidden=1, momentum=1.0)  # boundary allowed


class TestPersistence:
    def test_round_trip_preserves_outputs(self, tmp_path):
        net = _net(num_inputs=3, num_hidden=5, seed=13)
        path = tmp_path / "model.net"
        save_net(net, path)
        loaded = load_net(path)
        rng = np.random.default_rng(13)
        for _ in range(20):
            x = rng.normal(size=3)
            assert forward(loaded, x) == forward(net, x)

    def test_round_trip_exact_parameters(self, tmp_path):
        net = _net(seed=21)
        path = tmp_path / "model.net"
        save_net(net, path)
        loaded = load_net(path)
        assert np.array_equal(loaded.w1, net.w1)
        assert np.array_equal(loaded.b1, net.b1)
        assert np.array_equal(loaded.w2, net.w2)
        assert loaded.b2 == net.b2
        assert np.array_equal(loaded.input_mean, net.input_mean)
        assert np.array_equal(loaded.input_std, net.input_std)

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.net"
        path.write_text("NOPE 1\ninputs 1 hidden 1\n")
        with pytest.raises(ModelFormatError):
            load_net(path)

    def test_truncated_file_rejected(self, tmp_path):
        net = _net(seed=3)
        path = tmp_path / "model.net"
        save_net(net, path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:3]) + "\n")
        with pytest.raises(ModelFormatError):
            load_net(path)
