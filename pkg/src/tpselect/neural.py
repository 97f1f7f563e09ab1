"""One-hidden-layer sigmoid network trained by full-batch backpropagation
with classic momentum.

Loss is a class-weighted cross-entropy sum (positives weighted by
pos_class_weight), which biases training toward recall on the positive
class. Inputs are standardized with statistics frozen from the training
set; zero-variance inputs get std 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ModelFormatError(Exception):
    pass


@dataclass
class NetConfig:
    num_inputs: int
    num_hidden: int
    learning_rate: float = 0.01
    max_iterations: int = 1000
    momentum: float = 0.0
    pos_class_weight: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if self.num_inputs < 1 or self.num_hidden < 1:
            raise ValueError("layer sizes must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 <= self.momentum <= 1.0:
            raise ValueError("momentum must lie in [0, 1]")
        if self.pos_class_weight < 1.0:
            raise ValueError("pos_class_weight must be at least 1")


@dataclass
class NeuralNet:
    w1: np.ndarray  # hidden x inputs
    b1: np.ndarray  # hidden
    w2: np.ndarray  # hidden
    b2: float
    input_mean: np.ndarray
    input_std: np.ndarray

    @property
    def num_inputs(self):
        return self.w1.shape[1]

    @property
    def num_hidden(self):
        return self.w1.shape[0]


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _standardize(net, x):
    return (x - net.input_mean) / net.input_std


def forward(net, features):
    """Network output in (0, 1) for one feature vector."""
    x = np.asarray(features, dtype=float)
    if x.shape != (net.num_inputs,):
        raise ValueError(f"expected {net.num_inputs} features, got {x.shape}")
    h = _sigmoid(net.w1 @ _standardize(net, x) + net.b1)
    return float(_sigmoid(net.w2 @ h + net.b2))


def _forward_batch(net, x):
    h = _sigmoid(_standardize(net, x) @ net.w1.T + net.b1)
    z = h @ net.w2 + net.b2
    return h, z


def _loss_and_grads(net, x, y, weights):
    h, z = _forward_batch(net, x)
    p = _sigmoid(z)
    # stable weighted cross-entropy sum: softplus(z) - y*z per sample
    loss = float(np.sum(weights * (np.logaddexp(0.0, z) - y * z)))
    dz2 = weights * (p - y)
    gw2 = dz2 @ h
    gb2 = float(dz2.sum())
    dh = np.outer(dz2, net.w2)
    dz1 = dh * h * (1.0 - h)
    gw1 = dz1.T @ _standardize(net, x)
    gb1 = dz1.sum(axis=0)
    return loss, (gw1, gb1, gw2, gb2)


def _init_net(config, x):
    rng = np.random.default_rng(config.seed)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0] = 1.0
    return NeuralNet(
        w1=rng.uniform(-0.5, 0.5, size=(config.num_hidden, config.num_inputs)),
        b1=rng.uniform(-0.5, 0.5, size=config.num_hidden),
        w2=rng.uniform(-0.5, 0.5, size=config.num_hidden),
        b2=float(rng.uniform(-0.5, 0.5)),
        input_mean=mean,
        input_std=std,
    )


def train(config, samples):
    """Train on (features, label) pairs; returns (net, per-iteration loss log).

    Full-batch gradient descent with momentum; stops at max_iterations or
    when an iteration improves the loss by less than 1e-9. Deterministic
    under (seed, sample order).
    """
    x = np.asarray([s[0] for s in samples], dtype=float)
    y = np.asarray([s[1] for s in samples], dtype=float)
    if x.ndim != 2 or x.shape[1] != config.num_inputs:
        raise ValueError("sample feature width does not match num_inputs")
    if not (y == 1).any():
        raise ValueError("training set has no positive (label-1) samples")
    if not (y == 0).any():
        raise ValueError("training set has no negative (label-0) samples")

    weights = np.where(y == 1, config.pos_class_weight, 1.0)
    net = _init_net(config, x)
    velocity = [np.zeros_like(net.w1), np.zeros_like(net.b1), np.zeros_like(net.w2), 0.0]

    log = []
    prev_loss = None
    for _ in range(config.max_iterations):
        loss, grads = _loss_and_grads(net, x, y, weights)
        log.append(loss)
        if prev_loss is not None and 0.0 <= prev_loss - loss < 1e-9:
            break
        prev_loss = loss
        velocity = [config.momentum * v - config.learning_rate * g
                    for v, g in zip(velocity, grads)]
        net.w1 = net.w1 + velocity[0]
        net.b1 = net.b1 + velocity[1]
        net.w2 = net.w2 + velocity[2]
        net.b2 = net.b2 + velocity[3]
    return net, log


def gradient_check(net, samples, epsilon=1e-5, pos_class_weight=1.0):
    """Max relative error between analytic and central-difference gradients."""
    if not 0 < epsilon <= 1e-2:
        raise ValueError("epsilon must lie in (0, 1e-2]")
    x = np.asarray([s[0] for s in samples], dtype=float)
    y = np.asarray([s[1] for s in samples], dtype=float)
    weights = np.where(y == 1, pos_class_weight, 1.0)

    _, grads = _loss_and_grads(net, x, y, weights)
    analytic = np.concatenate([np.asarray(grads[0]).ravel(), grads[1],
                               grads[2], [grads[3]]])

    def loss_with(flat):
        k = net.num_hidden * net.num_inputs
        probe = NeuralNet(
            w1=flat[:k].reshape(net.num_hidden, net.num_inputs),
            b1=flat[k : k + net.num_hidden],
            w2=flat[k + net.num_hidden : k + 2 * net.num_hidden],
            b2=float(flat[-1]),
            input_mean=net.input_mean,
            input_std=net.input_std,
        )
        loss, _ = _loss_and_grads(probe, x, y, weights)
        return loss

    flat = np.concatenate([net.w1.ravel(), net.b1, net.w2, [net.b2]])
    worst = 0.0
    for i in range(flat.size):
        bumped = flat.copy()
        bumped[i] += epsilon
        hi = loss_with(bumped)
        bumped[i] -= 2 * epsilon
        lo = loss_with(bumped)
        numeric = (hi - lo) / (2 * epsilon)
        err = abs(analytic[i] - numeric) / max(1.0, abs(analytic[i]))
        worst = max(worst, err)
    return worst


MODEL_MAGIC = "TPNET"
MODEL_VERSION = 1


def save_net(net, path):
    """Self-describing text format, full decimal precision."""
    def row(vals):
        return " ".join(repr(float(v)) for v in np.atleast_1d(vals))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MODEL_MAGIC} {MODEL_VERSION}\n")
        fh.write(f"inputs {net.num_inputs} hidden {net.num_hidden}\n")
        fh.write("mean " + row(net.input_mean) + "\n")
        fh.write("std " + row(net.input_std) + "\n")
        for i in range(net.num_hidden):
            fh.write("w1 " + row(net.w1[i]) + "\n")
        fh.write("b1 " + row(net.b1) + "\n")
        fh.write("w2 " + row(net.w2) + "\n")
        fh.write("b2 " + repr(float(net.b2)) + "\n")


def load_net(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    try:
        magic, version = lines[0].split()
        if magic != MODEL_MAGIC:
            raise ModelFormatError(f"{path}: not a model file")
        if int(version) != MODEL_VERSION:
            raise ModelFormatError(f"{path}: unsupported model version {version}")
        _, n_in, _, n_hid = lines[1].split()
        n_in, n_hid = int(n_in), int(n_hid)

        def parse(line, tag, expect):
            parts = line.split()
            if parts[0] != tag or len(parts) != expect + 1:
                raise ModelFormatError(f"{path}: malformed {tag} row")
            return np.array([float(v) for v in parts[1:]])

        mean = parse(lines[2], "mean", n_in)
        std = parse(lines[3], "std", n_in)
        w1 = np.vstack([parse(lines[4 + i], "w1", n_in) for i in range(n_hid)])
        b1 = parse(lines[4 + n_hid], "b1", n_hid)
        w2 = parse(lines[5 + n_hid], "w2", n_hid)
        b2 = float(parse(lines[6 + n_hid], "b2", 1)[0])
    except ModelFormatError:
        raise
    except (IndexError, ValueError) as exc:
        raise ModelFormatError(f"{path}: corrupt model file: {exc}") from exc
    return NeuralNet(w1=w1, b1=b1, w2=w2, b2=b2, input_mean=mean, input_std=std)
