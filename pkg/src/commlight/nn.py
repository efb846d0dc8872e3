"""Dense ReLU networks, the Adam update, TD loss, and checkpoint documents.

Networks are plain containers of weight/bias leaves plus per-parameter Adam
moment accumulators and a shared step counter.  Checkpoints are JSON with
floats written at full double precision (python's shortest round-trip repr),
so save -> load is value-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import Tensor, linear, mean, relu, square, stack, sub

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_VERSION = 1


class MissingGradientError(Exception):
    """adam_step was called before gradients were populated."""


class Mlp:
    """Fully-connected net: ReLU on hidden layers, linear output layer.

    ``layer_sizes = [26, 256, 256, 2]`` builds two hidden layers of 256;
    ``[26, 5]`` is a single linear map.  Weights start uniform in
    [-1/sqrt(fan_in), +1/sqrt(fan_in)], biases at zero.
    """

    def __init__(self, layer_sizes: list[int], rng: np.random.Generator | None = None):
        if len(layer_sizes) < 2:
            raise ValueError(f"need at least input and output sizes, got {layer_sizes}")
        self.layer_sizes = list(layer_sizes)
        self.weights: list[Tensor] = []
        self.biases: list[Tensor] = []
        for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
            limit = 1.0 / np.sqrt(fan_in)
            if rng is None:
                w = np.zeros((fan_out, fan_in))
            else:
                w = rng.uniform(-limit, limit, size=(fan_out, fan_in))
            self.weights.append(Tensor(w, requires_grad=True))
            self.biases.append(Tensor(np.zeros(fan_out), requires_grad=True))
        self.adam_m_w = [np.zeros_like(w.data) for w in self.weights]
        self.adam_v_w = [np.zeros_like(w.data) for w in self.weights]
        self.adam_m_b = [np.zeros_like(b.data) for b in self.biases]
        self.adam_v_b = [np.zeros_like(b.data) for b in self.biases]
        self.t = 0

    @property
    def input_size(self) -> int:
        return self.layer_sizes[0]

    @property
    def output_size(self) -> int:
        return self.layer_sizes[-1]

    def parameters(self) -> list[Tensor]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]

    def forward(self, x, track: bool = False):
        """Run the net. ``track=True`` returns a graph-connected Tensor;
        otherwise a plain ndarray (same arithmetic, no graph)."""
        last = len(self.weights) - 1
        if track:
            h = x if isinstance(x, Tensor) else Tensor(x)
            for i, (w, b) in enumerate(zip(self.weights, self.biases)):
                h = linear(h, w, b)
                if i < last:
                    h = relu(h)
            return h
        h = np.asarray(x, dtype=np.float64)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = h @ w.data.T + b.data
            if i < last:
                np.maximum(h, 0.0, out=h)
        return h

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()


def adam_step(net: Mlp, lr: float) -> None:
    """One Adam update over all parameters; steps the counter, clears grads."""
    for p in net.parameters():
        if p.grad is None:
            raise MissingGradientError(
                "adam_step: gradients missing; run backward() over a loss first"
            )
    net.t += 1
    t = net.t
    bc1 = 1.0 - ADAM_BETA1**t
    bc2 = 1.0 - ADAM_BETA2**t
    for params, ms, vs in (
        (net.weights, net.adam_m_w, net.adam_v_w),
        (net.biases, net.adam_m_b, net.adam_v_b),
    ):
        for p, m, v in zip(params, ms, vs):
            g = p.grad
            m *= ADAM_BETA1
            m += (1.0 - ADAM_BETA1) * g
            v *= ADAM_BETA2
            v += (1.0 - ADAM_BETA2) * (g * g)
            p.data -= lr * (m / bc1) / (np.sqrt(v / bc2) + ADAM_EPS)
            p.grad = None


def td_loss(q_taken, targets) -> Tensor:
    """Mean squared TD error; ``targets`` are plain numbers (no gradient).

    ``q_taken`` is a Tensor or a list of same-shape Tensors (stacked); the
    loss is the mean over every entry.
    """
    if isinstance(q_taken, (list, tuple)):
        if len(q_taken) == 0:
            raise ValueError("td_loss: empty sequence")
        q = stack(list(q_taken))
    else:
        q = q_taken
    if q.data.size == 0:
        raise ValueError("td_loss: empty sequence")
    t = np.asarray(targets, dtype=np.float64)
    if t.shape != q.data.shape:
        raise ValueError(f"td_loss: target shape {t.shape} != q shape {q.data.shape}")
    return mean(square(sub(Tensor(t), q)))


def network_to_doc(net: Mlp) -> dict:
    """Portable checkpoint document for one network."""
    return {
        "version": CHECKPOINT_VERSION,
        "layer_shapes": [list(w.data.shape) for w in net.weights],
        "weights": [w.data.ravel().tolist() for w in net.weights],
        "biases": [b.data.tolist() for b in net.biases],
        "adam_m": {
            "weights": [m.ravel().tolist() for m in net.adam_m_w],
            "biases": [m.tolist() for m in net.adam_m_b],
        },
        "adam_v": {
            "weights": [v.ravel().tolist() for v in net.adam_v_w],
            "biases": [v.tolist() for v in net.adam_v_b],
        },
        "t": net.t,
    }


def network_from_doc(doc: dict) -> Mlp:
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version: {doc.get('version')!r}")
    shapes = [tuple(s) for s in doc["layer_shapes"]]
    sizes = [shapes[0][1]] + [s[0] for s in shapes]
    net = Mlp(sizes)
    for i, shape in enumerate(shapes):
        net.weights[i].data[...] = np.array(doc["weights"][i]).reshape(shape)
        net.biases[i].data[...] = np.array(doc["biases"][i])
        net.adam_m_w[i][...] = np.array(doc["adam_m"]["weights"][i]).reshape(shape)
        net.adam_m_b[i][...] = np.array(doc["adam_m"]["biases"][i])
        net.adam_v_w[i][...] = np.array(doc["adam_v"]["weights"][i]).reshape(shape)
        net.adam_v_b[i][...] = np.array(doc["adam_v"]["biases"][i])
    net.t = int(doc["t"])
    return net


def save_network(net: Mlp, path) -> None:
    with open(path, "w") as f:
        json.dump(network_to_doc(net), f)


def load_network(path) -> Mlp:
    with open(path) as f:
        return network_from_doc(json.load(f))
