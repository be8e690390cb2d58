"""Dense ReLU network with a softmax head, trained by mini-batch Adam."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np


@dataclass(frozen=True)
class MlpHyper:
    hidden_layers: tuple = (64, 32)
    learning_rate: float = 1e-3
    epochs: int = 200
    batch_size: int = 16
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "hidden_layers", tuple(int(h) for h in self.hidden_layers))
        if any(h < 1 for h in self.hidden_layers):
            raise ValueError("hidden layer sizes must be >= 1")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")

    def to_dict(self):
        d = asdict(self)
        d["hidden_layers"] = list(self.hidden_layers)
        return d


@dataclass
class Network:
    weights: list = field(default_factory=list)   # layer-major, W[l] has shape (fan_in, fan_out)
    biases: list = field(default_factory=list)

    def copy(self) -> "Network":
        return Network([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def params(self) -> list[np.ndarray]:
        return [p for pair in zip(self.weights, self.biases) for p in pair]


def init_network(sizes, rng: np.random.Generator) -> Network:
    """He initialisation: N(0, 2/fan_in) weights, zero biases."""
    net = Network()
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        net.weights.append(rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in))
        net.biases.append(np.zeros(fan_out))
    return net


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def forward(net: Network, X: np.ndarray):
    acts = [np.asarray(X, dtype=float)]
    pre = []
    for i, (W, b) in enumerate(zip(net.weights, net.biases)):
        z = acts[-1] @ W + b
        pre.append(z)
        acts.append(z if i == len(net.weights) - 1 else np.maximum(z, 0.0))
    return pre, acts


def predict_proba(net: Network, X: np.ndarray) -> np.ndarray:
    _, acts = forward(net, np.atleast_2d(X))
    return softmax(acts[-1])


def mean_cross_entropy(net: Network, X: np.ndarray, y: np.ndarray) -> float:
    p = predict_proba(net, X)
    return float(-np.mean(np.log(np.maximum(p[np.arange(len(y)), y], 1e-300))))


def loss_gradients(net: Network, X: np.ndarray, y: np.ndarray):
    """Mean cross-entropy and its analytic gradients as (dW list, db list)."""
    pre, acts = forward(net, X)
    n = X.shape[0]
    p = softmax(acts[-1])
    loss = float(-np.mean(np.log(np.maximum(p[np.arange(n), y], 1e-300))))
    delta = p.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    dW, db = [None] * len(net.weights), [None] * len(net.weights)
    for layer in range(len(net.weights) - 1, -1, -1):
        dW[layer] = acts[layer].T @ delta
        db[layer] = delta.sum(axis=0)
        if layer:
            delta = (delta @ net.weights[layer].T) * (pre[layer - 1] > 0)
    return loss, dW, db


def train_network(X: np.ndarray, y: np.ndarray, n_classes: int, hyper: MlpHyper,
                  history: list | None = None) -> Network:
    rng = np.random.default_rng(hyper.seed)
    sizes = [X.shape[1], *hyper.hidden_layers, n_classes]
    net = init_network(sizes, rng)
    params = net.params()
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    step = 0
    n = X.shape[0]
    for epoch in range(hyper.epochs):
        order = rng.permutation(n)
        for start in range(0, n, hyper.batch_size):
            batch = order[start:start + hyper.batch_size]
            loss, dW, db = loss_gradients(net, X[batch], y[batch])
            if not np.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss at epoch {epoch}, step {step}; "
                    f"try a lower learning rate (now {hyper.learning_rate})")
            grads = [g for pair in zip(dW, db) for g in pair]
            step += 1
            c1 = 1.0 - hyper.beta1 ** step
            c2 = 1.0 - hyper.beta2 ** step
            for p, g, mi, vi in zip(params, grads, m, v):
                mi *= hyper.beta1
                mi += (1.0 - hyper.beta1) * g
                vi *= hyper.beta2
                vi += (1.0 - hyper.beta2) * g * g
                p -= hyper.learning_rate * (mi / c1) / (np.sqrt(vi / c2) + hyper.eps)
        if history is not None:
            history.append(mean_cross_entropy(net, X, y))
    return net
