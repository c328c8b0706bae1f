"""Dense feed-forward networks with analytic backprop and SGD/Adam updates.

No autodiff: gradients are computed layer by layer from cached activations,
which keeps the training arithmetic inspectable and lets tests compare it
against finite differences and tabular recurrences exactly.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

RELU = "relu"
TANH = "tanh"
IDENTITY = "identity"
ACTIVATIONS = (RELU, TANH, IDENTITY)

FORMAT_HEADER = "pricelab-net 1"


@dataclass
class Layer:
    weights: np.ndarray  # (out_dim, in_dim)
    bias: np.ndarray | None  # (out_dim,) or None for bias-free layers
    activation: str

    def __post_init__(self) -> None:
        if self.weights.ndim != 2:
            raise ValueError("weights must be a matrix")
        if self.bias is not None and self.bias.shape != (self.weights.shape[0],):
            raise ValueError("bias shape must match output dimension")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == RELU:
        return np.maximum(z, 0.0)
    if kind == TANH:
        return np.tanh(z)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == RELU:
        return (z > 0).astype(z.dtype)
    if kind == TANH:
        return 1.0 - a * a
    return np.ones_like(z)


class Network:
    """A stack of dense layers. Inputs may be (in_dim,) or (n, in_dim)."""

    def __init__(self, layers: Sequence[Layer]):
        if not layers:
            raise ValueError("network needs at least one layer")
        for prev, nxt in zip(layers, layers[1:]):
            if nxt.weights.shape[1] != prev.weights.shape[0]:
                raise ValueError("adjacent layer dimensions do not chain")
        for layer in layers:
            if not np.all(np.isfinite(layer.weights)):
                raise ValueError("weights must be finite")
            if layer.bias is not None and not np.all(np.isfinite(layer.bias)):
                raise ValueError("bias must be finite")
        self.layers = list(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.layers[-1].weights.shape[0]

    def _as_batch(self, x: np.ndarray) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            return x[None, :], True
        return x, False

    def forward(self, x: np.ndarray) -> np.ndarray:
        y, _ = self.forward_cache(x)
        return y

    def forward_cache(self, x: np.ndarray) -> tuple[np.ndarray, dict]:
        batch, squeeze = self._as_batch(x)
        if batch.shape[1] != self.in_dim:
            raise ValueError(f"expected input dim {self.in_dim}, got {batch.shape[1]}")
        inputs, pre, post = [], [], []
        a = batch
        for layer in self.layers:
            inputs.append(a)
            z = a @ layer.weights.T
            if layer.bias is not None:
                z = z + layer.bias
            a = _activate(z, layer.activation)
            pre.append(z)
            post.append(a)
        cache = {"inputs": inputs, "pre": pre, "post": post, "squeeze": squeeze}
        return (a[0] if squeeze else a), cache

    def backward(
        self, cache: dict, upstream: np.ndarray
    ) -> tuple[list[tuple[np.ndarray, np.ndarray | None]], np.ndarray]:
        """Gradients of sum(upstream * output) w.r.t. parameters and input."""
        grad = np.asarray(upstream, dtype=np.float64)
        if cache["squeeze"]:
            grad = grad[None, :]
        if grad.shape != cache["post"][-1].shape:
            raise ValueError("upstream gradient shape mismatch")
        grads: list[tuple[np.ndarray, np.ndarray | None]] = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            dz = grad * _activation_grad(cache["pre"][i], cache["post"][i], layer.activation)
            dw = dz.T @ cache["inputs"][i]
            db = dz.sum(axis=0) if layer.bias is not None else None
            grads[i] = (dw, db)
            grad = dz @ layer.weights
        return grads, (grad[0] if cache["squeeze"] else grad)

    def copy(self) -> "Network":
        return Network(
            [
                Layer(l.weights.copy(), None if l.bias is None else l.bias.copy(), l.activation)
                for l in self.layers
            ]
        )

    def parameters(self) -> list[np.ndarray]:
        params = []
        for layer in self.layers:
            params.append(layer.weights)
            if layer.bias is not None:
                params.append(layer.bias)
        return params


def init_network(
    dims: Sequence[int],
    activations: Sequence[str],
    rng: np.random.Generator,
    bias: bool = True,
) -> Network:
    """Uniform fan-in initialization: W, b ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    if len(dims) < 2 or len(activations) != len(dims) - 1:
        raise ValueError("need dims of length L+1 and one activation per layer")
    layers = []
    for i, act in enumerate(activations):
        fan_in = dims[i]
        bound = 1.0 / np.sqrt(fan_in)
        w = rng.uniform(-bound, bound, size=(dims[i + 1], fan_in))
        b = rng.uniform(-bound, bound, size=dims[i + 1]) if bias else None
        layers.append(Layer(w, b, act))
    return Network(layers)


def same_architecture(a: Network, b: Network) -> bool:
    if len(a.layers) != len(b.layers):
        return False
    for la, lb in zip(a.layers, b.layers):
        if la.weights.shape != lb.weights.shape or la.activation != lb.activation:
            return False
        if (la.bias is None) != (lb.bias is None):
            return False
    return True


def soft_update(target: Network, online: Network, rho: float) -> None:
    """In-place blend: target <- rho * online + (1 - rho) * target."""
    if not 0.0 <= rho <= 1.0:
        raise ValueError("rho must be in [0, 1]")
    if not same_architecture(target, online):
        raise ValueError("architecture mismatch")
    for tl, ol in zip(target.layers, online.layers):
        tl.weights *= 1.0 - rho
        tl.weights += rho * ol.weights
        if tl.bias is not None:
            tl.bias *= 1.0 - rho
            tl.bias += rho * ol.bias


def copy_into(target: Network, online: Network) -> None:
    soft_update(target, online, 1.0)


class Sgd:
    def __init__(self, lr: float):
        if lr <= 0:
            raise ValueError("lr must be > 0")
        self.lr = lr
        self.step_count = 0

    def update(self, net: Network, grads: Sequence[tuple[np.ndarray, np.ndarray | None]]) -> None:
        self.step_count += 1
        for layer, (dw, db) in zip(net.layers, grads):
            layer.weights -= self.lr * dw
            if layer.bias is not None:
                layer.bias -= self.lr * db


class Adam:
    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError("lr must be > 0")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._m: list[tuple[np.ndarray, np.ndarray | None]] | None = None
        self._v: list[tuple[np.ndarray, np.ndarray | None]] | None = None

    def _init_moments(self, net: Network) -> None:
        def zeros_like(layer: Layer) -> tuple[np.ndarray, np.ndarray | None]:
            return (
                np.zeros_like(layer.weights),
                None if layer.bias is None else np.zeros_like(layer.bias),
            )

        self._m = [zeros_like(l) for l in net.layers]
        self._v = [zeros_like(l) for l in net.layers]

    def update(self, net: Network, grads: Sequence[tuple[np.ndarray, np.ndarray | None]]) -> None:
        if self._m is None:
            self._init_moments(net)
        self.step_count += 1
        t = self.step_count
        c1 = 1.0 - self.beta1**t
        c2 = 1.0 - self.beta2**t
        for layer, (dw, db), m, v in zip(net.layers, grads, self._m, self._v):
            m[0][:] = self.beta1 * m[0] + (1 - self.beta1) * dw
            v[0][:] = self.beta2 * v[0] + (1 - self.beta2) * dw * dw
            layer.weights -= self.lr * (m[0] / c1) / (np.sqrt(v[0] / c2) + self.eps)
            if layer.bias is not None:
                m[1][:] = self.beta1 * m[1] + (1 - self.beta1) * db
                v[1][:] = self.beta2 * v[1] + (1 - self.beta2) * db * db
                layer.bias -= self.lr * (m[1] / c1) / (np.sqrt(v[1] / c2) + self.eps)


def make_optimizer(kind: str, lr: float):
    if kind == "adam":
        return Adam(lr=lr)
    if kind == "sgd":
        return Sgd(lr=lr)
    raise ValueError(f"unknown optimizer {kind!r}")


def save_network(net: Network, path: str | Path) -> None:
    """Text checkpoint: versioned header, per-layer dims, row-major weights."""
    lines = [FORMAT_HEADER, f"layers {len(net.layers)}"]
    for layer in net.layers:
        out_dim, in_dim = layer.weights.shape
        has_bias = 0 if layer.bias is None else 1
        lines.append(f"layer {out_dim} {in_dim} {layer.activation} {has_bias}")
        for row in layer.weights:
            lines.append(" ".join(repr(v) for v in row))
        if layer.bias is not None:
            lines.append(" ".join(repr(v) for v in layer.bias))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_row(line: str) -> np.ndarray:
    return np.array([float(v) for v in line.split()], dtype=np.float64)


def load_network(path: str | Path) -> Network:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError(f"{path}: not a {FORMAT_HEADER!r} file")
    if len(lines) < 2 or not lines[1].startswith("layers "):
        raise ValueError(f"{path}: missing layer count")
    n_layers = int(lines[1].split()[1])
    layers = []
    i = 2
    for _ in range(n_layers):
        parts = lines[i].split()
        if len(parts) != 5 or parts[0] != "layer":
            raise ValueError(f"{path}: malformed layer header at line {i + 1}")
        out_dim, in_dim, act, has_bias = int(parts[1]), int(parts[2]), parts[3], int(parts[4])
        i += 1
        rows = [_parse_row(lines[i + r]) for r in range(out_dim)]
        i += out_dim
        weights = np.stack(rows)
        if weights.shape != (out_dim, in_dim):
            raise ValueError(f"{path}: weight shape mismatch near line {i}")
        bias = None
        if has_bias:
            bias = _parse_row(lines[i])
            i += 1
        layers.append(Layer(weights, bias, act))
    return Network(layers)
