"""Tiny feedforward networks with manual gradients and per-layer freezing.

Plain affine+activation stacks over numpy, trained by vanilla SGD on a
mean-squared reconstruction loss. No autograd framework: backpropagation is
written out so the freeze contract is trivially auditable, and a central
finite-difference gradcheck keeps the hand gradients honest. A frozen
randomly initialized network plays the teacher; a trainable clone-shaped
network plays the student.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import check_positive
from .seeding import derive_seed

__all__ = [
    "ACTIVATIONS",
    "Layer",
    "ToyNetwork",
    "NoiseSpec",
    "DivergenceError",
    "forward",
    "backward_and_step",
    "inject_gaussian_noise",
    "anomaly_map",
    "finite_difference_gradcheck",
    "random_network",
    "save_checkpoint",
    "load_checkpoint",
]

ACTIVATIONS = ("identity", "relu", "tanh")


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass
class Layer:
    """One affine map plus activation. ``frozen`` excludes it from updates."""

    weights: np.ndarray
    bias: np.ndarray
    activation: str = "identity"
    frozen: bool = False

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        self.bias = np.asarray(self.bias, dtype=float)
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.bias.shape != (self.weights.shape[0],):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match "
                f"{self.weights.shape[0]} output units"
            )
        if not (np.all(np.isfinite(self.weights)) and np.all(np.isfinite(self.bias))):
            raise ValueError("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.activation!r}, expected one of "
                f"{', '.join(ACTIVATIONS)}"
            )

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass
class ToyNetwork:
    """Ordered layer stack; consecutive layer dimensions must chain."""

    layers: list[Layer] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.layers:
            raise ValueError("a network needs at least one layer")
        for i in range(1, len(self.layers)):
            if self.layers[i].in_dim != self.layers[i - 1].out_dim:
                raise ValueError(
                    f"layer {i} expects {self.layers[i].in_dim} inputs but "
                    f"layer {i - 1} produces {self.layers[i - 1].out_dim}"
                )

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim


@dataclass(frozen=True)
class NoiseSpec:
    """Gaussian perturbation recipe for pseudo-anomaly synthesis."""

    sigma_noise: float
    seed: int

    def __post_init__(self) -> None:
        check_positive(self.sigma_noise, "sigma_noise")


def _apply_activation(name: str, pre: np.ndarray) -> np.ndarray:
    if name == "identity":
        return pre
    if name == "relu":
        return np.maximum(pre, 0.0)
    return np.tanh(pre)


def _activation_grad(name: str, pre: np.ndarray, post: np.ndarray) -> np.ndarray:
    if name == "identity":
        return np.ones_like(pre)
    if name == "relu":
        # Subgradient 0 at the kink itself.
        return (pre > 0.0).astype(float)
    return 1.0 - post * post


def _as_batch(x: np.ndarray, expected_dim: int, name: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    was_vector = arr.ndim == 1
    if was_vector:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] != expected_dim:
        raise ValueError(
            f"{name} must have {expected_dim} features, got shape {np.shape(x)}"
        )
    return arr, was_vector


def forward(net: ToyNetwork, x) -> np.ndarray:
    """Run the stack on a single vector or a batch of row vectors."""
    batch, was_vector = _as_batch(x, net.input_dim, "x")
    out = batch
    for layer in net.layers:
        out = _apply_activation(layer.activation, out @ layer.weights.T + layer.bias)
    return out[0] if was_vector else out


def _forward_trace(net: ToyNetwork, batch: np.ndarray):
    # Returns per-layer (input, pre-activation, output); batch stays 2-D.
    trace = []
    current = batch
    for layer in net.layers:
        pre = current @ layer.weights.T + layer.bias
        post = _apply_activation(layer.activation, pre)
        trace.append((current, pre, post))
        current = post
    return trace


def _loss_and_grads(net: ToyNetwork, x, target, *, need_grads: bool = True):
    batch, _ = _as_batch(x, net.input_dim, "x")
    target_batch, _ = _as_batch(target, net.output_dim, "target")
    if target_batch.shape[0] != batch.shape[0]:
        raise ValueError(
            f"batch size mismatch: {batch.shape[0]} inputs vs "
            f"{target_batch.shape[0]} targets"
        )
    trace = _forward_trace(net, batch)
    output = trace[-1][2]
    residual = output - target_batch
    loss = float(np.mean(residual * residual))
    if not need_grads:
        return loss, None
    grads = []
    # d(mean of squared entries) w.r.t. output
    upstream = 2.0 * residual / residual.size
    for layer, (layer_in, pre, post) in zip(reversed(net.layers), reversed(trace)):
        d_pre = upstream * _activation_grad(layer.activation, pre, post)
        grads.append((d_pre.T @ layer_in, d_pre.sum(axis=0)))
        upstream = d_pre @ layer.weights
    grads.reverse()
    return loss, grads


def backward_and_step(net: ToyNetwork, x, target, learning_rate: float) -> float:
    """One SGD step on the mean-squared reconstruction loss.

    Frozen layers are skipped entirely, leaving their arrays bit-identical.
    Returns the pre-update loss.

    Raises:
        DivergenceError: the loss came out non-finite.
    """
    check_positive(learning_rate, "learning_rate")
    loss, grads = _loss_and_grads(net, x, target)
    if not math.isfinite(loss):
        raise DivergenceError(f"non-finite loss {loss}")
    for layer, (grad_w, grad_b) in zip(net.layers, grads):
        if layer.frozen:
            continue
        layer.weights -= learning_rate * grad_w
        layer.bias -= learning_rate * grad_b
    return loss


def inject_gaussian_noise(features, spec: NoiseSpec) -> np.ndarray:
    """Return features + N(0, sigma_noise^2) noise, reproducible per spec seed."""
    arr = np.asarray(features, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("features must be finite")
    rng = np.random.default_rng(spec.seed)
    return arr + rng.normal(0.0, spec.sigma_noise, size=arr.shape)


def anomaly_map(teacher_out, student_out, *, kind: str = "l1") -> float:
    """Scalar discrepancy between teacher and student outputs.

    Mean absolute elementwise difference by default; ``kind="squared"``
    switches to the mean squared difference.
    """
    t = np.asarray(teacher_out, dtype=float)
    s = np.asarray(student_out, dtype=float)
    if t.shape != s.shape:
        raise ValueError(f"shape mismatch: {t.shape} vs {s.shape}")
    if kind == "l1":
        return float(np.mean(np.abs(t - s)))
    if kind == "squared":
        return float(np.mean((t - s) ** 2))
    raise ValueError(f"unknown anomaly map kind {kind!r}")


def finite_difference_gradcheck(
    net: ToyNetwork, x, target, epsilon: float = 1e-5
) -> float:
    """Worst relative error between backprop and central differences.

    Every weight and bias entry is perturbed by +/- epsilon in place. The
    relative error denominator is floored at 1e-6 so near-zero gradients do
    not blow the ratio up on pure roundoff.
    """
    if not 0.0 < epsilon <= 1e-3:
        raise ValueError(f"epsilon must be in (0, 1e-3], got {epsilon}")
    _, grads = _loss_and_grads(net, x, target)
    worst = 0.0
    for layer, (grad_w, grad_b) in zip(net.layers, grads):
        for param, grad in ((layer.weights, grad_w), (layer.bias, grad_b)):
            flat = param.reshape(-1)
            grad_flat = grad.reshape(-1)
            for i in range(flat.size):
                original = flat[i]
                flat[i] = original + epsilon
                loss_plus, _ = _loss_and_grads(net, x, target, need_grads=False)
                flat[i] = original - epsilon
                loss_minus, _ = _loss_and_grads(net, x, target, need_grads=False)
                flat[i] = original
                fd = (loss_plus - loss_minus) / (2.0 * epsilon)
                denom = max(abs(fd), abs(grad_flat[i]), 1e-6)
                worst = max(worst, abs(fd - grad_flat[i]) / denom)
    return worst


def random_network(
    dims: tuple[int, ...],
    activations,
    seed: int,
    *,
    frozen: bool = False,
    weight_scale: float | None = None,
) -> ToyNetwork:
    """Build a network with N(0, scale^2) weights and zero biases.

    ``dims`` chains layer sizes, so (8, 16, 8) builds two layers. One
    activation name per layer, or a single name applied to all. Default
    weight scale is 1/sqrt(in_dim) per layer.
    """
    if len(dims) < 2:
        raise ValueError("dims needs at least an input and an output size")
    n_layers = len(dims) - 1
    if isinstance(activations, str):
        activations = [activations] * n_layers
    if len(activations) != n_layers:
        raise ValueError(
            f"expected {n_layers} activations for {len(dims)} dims, "
            f"got {len(activations)}"
        )
    layers = []
    for i in range(n_layers):
        rng = np.random.default_rng(derive_seed(seed, "layer", i))
        scale = weight_scale if weight_scale is not None else 1.0 / math.sqrt(dims[i])
        layers.append(
            Layer(
                weights=rng.normal(0.0, scale, size=(dims[i + 1], dims[i])),
                bias=np.zeros(dims[i + 1]),
                activation=activations[i],
                frozen=frozen,
            )
        )
    return ToyNetwork(layers=layers)


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(net: ToyNetwork, path) -> None:
    """Write the network as JSON: dims, activation, freeze flag, row-major weights."""
    payload = {
        "layers": [
            {
                "in_dim": layer.in_dim,
                "out_dim": layer.out_dim,
                "activation": layer.activation,
                "frozen": layer.frozen,
                "weights": layer.weights.reshape(-1).tolist(),
                "bias": layer.bias.tolist(),
            }
            for layer in net.layers
        ]
    }
    Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def load_checkpoint(path) -> ToyNetwork:
    """Rebuild a network from ``save_checkpoint`` output."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    layers = []
    for i, spec in enumerate(payload["layers"]):
        weights = np.asarray(spec["weights"], dtype=float)
        expected = spec["out_dim"] * spec["in_dim"]
        if weights.size != expected:
            raise ValueError(
                f"layer {i}: expected {expected} weights, got {weights.size}"
            )
        layers.append(
            Layer(
                weights=weights.reshape(spec["out_dim"], spec["in_dim"]),
                bias=np.asarray(spec["bias"], dtype=float),
                activation=spec["activation"],
                frozen=bool(spec["frozen"]),
            )
        )
    return ToyNetwork(layers=layers)
