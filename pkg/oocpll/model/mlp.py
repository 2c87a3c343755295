"""A rectifier MLP with softmax outputs and exact gradients for soft-target cross-entropy."""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

PROB_FLOOR = 1e-12


@dataclass(eq=False)
class MlpParams:
    """Weights (fan_in x fan_out) and biases of a d -> h1 -> ... -> c network."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("an MLP needs one bias vector per weight matrix and at least one layer")
        for i, (weight, bias) in enumerate(zip(self.weights, self.biases)):
            if weight.ndim != 2 or bias.shape != (weight.shape[1],):
                raise ValueError(f"layer {i}: weight {weight.shape} and bias {bias.shape} do not match")
            if i and self.weights[i - 1].shape[1] != weight.shape[0]:
                raise ValueError(f"layer {i}: expects {weight.shape[0]} inputs, previous layer has {self.weights[i - 1].shape[1]}")

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(weight.shape[1] for weight in self.weights))

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    def tensors(self) -> list[np.ndarray]:
        """Every parameter array in a fixed order: w0, b0, w1, b1, ..."""
        return [array for pair in zip(self.weights, self.biases) for array in pair]

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def zeros_like(self) -> "MlpParams":
        return MlpParams([np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases])

    def is_finite(self) -> bool:
        return all(np.isfinite(array).all() for array in self.tensors())

    def same_shapes(self, other: "MlpParams") -> bool:
        return [a.shape for a in self.tensors()] == [b.shape for b in other.tensors()]


def init_mlp(layer_sizes: Sequence[int], rng: np.random.Generator) -> MlpParams:
    """Uniform initialization in +-sqrt(6 / (fan_in + fan_out)) per layer; biases start at zero."""
    if len(layer_sizes) < 2:
        raise ValueError("layer_sizes needs at least an input and an output size")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpParams(weights, biases)


@dataclass(eq=False)
class ForwardCache:
    """Layer inputs and hidden pre-activations kept for the backward pass."""

    inputs: list[np.ndarray]
    pre_activations: list[np.ndarray]
    probs: np.ndarray


def _as_batch(params: MlpParams, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != params.n_inputs:
        raise ValueError(f"expected inputs of dimension {params.n_inputs}, got shape {x.shape}")
    if not np.isfinite(batch).all():
        raise ValueError("inputs must be finite")
    return batch, single


def forward_with_cache(params: MlpParams, x: np.ndarray) -> ForwardCache:
    batch, _ = _as_batch(params, x)
    inputs, pre_activations = [], []
    activation = batch
    last = len(params.weights) - 1
    for i, (weight, bias) in enumerate(zip(params.weights, params.biases)):
        inputs.append(activation)
        z = activation @ weight + bias
        if i == last:
            return ForwardCache(inputs, pre_activations, softmax(z, axis=1))
        pre_activations.append(z)
        activation = np.maximum(z, 0.0)
    raise AssertionError("unreachable")


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Class probabilities for one feature vector (returns shape (c,)) or a batch (returns shape (n, c))."""
    _, single = _as_batch(params, x)
    probs = forward_with_cache(params, x).probs
    return probs[0] if single else probs


def backprop(params: MlpParams, cache: ForwardCache, targets: np.ndarray) -> MlpParams:
    """Gradient of sum_i -sum_j t_ij log f_j(x_i) over the cached batch.

    At the logits the gradient is (sum_j t_ij) f_i - t_i; it is propagated exactly through the rectifier layers.
    """
    delta = targets.sum(axis=1, keepdims=True) * cache.probs - targets
    grad_weights, grad_biases = [], []
    for i in range(len(params.weights) - 1, -1, -1):
        grad_weights.append(cache.inputs[i].T @ delta)
        grad_biases.append(delta.sum(axis=0))
        if i:
            delta = (delta @ params.weights[i].T) * (cache.pre_activations[i - 1] > 0)
    return MlpParams(grad_weights[::-1], grad_biases[::-1])


def _check_targets(params: MlpParams, targets: np.ndarray, n: int) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.float64)
    targets = targets[None, :] if targets.ndim == 1 else targets
    if targets.shape != (n, params.n_classes):
        raise ValueError(f"targets must have shape ({n}, {params.n_classes}), got {targets.shape}")
    if not np.isfinite(targets).all():
        raise ValueError("targets must be finite")
    if (targets < 0).any():
        raise ValueError("targets must be non-negative")
    return targets


def grad_soft_target(params: MlpParams, x: np.ndarray, t: np.ndarray) -> MlpParams:
    """Parameter gradients of L(x, t) = -sum_j t_j log f_j(x), summed over the batch when x is a matrix."""
    cache = forward_with_cache(params, x)
    targets = _check_targets(params, t, len(cache.probs))
    return backprop(params, cache, targets)


def soft_target_loss(params: MlpParams, x: np.ndarray, t: np.ndarray) -> float:
    """-sum_i sum_j t_ij log f_j(x_i) with probabilities floored at 1e-12."""
    cache = forward_with_cache(params, x)
    targets = _check_targets(params, t, len(cache.probs))
    return float(-(targets * np.log(np.maximum(cache.probs, PROB_FLOOR))).sum())


def predict_labels(params: MlpParams, x: np.ndarray) -> np.ndarray:
    return forward(params, np.atleast_2d(x)).argmax(axis=1)
