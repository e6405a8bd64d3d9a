"""Differentiable primitives used by the embedding network and the CAIM block."""

from __future__ import annotations

from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from caimbench.autograd.tensor import Array, Tensor
from caimbench.config import DEFAULT_EPSILON, EMBEDDING_EPSILON
from caimbench.errors import ShapeError


def conv_output_extent(extent: int, kernel: int, stride: int, padding: int) -> int:
    """Spatial extent of a convolution output along one axis."""
    return (extent + 2 * padding - kernel) // stride + 1


def _windows(x: Array, kernel: int, stride: int) -> Array:
    """View of all k×k patches: (N, C, H_out, W_out, k, k)."""
    patches = sliding_window_view(x, (kernel, kernel), axis=(2, 3))
    return patches[:, :, ::stride, ::stride]


def conv2d(
    input: Tensor,
    weight: Tensor,
    bias: Tensor,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    """
    2D cross-correlation over an N×C×H×W batch.

    Args:
        input: Feature map of shape N×C_in×H×W
        weight: Kernel of shape C_out×C_in×k×k
        bias: Per-output-channel bias of shape C_out
        stride: Positive step between output positions
        padding: Zero padding added on every spatial border

    Returns:
        Feature map of shape N×C_out×H_out×W_out

    Raises:
        ShapeError: If the operand shapes do not fit together
    """
    if input.ndim != 4:
        raise ShapeError(f"conv2d input must be N×C×H×W, got shape {input.shape}")
    if weight.ndim != 4 or weight.shape[2] != weight.shape[3]:
        raise ShapeError(f"conv2d weight must be C_out×C_in×k×k, got shape {weight.shape}")
    c_out, c_in, kernel, _ = weight.shape
    if input.shape[1] != c_in:
        raise ShapeError(
            f"conv2d input has {input.shape[1]} channels but weight expects {c_in} "
            f"(input {input.shape}, weight {weight.shape})"
        )
    if bias.shape != (c_out,):
        raise ShapeError(f"conv2d bias must have shape ({c_out},), got {bias.shape}")
    if stride < 1 or padding < 0:
        raise ShapeError(f"conv2d needs stride >= 1 and padding >= 0, got {stride}, {padding}")

    n, _, h, w = input.shape
    h_out = conv_output_extent(h, kernel, stride, padding)
    w_out = conv_output_extent(w, kernel, stride, padding)
    if h_out < 1 or w_out < 1:
        raise ShapeError(f"conv2d kernel {kernel} does not fit input {input.shape} with padding {padding}")

    padded = np.pad(input.data, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
    windows = _windows(padded, kernel, stride)
    # (N, H_out, W_out, C_out) -> (N, C_out, H_out, W_out)
    out = np.tensordot(windows, weight.data, axes=([1, 4, 5], [1, 2, 3])).transpose(0, 3, 1, 2)
    out = out + bias.data[None, :, None, None]

    kernel_data = weight.data
    padded_shape = padded.shape

    def backward(g: Array) -> tuple[Array | None, Array | None, Array | None]:
        grad_input = None
        if input.requires_grad:
            # (N, H_out, W_out, C_in, k, k)
            grad_windows = np.tensordot(g, kernel_data, axes=([1], [0])).transpose(0, 3, 1, 2, 4, 5)
            grad_padded = np.zeros(padded_shape, dtype=np.float64)
            for i in range(kernel):
                for j in range(kernel):
                    grad_padded[
                        :, :, i : i + stride * h_out : stride, j : j + stride * w_out : stride
                    ] += grad_windows[:, :, :, :, i, j]
            grad_input = grad_padded[:, :, padding : padding + h, padding : padding + w]
        grad_weight = None
        if weight.requires_grad:
            grad_weight = np.tensordot(g, windows, axes=([0, 2, 3], [0, 2, 3]))
        grad_bias = g.sum(axis=(0, 2, 3)) if bias.requires_grad else None
        return grad_input, grad_weight, grad_bias

    return Tensor._result(out, (input, weight, bias), backward, "conv2d")


_SIGN_LOGS: list[list[Array]] = []


@contextmanager
def record_relu_signs() -> Iterator[list[Array]]:
    """Collect the boolean sign mask of every relu input evaluated inside the block."""
    log: list[Array] = []
    _SIGN_LOGS.append(log)
    try:
        yield log
    finally:
        _SIGN_LOGS.pop()


def relu(input: Tensor) -> Tensor:
    """Elementwise max(0, x); the subgradient at 0 is 0."""
    mask = input.data > 0.0
    if _SIGN_LOGS:
        _SIGN_LOGS[-1].append(mask)

    def backward(g: Array) -> tuple[Array]:
        return (g * mask,)

    return Tensor._result(np.where(mask, input.data, 0.0), (input,), backward, "relu")


def global_average_pool(input: Tensor) -> Tensor:
    """Mean over the spatial extent: N×C×H×W -> N×C."""
    if input.ndim != 4:
        raise ShapeError(f"global_average_pool needs a rank-4 input, got shape {input.shape}")
    if input.shape[2] == 0 or input.shape[3] == 0:
        raise ShapeError(f"global_average_pool got zero spatial extent {input.shape}")
    return input.mean(axis=(2, 3))


def dense(input: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """Affine map ``input · weightᵀ + bias`` for N×D_in inputs and D_out×D_in weights."""
    if input.ndim != 2 or weight.ndim != 2:
        raise ShapeError(f"dense needs N×D_in input and D_out×D_in weight, got {input.shape}, {weight.shape}")
    if input.shape[1] != weight.shape[1]:
        raise ShapeError(
            f"dense inner dimension mismatch: input {input.shape} vs weight {weight.shape}"
        )
    if bias.shape != (weight.shape[0],):
        raise ShapeError(f"dense bias must have shape ({weight.shape[0]},), got {bias.shape}")

    x, w = input.data, weight.data

    def backward(g: Array) -> tuple[Array, Array, Array]:
        return g @ w, g.T @ x, g.sum(axis=0)

    return Tensor._result(x @ w.T + bias.data, (input, weight, bias), backward, "dense")


@dataclass(frozen=True)
class ChannelStats:
    """
    Per-sample, per-channel spatial statistics.

    Both tensors have shape N×C×1×1 so they broadcast against the feature map.
    ``std`` includes the epsilon stabilizer: std = sqrt(var + epsilon).
    """

    mean: Tensor
    std: Tensor

    def as_matrix(self) -> tuple[Tensor, Tensor]:
        n, c = self.mean.shape[:2]
        return self.mean.reshape(n, c), self.std.reshape(n, c)


def instance_stats(input: Tensor, epsilon: float = DEFAULT_EPSILON) -> ChannelStats:
    """
    Spatial mean and epsilon-stabilized population standard deviation.

    Statistics are computed over H×W only, independently for every sample and channel.
    """
    if input.ndim != 4:
        raise ShapeError(f"instance_stats needs a rank-4 input, got shape {input.shape}")
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    mean = input.mean(axis=(2, 3), keepdims=True)
    centered = input - mean
    variance = (centered * centered).mean(axis=(2, 3), keepdims=True)
    return ChannelStats(mean=mean, std=(variance + epsilon).sqrt())


def l2_normalize(input: Tensor) -> Tensor:
    """Scale every row of an N×D tensor to unit Euclidean norm."""
    squared = (input * input).sum(axis=1, keepdims=True)
    return input / (squared + EMBEDDING_EPSILON).sqrt()


def softmax_cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy of N×K logits against integer class labels."""
    if logits.ndim != 2:
        raise ShapeError(f"logits must be N×K, got shape {logits.shape}")
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    probs = exps / exps.sum(axis=1, keepdims=True)
    rows = np.arange(n)
    loss = float(-np.log(probs[rows, labels]).mean())

    def backward(g: Array) -> tuple[Array]:
        # softmax + cross-entropy collapses to (P - Y) / N
        grad = probs.copy()
        grad[rows, labels] -= 1.0
        return (grad * (g / n),)

    return Tensor._result(np.asarray(loss), (logits,), backward, "cross_entropy")
