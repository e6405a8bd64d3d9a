"""Central finite-difference validation of analytic gradients."""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
from loguru import logger

from caimbench.autograd.functional import record_relu_signs
from caimbench.autograd.tensor import Tensor

DEFAULT_STEP = 1e-5
GRADIENT_FLOOR = 1e-3
"""Relative errors use max(|analytic|, |numeric|, GRADIENT_FLOOR) as denominator."""
KINK_REFINEMENTS = 2
"""How many times a step straddling a relu kink is shrunk tenfold before going one-sided."""


def _evaluate(fn: Callable[[], Tensor]) -> tuple[float, np.ndarray]:
    """Scalar value of ``fn`` and the sign pattern of every relu input it touched."""
    with record_relu_signs() as log:
        value = fn().item()
    if not log:
        return value, np.zeros(0, dtype=bool)
    return value, np.concatenate([mask.reshape(-1) for mask in log])


def numeric_gradient(
    fn: Callable[[], Tensor],
    tensor: Tensor,
    step: float = DEFAULT_STEP,
    coordinates: Sequence[int] | None = None,
) -> np.ndarray:
    """
    Central differences of a scalar function w.r.t. selected entries of ``tensor``.

    The tensor's data is perturbed in place and restored afterwards. Entries not
    listed in ``coordinates`` are returned as NaN.

    A perturbation that flips the sign of any relu input crosses a kink, where
    the central difference mixes two linear pieces. Such entries are re-measured
    with the step shrunk tenfold, up to ``KINK_REFINEMENTS`` times; if the kink is
    still inside the smallest step, the one-sided difference on the side that
    keeps the sign pattern is used.
    """
    flat = tensor.data.reshape(-1)
    indices = range(flat.size) if coordinates is None else coordinates
    grad = np.full(flat.size, np.nan)
    center, center_signs = _evaluate(fn)
    for index in indices:
        original = flat[index]
        h = step
        for attempt in range(KINK_REFINEMENTS + 1):
            flat[index] = original + h
            upper, upper_signs = _evaluate(fn)
            flat[index] = original - h
            lower, lower_signs = _evaluate(fn)
            flat[index] = original
            upper_smooth = np.array_equal(upper_signs, center_signs)
            lower_smooth = np.array_equal(lower_signs, center_signs)
            if upper_smooth and lower_smooth:
                grad[index] = (upper - lower) / (2.0 * h)
                break
            if attempt < KINK_REFINEMENTS:
                h /= 10.0
        else:
            if upper_smooth:
                grad[index] = (upper - center) / h
            elif lower_smooth:
                grad[index] = (center - lower) / h
            else:
                grad[index] = (upper - lower) / (2.0 * h)
                logger.debug(f"Kink on both sides of entry {index}; keeping the central difference")
    return grad.reshape(tensor.shape)


def max_relative_error(
    fn: Callable[[], Tensor],
    tensors: Sequence[Tensor],
    step: float = DEFAULT_STEP,
    max_coordinates: int | None = None,
    seed: int = 0,
) -> float:
    """
    Largest relative error between analytic and numeric gradients.

    Args:
        fn: Builds the scalar loss from the current tensor values
        tensors: Leaf tensors (requires_grad=True) to check
        step: Finite-difference half step
        max_coordinates: Check at most this many random entries per tensor
        seed: Selects the checked entries when max_coordinates is set

    Returns:
        max |analytic - numeric| / max(|analytic|, |numeric|, GRADIENT_FLOOR)
    """
    for tensor in tensors:
        tensor.zero_grad()
    fn().backward()
    analytic = [
        np.zeros(t.shape) if t.grad is None else t.grad.copy() for t in tensors
    ]
    for tensor in tensors:
        tensor.zero_grad()

    rng = np.random.default_rng(seed)
    worst = 0.0
    for tensor, exact in zip(tensors, analytic, strict=True):
        coordinates: Sequence[int] | None = None
        if max_coordinates is not None and tensor.size > max_coordinates:
            coordinates = sorted(rng.choice(tensor.size, size=max_coordinates, replace=False).tolist())
        numeric = numeric_gradient(fn, tensor, step, coordinates)
        checked = ~np.isnan(numeric)
        a, n = exact[checked], numeric[checked]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), GRADIENT_FLOOR)
        worst = max(worst, float(np.max(np.abs(a - n) / denom, initial=0.0)))
    return worst
