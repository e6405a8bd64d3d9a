"""Instance normalization, adaptive instance normalization and their unconditional use."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np

from caimbench.autograd import Tensor, instance_stats
from caimbench.config import DEFAULT_EPSILON
from caimbench.errors import ShapeError

if TYPE_CHECKING:
    from caimbench.modulation.caim import CaimBlock

UnconditionalVariant = Literal["in", "aim"]


@dataclass(frozen=True)
class InstanceNormParams:
    """Per-channel affine parameters of instance normalization."""

    gamma: Tensor
    beta: Tensor
    affine: bool

    def __post_init__(self) -> None:
        if self.gamma.shape != self.beta.shape or self.gamma.ndim != 1:
            raise ShapeError(
                f"gamma and beta must be equal-length vectors, got {self.gamma.shape} and {self.beta.shape}"
            )
        if not self.affine and (self.gamma.requires_grad or self.beta.requires_grad):
            raise ValueError("affine-free instance norm parameters cannot be trainable")

    @property
    def channels(self) -> int:
        return self.gamma.shape[0]

    @classmethod
    def affine_free(cls, channels: int) -> InstanceNormParams:
        """gamma ≡ 1, beta ≡ 0, not trainable."""
        return cls(gamma=Tensor(np.ones(channels)), beta=Tensor(np.zeros(channels)), affine=False)

    @classmethod
    def learnable(cls, channels: int) -> InstanceNormParams:
        """Trainable affine parameters initialized to the identity."""
        return cls(
            gamma=Tensor(np.ones(channels), requires_grad=True),
            beta=Tensor(np.zeros(channels), requires_grad=True),
            affine=True,
        )


def normalize(x: Tensor, epsilon: float = DEFAULT_EPSILON) -> Tensor:
    """Remove per-instance channel statistics: (x - μ(x)) / σ(x)."""
    stats = instance_stats(x, epsilon)
    return (x - stats.mean) / stats.std


def instance_norm(
    x: Tensor,
    params: InstanceNormParams,
    epsilon: float = DEFAULT_EPSILON,
) -> Tensor:
    """
    Instance normalization: gamma · (x - μ(x)) / σ(x) + beta.

    Raises:
        ShapeError: If x is not rank 4 or its channel count differs from the params
    """
    if x.ndim != 4:
        raise ShapeError(f"instance_norm needs N×C×H×W input, got shape {x.shape}")
    channels = x.shape[1]
    if params.channels != channels:
        raise ShapeError(f"instance_norm params have {params.channels} channels, input has {channels}")
    normalized = normalize(x, epsilon)
    if not params.affine:
        return normalized
    gamma = params.gamma.reshape(1, channels, 1, 1)
    beta = params.beta.reshape(1, channels, 1, 1)
    return normalized * gamma + beta


def adain(content: Tensor, style: Tensor, epsilon: float = DEFAULT_EPSILON) -> Tensor:
    """
    Adaptive instance normalization: σ(style) · (content - μ(content)) / σ(content) + μ(style).

    Spatial extents may differ; the style batch must match the content batch or be 1.

    Raises:
        ShapeError: On channel or batch mismatch
    """
    if content.ndim != 4 or style.ndim != 4:
        raise ShapeError(f"adain needs rank-4 inputs, got {content.shape} and {style.shape}")
    if content.shape[1] != style.shape[1]:
        raise ShapeError(
            f"adain channel mismatch: content has {content.shape[1]}, style has {style.shape[1]}"
        )
    if style.shape[0] not in (1, content.shape[0]):
        raise ShapeError(f"adain style batch {style.shape[0]} does not match content batch {content.shape[0]}")
    style_stats = instance_stats(style, epsilon)
    return style_stats.std * normalize(content, epsilon) + style_stats.mean


def unconditional_forward(
    x: Tensor,
    variant: UnconditionalVariant,
    block: CaimBlock | None = None,
    epsilon: float = DEFAULT_EPSILON,
) -> Tensor:
    """
    Apply IN or AIM to every input, with neither gate nor residual.

    Args:
        x: Feature map N×C×H×W
        variant: "in" for affine-free instance norm, "aim" for the block's modulation
        block: Required for "aim"
        epsilon: Variance stabilizer

    Raises:
        ValueError: If "aim" is requested without a block or the variant is unknown
    """
    if variant == "in":
        return instance_norm(x, InstanceNormParams.affine_free(x.shape[1]), epsilon)
    if variant == "aim":
        if block is None:
            raise ValueError("unconditional AIM needs a CaimBlock")
        from caimbench.modulation.caim import aim

        return aim(block, x)
    raise ValueError(f"unknown unconditional variant: {variant!r}")
