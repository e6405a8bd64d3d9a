"""Conditional Adaptive Instance Modulation block.

A CAIM block predicts per-channel modulation parameters from the raw feature map
it receives, re-styles the instance-normalized map with them (AIM) and adds the
result back through a residual connection that is open only for the target
modality:

    ξ       = GAP(relu(conv2(relu(conv1(F)))))
    σ_f     = FC_σ(ξ),  μ_f = FC_μ(ξ)
    AIM(F)  = σ_f · (F - μ(F)) / σ(F) + μ_f
    CAIM(F) = g · AIM(F) + F

FLOP convention: one multiply-accumulate counts as 2 FLOPs. A block on a C×H×W
map costs the two 3×3 convolutions (2 · 9C² · HW MACs), the two heads (2 · C²
MACs) and the modulation arithmetic (2 MACs per element: normalize, then
scale-and-shift). Statistics, ReLU, pooling and the residual add are not counted.
"""

from __future__ import annotations

from enum import IntEnum
from typing import Literal, NamedTuple

import numpy as np

from caimbench.autograd import Tensor, conv2d, dense, global_average_pool, relu
from caimbench.config import DEFAULT_EPSILON
from caimbench.errors import ShapeError
from caimbench.modulation.style_norm import normalize

Modality = Literal["source", "target"]

StyleCode = Tensor
"""N×C shared representation ξ_f."""

PARAMETER_NAMES = (
    "conv1_weight",
    "conv1_bias",
    "conv2_weight",
    "conv2_bias",
    "fc_sigma_weight",
    "fc_sigma_bias",
    "fc_mu_weight",
    "fc_mu_bias",
)


class Gate(IntEnum):
    """Binary modality gate: open (1) for the target modality only."""

    SOURCE = 0
    TARGET = 1

    @classmethod
    def for_modality(cls, modality: Modality) -> Gate:
        if modality == "target":
            return cls.TARGET
        if modality == "source":
            return cls.SOURCE
        raise ValueError(f"unknown modality: {modality!r}")


class ModulationParams(NamedTuple):
    """Per-sample, per-channel scale σ_f and shift μ_f, both N×C."""

    sigma_f: Tensor
    mu_f: Tensor


class BlockCost(NamedTuple):
    """
    Size and multiply-add cost of one block.

    ``flops`` counts a multiply-add as two operations over the whole block.
    ``conv_flops`` is the share spent in the two 3×3 convolutions, which
    dominates ``flops`` once the spatial map is larger than a few pixels.
    """

    params: int
    flops: int
    conv_flops: int


class CaimBlock:
    """
    Trainable parameters of one CAIM block.

    Both convolutions map C→C with 3×3 kernels, stride 1 and padding 1; both
    heads map C→C.
    """

    def __init__(self, channels: int, epsilon: float = DEFAULT_EPSILON, **parameters: Tensor) -> None:
        if channels < 1:
            raise ValueError(f"channels must be positive, got {channels}")
        missing = set(PARAMETER_NAMES) - parameters.keys()
        unknown = parameters.keys() - set(PARAMETER_NAMES)
        if missing or unknown:
            raise ValueError(f"CaimBlock parameters: missing {sorted(missing)}, unknown {sorted(unknown)}")
        self.channels = channels
        self.epsilon = epsilon
        self.conv1_weight = parameters["conv1_weight"]
        self.conv1_bias = parameters["conv1_bias"]
        self.conv2_weight = parameters["conv2_weight"]
        self.conv2_bias = parameters["conv2_bias"]
        self.fc_sigma_weight = parameters["fc_sigma_weight"]
        self.fc_sigma_bias = parameters["fc_sigma_bias"]
        self.fc_mu_weight = parameters["fc_mu_weight"]
        self.fc_mu_bias = parameters["fc_mu_bias"]
        self._check_shapes()
        for tensor in self.parameters().values():
            tensor.requires_grad = True

    def _check_shapes(self) -> None:
        c = self.channels
        expected = {
            "conv1_weight": (c, c, 3, 3),
            "conv1_bias": (c,),
            "conv2_weight": (c, c, 3, 3),
            "conv2_bias": (c,),
            "fc_sigma_weight": (c, c),
            "fc_sigma_bias": (c,),
            "fc_mu_weight": (c, c),
            "fc_mu_bias": (c,),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeError(f"CaimBlock.{name} must have shape {shape}, got {actual}")

    @classmethod
    def initialize(cls, channels: int, rng: np.random.Generator, epsilon: float = DEFAULT_EPSILON) -> CaimBlock:
        """
        Uniform fan-in initialization; the head biases start at zero.

        Weights and conv biases are drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
        """
        conv_bound = 1.0 / np.sqrt(channels * 9)
        fc_bound = 1.0 / np.sqrt(channels)

        def uniform(bound: float, *shape: int) -> Tensor:
            return Tensor(rng.uniform(-bound, bound, size=shape))

        return cls(
            channels,
            epsilon,
            conv1_weight=uniform(conv_bound, channels, channels, 3, 3),
            conv1_bias=uniform(conv_bound, channels),
            conv2_weight=uniform(conv_bound, channels, channels, 3, 3),
            conv2_bias=uniform(conv_bound, channels),
            fc_sigma_weight=uniform(fc_bound, channels, channels),
            fc_sigma_bias=Tensor(np.zeros(channels)),
            fc_mu_weight=uniform(fc_bound, channels, channels),
            fc_mu_bias=Tensor(np.zeros(channels)),
        )

    @classmethod
    def zeros(cls, channels: int, epsilon: float = DEFAULT_EPSILON) -> CaimBlock:
        """All-zero block: AIM outputs zero, CAIM is the identity for both gates."""
        return cls(
            channels,
            epsilon,
            **{
                name: Tensor(np.zeros(shape))
                for name, shape in (
                    ("conv1_weight", (channels, channels, 3, 3)),
                    ("conv1_bias", (channels,)),
                    ("conv2_weight", (channels, channels, 3, 3)),
                    ("conv2_bias", (channels,)),
                    ("fc_sigma_weight", (channels, channels)),
                    ("fc_sigma_bias", (channels,)),
                    ("fc_mu_weight", (channels, channels)),
                    ("fc_mu_bias", (channels,)),
                )
            },
        )

    def parameters(self) -> dict[str, Tensor]:
        return {name: getattr(self, name) for name in PARAMETER_NAMES}

    def parameter_count(self) -> int:
        return sum(t.size for t in self.parameters().values())

    def __call__(self, f: Tensor, gate: int) -> Tensor:
        return caim_forward(self, f, gate)

    def __repr__(self) -> str:
        return f"CaimBlock(channels={self.channels}, params={self.parameter_count()})"


def _check_channels(block: CaimBlock, f: Tensor) -> None:
    if f.ndim != 4 or f.shape[1] != block.channels:
        raise ShapeError(f"CaimBlock with {block.channels} channels got feature map of shape {f.shape}")


def style_features(block: CaimBlock, f: Tensor) -> StyleCode:
    """Shared representation ξ_f from the raw (un-normalized) feature map."""
    _check_channels(block, f)
    hidden = relu(conv2d(f, block.conv1_weight, block.conv1_bias, stride=1, padding=1))
    hidden = relu(conv2d(hidden, block.conv2_weight, block.conv2_bias, stride=1, padding=1))
    return global_average_pool(hidden)


def modulation_params(block: CaimBlock, xi: StyleCode) -> ModulationParams:
    """Two independent dense heads on ξ_f. σ_f is left unconstrained."""
    if xi.ndim != 2 or xi.shape[1] != block.channels:
        raise ShapeError(f"style code must be N×{block.channels}, got shape {xi.shape}")
    return ModulationParams(
        sigma_f=dense(xi, block.fc_sigma_weight, block.fc_sigma_bias),
        mu_f=dense(xi, block.fc_mu_weight, block.fc_mu_bias),
    )


def aim(block: CaimBlock, f: Tensor) -> Tensor:
    """Adaptive instance modulation: σ_f · IN(F) + μ_f with σ_f, μ_f predicted from F."""
    _check_channels(block, f)
    n, c = f.shape[:2]
    params = modulation_params(block, style_features(block, f))
    sigma = params.sigma_f.reshape(n, c, 1, 1)
    mu = params.mu_f.reshape(n, c, 1, 1)
    return sigma * normalize(f, block.epsilon) + mu


def caim_forward(block: CaimBlock, f: Tensor, gate: int) -> Tensor:
    """
    Gated residual modulation.

    gate=1 returns aim(f) + f. gate=0 returns ``f`` itself: the AIM branch is
    never evaluated, so no gradient can reach the block parameters.
    """
    if gate not in (0, 1):
        raise ValueError(f"gate must be 0 or 1, got {gate!r}")
    _check_channels(block, f)
    if gate == Gate.SOURCE:
        return f
    return aim(block, f) + f


def block_cost(channels: int, h: int, w: int) -> BlockCost:
    """Closed-form parameter and FLOP count of a block on a channels×h×w map."""
    if h < 1 or w < 1:
        raise ValueError(f"spatial extents must be positive, got {h}×{w}")
    c = channels
    params = 2 * (9 * c * c + c) + 2 * (c * c + c)
    conv_macs = 2 * 9 * c * c * h * w
    head_macs = 2 * c * c
    modulation_macs = 2 * c * h * w
    return BlockCost(
        params=params,
        flops=2 * (conv_macs + head_macs + modulation_macs),
        conv_flops=2 * conv_macs,
    )


def count_block_cost(block: CaimBlock, h: int, w: int) -> BlockCost:
    """
    Cost of ``block`` on an h×w map as ``BlockCost(params, flops, conv_flops)``.

    ``conv_flops`` covers only the two style-branch convolutions; ``flops`` adds
    the two heads and the per-pixel modulation on top.
    """
    return block_cost(block.channels, h, w)
