"""caimbench tensor engine.

Dense float64 tensors, reverse-mode differentiation and the primitives the
embedding network needs.
"""

from caimbench.autograd.functional import (
    ChannelStats,
    conv2d,
    conv_output_extent,
    dense,
    global_average_pool,
    instance_stats,
    l2_normalize,
    record_relu_signs,
    relu,
    softmax_cross_entropy,
)
from caimbench.autograd.tensor import Tensor, as_tensor, is_grad_enabled, no_grad

__all__ = [
    "Tensor",
    "as_tensor",
    "no_grad",
    "is_grad_enabled",
    "ChannelStats",
    "conv2d",
    "conv_output_extent",
    "dense",
    "global_average_pool",
    "instance_stats",
    "l2_normalize",
    "record_relu_signs",
    "relu",
    "softmax_cross_entropy",
]
