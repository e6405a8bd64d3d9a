"""caimbench style modulation.

Instance normalization, AdaIN and the Conditional Adaptive Instance Modulation block.
"""

from caimbench.modulation.caim import (
    BlockCost,
    CaimBlock,
    Gate,
    Modality,
    ModulationParams,
    StyleCode,
    aim,
    block_cost,
    caim_forward,
    count_block_cost,
    modulation_params,
    style_features,
)
from caimbench.modulation.style_norm import (
    InstanceNormParams,
    adain,
    instance_norm,
    normalize,
    unconditional_forward,
)

__all__ = [
    "InstanceNormParams",
    "instance_norm",
    "normalize",
    "adain",
    "unconditional_forward",
    "CaimBlock",
    "Gate",
    "Modality",
    "ModulationParams",
    "StyleCode",
    "BlockCost",
    "style_features",
    "modulation_params",
    "aim",
    "caim_forward",
    "block_cost",
    "count_block_cost",
]
