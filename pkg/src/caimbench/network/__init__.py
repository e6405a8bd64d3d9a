"""caimbench embedding networks.

The frozen toy backbone, its pretraining, and the network that inserts
modulation blocks between its stages.
"""

from caimbench.network.backbone import (
    FrozenBackbone,
    PretrainResult,
    embed_in_batches,
    prepare_images,
    pretrain_backbone,
)
from caimbench.network.hfr import (
    VARIANTS,
    HfrNetwork,
    count_network_cost,
    insert_caim,
    source_identity_check,
)

__all__ = [
    "FrozenBackbone",
    "PretrainResult",
    "pretrain_backbone",
    "prepare_images",
    "embed_in_batches",
    "HfrNetwork",
    "insert_caim",
    "count_network_cost",
    "source_identity_check",
    "VARIANTS",
]
