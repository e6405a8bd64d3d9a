"""caimbench - Conditional Adaptive Instance Modulation for heterogeneous face recognition."""

# Data models
from caimbench.data_models import (
    EvalReport,
    ExperimentConfig,
    InsertionPlan,
    NetworkCost,
    TrainConfig,
)

# Errors
from caimbench.errors import (
    CaimError,
    CheckpointError,
    ContractError,
    GradientError,
    ProtocolError,
    ShapeError,
)

# Autograd
from caimbench.autograd import Tensor, no_grad

# Modulation
from caimbench.modulation import (
    CaimBlock,
    Gate,
    InstanceNormParams,
    adain,
    aim,
    block_cost,
    caim_forward,
    count_block_cost,
    instance_norm,
    modulation_params,
    style_features,
    unconditional_forward,
)

# Network
from caimbench.network import (
    FrozenBackbone,
    HfrNetwork,
    count_network_cost,
    insert_caim,
    pretrain_backbone,
)

# Training
from caimbench.training import contrastive_loss, make_pairs, train

# Metrics
from caimbench.metrics import (
    ScoreSet,
    aggregate_folds,
    auc,
    eer,
    rank1,
    roc,
    verification_report,
    vr_at_far,
)

# Data
from caimbench.data import DatasetLoader, generate_dataset, make_protocol, synthesize

# IO
from caimbench.io import load_checkpoint, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    # Data models
    "ExperimentConfig",
    "InsertionPlan",
    "TrainConfig",
    "EvalReport",
    "NetworkCost",
    # Errors
    "CaimError",
    "ShapeError",
    "GradientError",
    "ContractError",
    "CheckpointError",
    "ProtocolError",
    # Autograd
    "Tensor",
    "no_grad",
    # Modulation
    "InstanceNormParams",
    "instance_norm",
    "adain",
    "unconditional_forward",
    "CaimBlock",
    "Gate",
    "style_features",
    "modulation_params",
    "aim",
    "caim_forward",
    "block_cost",
    "count_block_cost",
    # Network
    "FrozenBackbone",
    "HfrNetwork",
    "pretrain_backbone",
    "insert_caim",
    "count_network_cost",
    # Training
    "contrastive_loss",
    "make_pairs",
    "train",
    # Metrics
    "ScoreSet",
    "roc",
    "auc",
    "eer",
    "vr_at_far",
    "rank1",
    "verification_report",
    "aggregate_folds",
    # Data
    "synthesize",
    "generate_dataset",
    "make_protocol",
    "DatasetLoader",
    # IO
    "save_checkpoint",
    "load_checkpoint",
]
