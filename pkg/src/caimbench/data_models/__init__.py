"""caimbench data models."""

from caimbench.data_models.dataset import (
    DatasetManifest,
    ModalityName,
    ModalityTransform,
    SampleKey,
    SampleRecord,
)
from caimbench.data_models.experiment import (
    BackboneParams,
    DatasetParams,
    EvalParams,
    ExperimentConfig,
    PretrainConfig,
    ProtocolParams,
    TrainConfig,
    Variant,
)
from caimbench.data_models.plan import InsertionPlan
from caimbench.data_models.protocol import ProtocolSplit
from caimbench.data_models.result import (
    AblationReport,
    AblationRow,
    CostReport,
    CostRow,
    EpochLoss,
    EvalReport,
    FoldMetrics,
    FoldReport,
    MetricSummary,
    NetworkCost,
    PretrainReport,
    VrPoint,
    vr_key,
)

__all__ = [
    "InsertionPlan",
    "DatasetParams",
    "ProtocolParams",
    "BackboneParams",
    "PretrainConfig",
    "TrainConfig",
    "EvalParams",
    "ExperimentConfig",
    "Variant",
    "ModalityName",
    "ModalityTransform",
    "SampleKey",
    "SampleRecord",
    "DatasetManifest",
    "ProtocolSplit",
    "EpochLoss",
    "VrPoint",
    "FoldMetrics",
    "MetricSummary",
    "FoldReport",
    "EvalReport",
    "NetworkCost",
    "CostRow",
    "CostReport",
    "AblationReport",
    "PretrainReport",
    "AblationRow",
    "vr_key",
]
