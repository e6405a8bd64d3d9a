"""Result data models for training, evaluation, ablation and cost reports."""

from pydantic import BaseModel, Field


def vr_key(far_target: float) -> str:
    """Report column name for a FAR target given in percent, e.g. ``VR@FAR=0.1%``."""
    return f"VR@FAR={far_target:g}%"


class EpochLoss(BaseModel):
    """Mean training loss of one epoch."""

    epoch: int = Field(ge=1)
    mean_loss: float = Field(ge=0)


class VrPoint(BaseModel):
    """Verification rate at one FAR operating point, all values in percent."""

    far_target: float = Field(gt=0, le=100, description="Requested FAR")
    tar: float = Field(ge=0, le=100, description="True acceptance rate at the chosen threshold")
    realized_far: float = Field(ge=0, le=100, description="FAR actually achieved at that threshold")
    threshold: float | None = Field(description="Chosen similarity threshold; None when every pair is rejected")
    resolved: bool = Field(
        default=True,
        description="False when the impostor count is too small to resolve the target",
    )


class FoldMetrics(BaseModel):
    """
    Verification and identification metrics of one fold.

    All rates are percentages.
    """

    fold: int = Field(ge=0)
    auc: float = Field(ge=0, le=100)
    eer: float = Field(ge=0, le=100)
    rank1: float = Field(ge=0, le=100)
    vr: list[VrPoint] = Field(default_factory=list)
    n_genuine: int = Field(ge=0)
    n_impostor: int = Field(ge=0)

    def as_record(self) -> dict[str, float]:
        """Flat metric record in report column order."""
        record = {"AUC": self.auc, "EER": self.eer, "Rank-1": self.rank1}
        for point in self.vr:
            record[vr_key(point.far_target)] = point.tar
        return record

    def __str__(self) -> str:
        vr = ", ".join(f"{vr_key(p.far_target)} {p.tar:.2f}" for p in self.vr)
        return (
            f"fold {self.fold}: AUC {self.auc:.2f}, EER {self.eer:.2f}, "
            f"Rank-1 {self.rank1:.2f}" + (f", {vr}" if vr else "")
        )


class MetricSummary(BaseModel):
    """Mean and sample standard deviation of one metric across folds."""

    mean: float
    std: float = Field(ge=0)
    values: list[float]

    def __str__(self) -> str:
        return f"{self.mean:.2f} ({self.std:.2f})"


class FoldReport(BaseModel):
    """Cross-fold aggregate, keyed by metric name in report column order."""

    n_folds: int = Field(ge=1)
    metrics: dict[str, MetricSummary]

    def columns(self) -> list[str]:
        return list(self.metrics)


class EvalReport(BaseModel):
    """Output of one evaluation run."""

    name: str
    variant: str
    plan: str = Field(description="Insertion plan label")
    probe_modality: str = "target"
    force_source_gate: bool = False
    folds: list[FoldMetrics] = Field(default_factory=list)
    summary: FoldReport
    source_identity: bool | None = Field(
        default=None,
        description="Whether source-modality embeddings matched the bare backbone exactly",
    )

    def __str__(self) -> str:
        cells = ", ".join(f"{k} {v}" for k, v in self.summary.metrics.items())
        return f"EvalReport({self.name}: {cells})"


class NetworkCost(BaseModel):
    """Parameter and FLOP accounting of a backbone with inserted blocks."""

    backbone_params: int = Field(ge=0)
    backbone_flops: int = Field(ge=0)
    caim_params: int = Field(ge=0)
    caim_flops: int = Field(ge=0)

    @property
    def total_params(self) -> int:
        return self.backbone_params + self.caim_params

    @property
    def total_flops(self) -> int:
        return self.backbone_flops + self.caim_flops

    @property
    def params_overhead_percent(self) -> float:
        return 100.0 * self.caim_params / self.backbone_params if self.backbone_params else 0.0

    @property
    def flops_overhead_percent(self) -> float:
        return 100.0 * self.caim_flops / self.backbone_flops if self.backbone_flops else 0.0


class CostRow(BaseModel):
    """One line of the cost table."""

    label: str
    cost: NetworkCost

    def as_record(self) -> dict[str, float | int | str]:
        return {
            "Model": self.label,
            "Params": self.cost.total_params,
            "FLOPs": self.cost.total_flops,
            "Params overhead %": self.cost.params_overhead_percent,
            "FLOPs overhead %": self.cost.flops_overhead_percent,
        }


class AblationRow(BaseModel):
    """One configuration of the ablation sweep."""

    name: str
    variant: str
    plan: str
    summary: FoldReport
    source_identity: bool = Field(description="Source path matched the bare backbone exactly")

    def as_record(self) -> dict[str, float | str]:
        record: dict[str, float | str] = {"Row": self.name, "Variant": self.variant, "Plan": self.plan}
        for key, value in self.summary.metrics.items():
            record[key] = value.mean
        record["Source identity"] = "yes" if self.source_identity else "VIOLATED"
        return record


class PretrainReport(BaseModel):
    """Summary of backbone pretraining, written as ``backbone/pretrain.json``."""

    n_identities: int = Field(ge=2)
    n_images: int = Field(ge=0, description="Images used for the classifier")
    losses: list[EpochLoss] = Field(default_factory=list)
    holdout_rank1: float | None = Field(
        default=None,
        ge=0,
        le=100,
        description="Rank-1 of each identity's held-out last sample against the others",
    )
    fingerprint: str = Field(description="SHA-256 of the frozen backbone parameters")


class CostReport(BaseModel):
    rows: list[CostRow] = Field(default_factory=list)


class AblationReport(BaseModel):
    """Every ablation row, all trained from the same backbone and seed."""

    seed: int
    rows: list[AblationRow] = Field(default_factory=list)
