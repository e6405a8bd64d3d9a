"""Evaluation protocol data models for caimbench."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from caimbench.data_models.dataset import SampleKey


class ProtocolSplit(BaseModel):
    """
    One fold of a disjoint-identity protocol.

    Training uses both modalities of the train identities. Evaluation enrolls
    source-modality samples of the eval identities as the gallery and queries
    with their target-modality samples.
    """

    model_config = ConfigDict(extra="forbid")

    fold: int = Field(ge=0)
    seed: int
    train_identities: list[int]
    eval_identities: list[int]
    gallery_templates: Literal["all", "first"] = "all"
    train: list[SampleKey] = Field(default_factory=list, description="Training samples, both modalities")
    gallery: list[SampleKey] = Field(default_factory=list, description="Enrolled source-modality samples")
    probes: list[SampleKey] = Field(default_factory=list, description="Target-modality queries")

    @model_validator(mode="after")
    def validate_disjoint(self) -> "ProtocolSplit":
        overlap = set(self.train_identities) & set(self.eval_identities)
        if overlap:
            raise ValueError(f"fold {self.fold}: identities {sorted(overlap)} are in both train and eval")
        return self

    def __str__(self) -> str:
        return (
            f"ProtocolSplit(fold={self.fold}, train={len(self.train_identities)}, "
            f"eval={len(self.eval_identities)}, gallery={len(self.gallery)}, probes={len(self.probes)})"
        )
