"""Experiment configuration data models for caimbench."""

import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from caimbench.config import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_CHANNEL_PLAN,
    DEFAULT_EMBEDDING_DIM,
    DEFAULT_EPOCHS,
    DEFAULT_FAR_TARGETS,
    DEFAULT_FOLDS,
    DEFAULT_GAP_STRENGTH,
    DEFAULT_GENUINE_FRACTION,
    DEFAULT_IDENTITIES,
    DEFAULT_LATENT_DIM,
    DEFAULT_LEARNING_RATE,
    DEFAULT_MARGIN,
    DEFAULT_OUTPUT_DIR,
    DEFAULT_PRETRAIN_BATCH_SIZE,
    DEFAULT_PRETRAIN_EPOCHS,
    DEFAULT_PRETRAIN_IDENTITIES,
    DEFAULT_PRETRAIN_LEARNING_RATE,
    DEFAULT_PRETRAIN_SAMPLES,
    DEFAULT_RESOLUTION,
    DEFAULT_SAMPLES_PER_IDENTITY,
    DEFAULT_TRAIN_FRACTION,
)
from caimbench.data_models.plan import InsertionPlan
from caimbench.rng import derive_seed

Variant = Literal["caim", "aim", "in"]
"""caim: gated residual block; aim / in: unconditional ablation transforms."""

TargetPreset = Literal["thermal", "nir", "sketch", "lowres"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetParams(_Section):
    """Synthetic paired-modality dataset parameters."""

    n_identities: int = Field(default=DEFAULT_IDENTITIES, ge=2, description="Benchmark identities")
    samples_per_identity: int = Field(
        default=DEFAULT_SAMPLES_PER_IDENTITY, ge=1, description="Samples per identity per modality"
    )
    gap_strength: float = Field(default=DEFAULT_GAP_STRENGTH, ge=0.0, le=1.0)
    preset: TargetPreset = Field(default="thermal", description="Target modality family")
    resolution: int = Field(default=DEFAULT_RESOLUTION, ge=8)
    latent_dim: int = Field(default=DEFAULT_LATENT_DIM, ge=2)
    intra_class_std: float = Field(default=0.1, ge=0.0, description="Latent perturbation per sample")
    pretrain_identities: int = Field(default=DEFAULT_PRETRAIN_IDENTITIES, ge=2)
    pretrain_samples_per_identity: int = Field(default=DEFAULT_PRETRAIN_SAMPLES, ge=2)
    seed: int | None = Field(default=None, description="Explicit seed (default: derived)")


class ProtocolParams(_Section):
    """Disjoint-identity fold parameters."""

    n_folds: int = Field(default=DEFAULT_FOLDS, ge=1)
    train_fraction: float = Field(default=DEFAULT_TRAIN_FRACTION, gt=0.0, lt=1.0)
    gallery_templates: Literal["all", "first"] = Field(
        default="all", description="Gallery templates per identity: every source sample or only the first"
    )
    seed: int | None = None


class BackboneParams(_Section):
    """Toy embedding backbone geometry."""

    channels: tuple[int, ...] = Field(default=DEFAULT_CHANNEL_PLAN, description="Output channels per stage")
    embedding_dim: int = Field(default=DEFAULT_EMBEDDING_DIM, ge=1)

    @field_validator("channels")
    @classmethod
    def validate_channels(cls, v: tuple[int, ...]) -> tuple[int, ...]:
        if not v or any(c < 1 for c in v):
            raise ValueError(f"channel plan must be non-empty and positive, got {list(v)}")
        return v


class PretrainConfig(_Section):
    """Softmax pretraining of the source-modality backbone."""

    epochs: int = Field(default=DEFAULT_PRETRAIN_EPOCHS, ge=0)
    learning_rate: float = Field(default=DEFAULT_PRETRAIN_LEARNING_RATE, gt=0.0)
    batch_size: int = Field(default=DEFAULT_PRETRAIN_BATCH_SIZE, ge=2)
    seed: int | None = None


class TrainConfig(_Section):
    """Contrastive CAIM training recipe."""

    margin: float = Field(default=DEFAULT_MARGIN, gt=0.0)
    learning_rate: float = Field(default=DEFAULT_LEARNING_RATE, gt=0.0)
    epochs: int = Field(default=DEFAULT_EPOCHS, ge=0)
    batch_size: int = Field(default=DEFAULT_BATCH_SIZE, ge=2)
    distance: Literal["euclidean", "cosine"] = "euclidean"
    seed: int | None = None
    genuine_fraction: float = Field(default=DEFAULT_GENUINE_FRACTION, gt=0.0, lt=1.0)
    epoch_passes: int = Field(default=1, ge=1, description="Passes over the training target samples per epoch")
    checkpoint_every: int = Field(default=0, ge=0, description="Epoch interval for intermediate checkpoints (0: end only)")


class EvalParams(_Section):
    """Evaluation options."""

    far_targets: tuple[float, ...] = Field(default=DEFAULT_FAR_TARGETS, description="FAR targets in percent")
    probe_modality: Literal["target", "source"] = "target"
    force_source_gate: bool = Field(default=False, description="Embed probes with the gate closed")

    @field_validator("far_targets")
    @classmethod
    def validate_far_targets(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(not 0.0 < t <= 100.0 for t in v):
            raise ValueError(f"FAR targets are percentages in (0, 100], got {list(v)}")
        return v


class ExperimentConfig(_Section):
    """
    Complete experiment description.

    Serializes to a single JSON document; unknown keys are rejected at every level.
    """

    seed: int = Field(default=0, description="Master seed; component seeds derive from it")
    output_dir: str = Field(default=DEFAULT_OUTPUT_DIR)
    dataset: DatasetParams = Field(default_factory=DatasetParams)
    protocol: ProtocolParams = Field(default_factory=ProtocolParams)
    backbone: BackboneParams = Field(default_factory=BackboneParams)
    pretrain: PretrainConfig = Field(default_factory=PretrainConfig)
    plan: InsertionPlan = Field(default_factory=InsertionPlan)
    variant: Variant = "caim"
    train: TrainConfig = Field(default_factory=TrainConfig)
    evaluation: EvalParams = Field(default_factory=EvalParams)

    @model_validator(mode="after")
    def validate_plan_fits_backbone(self) -> "ExperimentConfig":
        stages = len(self.backbone.channels)
        if self.plan.positions and self.plan.positions[-1] > stages:
            raise ValueError(
                f"insertion position {self.plan.positions[-1]} exceeds the {stages}-stage backbone"
            )
        return self

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        """
        Load and validate a config JSON file.

        Raises:
            FileNotFoundError: If the file doesn't exist
            pydantic.ValidationError: If the content is invalid
        """
        config_path = Path(path)
        if not config_path.exists():
            raise FileNotFoundError(f"Config file not found: {config_path}")
        with open(config_path) as f:
            return cls.model_validate(json.load(f))

    def save(self, path: str | Path) -> Path:
        config_path = Path(path)
        config_path.parent.mkdir(parents=True, exist_ok=True)
        config_path.write_text(self.model_dump_json(indent=2) + "\n")
        return config_path

    def with_overrides(self, seed: int | None = None, output_dir: str | None = None) -> "ExperimentConfig":
        """Copy with CLI flag values applied; flags win over file values."""
        update: dict[str, object] = {}
        if seed is not None:
            update["seed"] = seed
        if output_dir is not None:
            update["output_dir"] = output_dir
        return self.model_validate({**self.model_dump(), **update})

    # Effective seeds: an explicit section seed wins, otherwise derive from the master seed

    def dataset_seed(self) -> int:
        return self.dataset.seed if self.dataset.seed is not None else derive_seed(self.seed, "dataset")

    def protocol_seed(self) -> int:
        return self.protocol.seed if self.protocol.seed is not None else derive_seed(self.seed, "protocol")

    def pretrain_seed(self) -> int:
        return self.pretrain.seed if self.pretrain.seed is not None else derive_seed(self.seed, "pretrain")

    def train_config(self) -> TrainConfig:
        """Training recipe with its effective seed filled in."""
        if self.train.seed is not None:
            return self.train
        return self.train.model_copy(update={"seed": derive_seed(self.seed, "train")})
