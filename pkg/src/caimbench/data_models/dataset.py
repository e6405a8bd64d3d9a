"""Dataset manifest data models for caimbench."""

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

ModalityName = Literal["source", "target"]
Pool = Literal["benchmark", "pretrain"]


class ModalityTransform(BaseModel):
    """
    Image-space transform that turns a rendered face into one modality.

    The source transform is the identity: every field sits at its neutral value.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ModalityName = Field(description="Modality this transform produces")
    preset: str = Field(default="identity", description="Preset family the parameters came from")
    contrast_gain: float = Field(default=1.0, gt=0, description="Multiplier on deviation from the image mean")
    gamma: float = Field(default=1.0, gt=0, description="Exponent applied in [0, 1] intensity space")
    blur_sigma: float = Field(default=0.0, ge=0, description="Gaussian blur width in pixels")
    noise_amplitude: float = Field(default=0.0, ge=0, description="Std of additive Gaussian noise")
    channel_collapse: bool = Field(default=False, description="Store as single-channel luminance")
    high_pass: float = Field(default=0.0, ge=0, le=1, description="Fraction of low-pass content removed")
    downsample: int = Field(default=1, ge=1, description="Block-average factor before upsampling back")

    def is_identity(self) -> bool:
        return (
            self.contrast_gain == 1.0
            and self.gamma == 1.0
            and self.blur_sigma == 0.0
            and self.noise_amplitude == 0.0
            and not self.channel_collapse
            and self.high_pass == 0.0
            and self.downsample == 1
        )

    @classmethod
    def identity(cls, kind: ModalityName = "source") -> "ModalityTransform":
        return cls(kind=kind)


class SampleKey(BaseModel):
    """Address of one stored image."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    identity: int = Field(ge=0)
    index: int = Field(ge=0, description="Sample index within the identity")
    modality: ModalityName
    pool: Pool = "benchmark"

    def __str__(self) -> str:
        return f"{self.pool}/{self.modality}/{self.identity:04d}_{self.index:02d}"


class SampleRecord(BaseModel):
    """One stored image: its key, its file and its channel count."""

    model_config = ConfigDict(extra="forbid")

    key: SampleKey
    path: str = Field(description="File path relative to the dataset directory")
    channels: int = Field(ge=1, le=3)


class DatasetManifest(BaseModel):
    """
    Everything needed to reload (or regenerate) a synthetic dataset.

    Written as ``manifest.json`` next to the raw image files.
    """

    model_config = ConfigDict(extra="forbid")

    format_version: int = 1
    seed: int
    n_identities: int = Field(ge=2)
    samples_per_identity: int = Field(ge=1)
    gap_strength: float = Field(ge=0, le=1)
    preset: str
    resolution: int = Field(ge=1)
    latent_dim: int = Field(ge=2)
    intra_class_std: float = Field(ge=0)
    pretrain_identities: int = Field(ge=0)
    pretrain_samples_per_identity: int = Field(ge=0)
    source_transform: ModalityTransform
    target_transform: ModalityTransform
    samples: list[SampleRecord] = Field(default_factory=list)

    def records(self, pool: Pool = "benchmark", modality: ModalityName | None = None) -> list[SampleRecord]:
        """Records of one pool, optionally filtered by modality, in stored order."""
        return [
            r
            for r in self.samples
            if r.key.pool == pool and (modality is None or r.key.modality == modality)
        ]

    def summary(self) -> str:
        bench = len(self.records("benchmark"))
        pool = len(self.records("pretrain"))
        return (
            f"{self.n_identities} identities x {self.samples_per_identity} samples x 2 modalities "
            f"({bench} images), preset={self.preset}, gap={self.gap_strength:g}, "
            f"pretraining pool {self.pretrain_identities} x {self.pretrain_samples_per_identity} ({pool} images)"
        )
