"""Seeded synthetic two-modality face datasets.

Each identity is a unit latent vector. A sample renders the latent plus a small
perturbation through a fixed random decoder into a 3-channel image; the
target-modality image of a sample is the source image pushed through a
modality transform. Every random draw comes from a counter-based stream keyed
by (seed, stream, identity, sample, ...), so results never depend on the order
in which samples are produced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from loguru import logger

from caimbench.config import (
    DEFAULT_GAP_STRENGTH,
    DEFAULT_LATENT_DIM,
    DEFAULT_RESOLUTION,
)
from caimbench.data_models import (
    DatasetManifest,
    DatasetParams,
    ModalityTransform,
    SampleKey,
    SampleRecord,
)
from caimbench.rng import counter_rng

MANIFEST_FILE = "manifest.json"
IMAGES_DIR = "images"
IMAGE_SUFFIX = ".f32"

COARSE_EXTENT = 8
MAX_LATENT_COSINE = 0.95
MAX_REJECTIONS = 10_000
LUMINANCE = np.array([0.299, 0.587, 0.114])

# Stream counters under the dataset seed
LATENT_STREAM = 1
DECODER_STREAM = 2
PERTURB_STREAM = 3
NOISE_STREAM = 4

PRESETS = ("thermal", "nir", "sketch", "lowres")
_POOL_CODE = {"benchmark": 0, "pretrain": 1}
_MODALITY_CODE = {"source": 0, "target": 1}


@dataclass(frozen=True)
class IdentityLatent:
    id: int
    z: np.ndarray


def sample_identity_latents(n: int, dim: int, seed: int) -> list[IdentityLatent]:
    """
    Unit latents whose pairwise cosine stays below 0.95.

    Raises:
        ValueError: If the rejection budget runs out
    """
    rng = counter_rng(seed, LATENT_STREAM)
    accepted: list[np.ndarray] = []
    rejections = 0
    while len(accepted) < n:
        z = rng.normal(size=dim)
        z /= np.linalg.norm(z)
        if accepted and float(np.max(np.stack(accepted) @ z)) >= MAX_LATENT_COSINE:
            rejections += 1
            if rejections > MAX_REJECTIONS:
                raise ValueError(f"could not place {n} latents of dimension {dim} below cosine {MAX_LATENT_COSINE}")
            continue
        accepted.append(z)
    return [IdentityLatent(id=i, z=z) for i, z in enumerate(accepted)]


# ----------------------------------------------------------------------
# Image-space operations on C×H×W arrays
# ----------------------------------------------------------------------


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur over the last two axes with reflected borders."""
    if sigma <= 0.0:
        return image.copy()
    extent = image.shape[-1]
    radius = min(int(np.ceil(3.0 * sigma)), extent - 1)
    offsets = np.arange(-radius, radius + 1)
    kernel = np.exp(-(offsets**2) / (2.0 * sigma**2))
    kernel /= kernel.sum()

    padded = np.pad(image, ((0, 0), (radius, radius), (0, 0)), mode="reflect")
    rows = sum(k * padded[:, i : i + image.shape[1], :] for i, k in enumerate(kernel))
    padded = np.pad(rows, ((0, 0), (0, 0), (radius, radius)), mode="reflect")
    return sum(k * padded[:, :, i : i + image.shape[2]] for i, k in enumerate(kernel))


def block_resample(image: np.ndarray, factor: int) -> np.ndarray:
    """Average over factor×factor blocks, then repeat back to the original size."""
    if factor <= 1:
        return image.copy()
    c, h, w = image.shape
    if h % factor or w % factor:
        raise ValueError(f"downsample factor {factor} does not divide {h}×{w}")
    coarse = image.reshape(c, h // factor, factor, w // factor, factor).mean(axis=(2, 4))
    return np.repeat(np.repeat(coarse, factor, axis=1), factor, axis=2)


@dataclass(frozen=True)
class Decoder:
    """Fixed random linear map from latents to coarse images, upsampled and squashed."""

    basis: np.ndarray
    resolution: int

    @classmethod
    def create(cls, latent_dim: int, resolution: int, seed: int) -> Decoder:
        if resolution % COARSE_EXTENT:
            raise ValueError(f"resolution must be a multiple of {COARSE_EXTENT}, got {resolution}")
        rng = counter_rng(seed, DECODER_STREAM)
        basis = rng.normal(size=(latent_dim, 3, COARSE_EXTENT, COARSE_EXTENT))
        return cls(basis=basis, resolution=resolution)

    def render(self, z: np.ndarray) -> np.ndarray:
        coarse = np.tensordot(z, self.basis, axes=1)
        factor = self.resolution // COARSE_EXTENT
        image = np.repeat(np.repeat(coarse, factor, axis=1), factor, axis=2)
        return np.tanh(gaussian_blur(image, factor / 2.0))


# ----------------------------------------------------------------------
# Modality transforms
# ----------------------------------------------------------------------


def _lerp(a: float, b: float, t: float) -> float:
    return a + (b - a) * t


def target_transform(preset: str, gap_strength: float) -> ModalityTransform:
    """
    Target-modality transform of a preset family at a given gap strength.

    Every preset is the identity at gap 0.

    Raises:
        ValueError: On an unknown preset or a gap outside [0, 1]
    """
    g = gap_strength
    if not 0.0 <= g <= 1.0:
        raise ValueError(f"gap_strength must be in [0, 1], got {g}")
    collapse = g > 0.0
    if preset == "thermal":
        return ModalityTransform(
            kind="target",
            preset=preset,
            channel_collapse=collapse,
            gamma=_lerp(1.0, 0.6, g),
            contrast_gain=_lerp(1.0, 1.5, g),
            blur_sigma=1.5 * g,
            noise_amplitude=0.05 * g,
        )
    if preset == "nir":
        return ModalityTransform(
            kind="target",
            preset=preset,
            channel_collapse=collapse,
            gamma=_lerp(1.0, 0.8, g),
            contrast_gain=_lerp(1.0, 1.2, g),
            blur_sigma=0.5 * g,
            noise_amplitude=0.03 * g,
        )
    if preset == "sketch":
        return ModalityTransform(
            kind="target",
            preset=preset,
            channel_collapse=collapse,
            high_pass=0.9 * g,
            contrast_gain=_lerp(1.0, 2.0, g),
            noise_amplitude=0.02 * g,
        )
    if preset == "lowres":
        return ModalityTransform(
            kind="target",
            preset=preset,
            downsample=2 ** round(2 * g),
            blur_sigma=0.5 * g,
            noise_amplitude=0.02 * g,
        )
    raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")


def apply_transform(image: np.ndarray, transform: ModalityTransform, rng: np.random.Generator) -> np.ndarray:
    """
    Apply a modality transform to a 3×H×W image in [-1, 1].

    Order: luminance collapse, gamma, contrast, high-pass, down/up-sampling,
    blur, noise. Returns 1×H×W when the channels collapse.
    """
    x = image.copy()
    if transform.channel_collapse:
        x = np.tensordot(LUMINANCE, x, axes=1)[np.newaxis]
    if transform.gamma != 1.0:
        x = 2.0 * ((x + 1.0) / 2.0).clip(0.0, 1.0) ** transform.gamma - 1.0
    if transform.contrast_gain != 1.0:
        mean = x.mean(axis=(1, 2), keepdims=True)
        x = (mean + transform.contrast_gain * (x - mean)).clip(-1.0, 1.0)
    if transform.high_pass > 0.0:
        x = x - transform.high_pass * gaussian_blur(x, 2.0)
    if transform.downsample > 1:
        x = block_resample(x, transform.downsample)
    if transform.blur_sigma > 0.0:
        x = gaussian_blur(x, transform.blur_sigma)
    if transform.noise_amplitude > 0.0:
        x = x + rng.normal(0.0, transform.noise_amplitude, size=x.shape)
    return x


# ----------------------------------------------------------------------
# Dataset synthesis
# ----------------------------------------------------------------------


@dataclass
class SyntheticDataset:
    """A manifest and its images, keyed like the manifest records."""

    manifest: DatasetManifest
    images: dict[SampleKey, np.ndarray] = field(default_factory=dict)


def _image_path(key: SampleKey) -> str:
    folder = "pretrain" if key.pool == "pretrain" else key.modality
    return f"{IMAGES_DIR}/{folder}/{key.identity:04d}_{key.index:02d}{IMAGE_SUFFIX}"


def synthesize(
    n_identities: int,
    samples_per_identity: int,
    gap_strength: float = DEFAULT_GAP_STRENGTH,
    seed: int = 0,
    preset: str = "thermal",
    resolution: int = DEFAULT_RESOLUTION,
    latent_dim: int = DEFAULT_LATENT_DIM,
    intra_class_std: float = 0.1,
    pretrain_identities: int = 0,
    pretrain_samples_per_identity: int = 0,
) -> SyntheticDataset:
    """
    Render a paired benchmark and an optional source-only pretraining pool in memory.

    Benchmark identities use latents 0..n-1; the pretraining pool uses the
    following latents, so the two never share an identity. Images are rounded
    to float32, the storage precision.

    Raises:
        ValueError: On invalid sizes, gap or preset
    """
    if n_identities < 2:
        raise ValueError(f"n_identities must be at least 2, got {n_identities}")
    if samples_per_identity < 1:
        raise ValueError(f"samples_per_identity must be positive, got {samples_per_identity}")
    if pretrain_identities < 0 or pretrain_samples_per_identity < 0:
        raise ValueError("pretraining pool sizes must be non-negative")
    transform = target_transform(preset, gap_strength)
    source_transform = ModalityTransform.identity("source")

    latents = sample_identity_latents(n_identities + pretrain_identities, latent_dim, seed)
    decoder = Decoder.create(latent_dim, resolution, seed)

    def render(pool: str, identity: int, latent: IdentityLatent, index: int) -> np.ndarray:
        rng = counter_rng(seed, PERTURB_STREAM, _POOL_CODE[pool], identity, index)
        return decoder.render(latent.z + rng.normal(0.0, intra_class_std, size=latent_dim))

    manifest = DatasetManifest(
        seed=seed,
        n_identities=n_identities,
        samples_per_identity=samples_per_identity,
        gap_strength=gap_strength,
        preset=preset,
        resolution=resolution,
        latent_dim=latent_dim,
        intra_class_std=intra_class_std,
        pretrain_identities=pretrain_identities,
        pretrain_samples_per_identity=pretrain_samples_per_identity,
        source_transform=source_transform,
        target_transform=transform,
    )
    dataset = SyntheticDataset(manifest=manifest)

    def store(key: SampleKey, image: np.ndarray) -> None:
        image = image.astype(np.float32)
        dataset.images[key] = image
        manifest.samples.append(SampleRecord(key=key, path=_image_path(key), channels=image.shape[0]))

    for identity in range(n_identities):
        for index in range(samples_per_identity):
            source = render("benchmark", identity, latents[identity], index)
            store(SampleKey(identity=identity, index=index, modality="source"), source)
            noise_rng = counter_rng(seed, NOISE_STREAM, identity, index, _MODALITY_CODE["target"])
            target = apply_transform(source, transform, noise_rng)
            store(SampleKey(identity=identity, index=index, modality="target"), target)

    for identity in range(pretrain_identities):
        latent = latents[n_identities + identity]
        for index in range(pretrain_samples_per_identity):
            key = SampleKey(identity=identity, index=index, modality="source", pool="pretrain")
            store(key, render("pretrain", identity, latent, index))

    logger.info(f"Synthesized {manifest.summary()}")
    return dataset


def write_dataset(dataset: SyntheticDataset, directory: str | Path) -> Path:
    """Write raw little-endian float32 images and ``manifest.json``."""
    root = Path(directory)
    for record in dataset.manifest.samples:
        path = root / record.path
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(np.ascontiguousarray(dataset.images[record.key], dtype="<f4").tobytes())
    manifest_path = root / MANIFEST_FILE
    manifest_path.write_text(json.dumps(dataset.manifest.model_dump(mode="json"), indent=2) + "\n")
    logger.info(f"Wrote {len(dataset.manifest.samples)} images to {root}")
    return manifest_path


def generate_dataset(
    params: DatasetParams,
    seed: int,
    directory: str | Path | None = None,
) -> SyntheticDataset:
    """Synthesize a dataset from config parameters, writing it when a directory is given."""
    dataset = synthesize(
        n_identities=params.n_identities,
        samples_per_identity=params.samples_per_identity,
        gap_strength=params.gap_strength,
        seed=seed,
        preset=params.preset,
        resolution=params.resolution,
        latent_dim=params.latent_dim,
        intra_class_std=params.intra_class_std,
        pretrain_identities=params.pretrain_identities,
        pretrain_samples_per_identity=params.pretrain_samples_per_identity,
    )
    if directory is not None:
        write_dataset(dataset, directory)
    return dataset