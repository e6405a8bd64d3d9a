"""Tests for the synthetic dataset generator and loader."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from caimbench.data import (
    PRESETS,
    DatasetLoader,
    apply_transform,
    gaussian_blur,
    sample_identity_latents,
    synthesize,
    target_transform,
    write_dataset,
)
from caimbench.data.synth import block_resample
from caimbench.data_models import SampleKey
from caimbench.errors import ProtocolError


def _small(**overrides):
    params = {"n_identities": 4, "samples_per_identity": 2, "seed": 3, "resolution": 16, "latent_dim": 8}
    params.update(overrides)
    return synthesize(**params)


def test_synthesis_is_deterministic():
    first, second = _small(), _small()
    assert first.manifest == second.manifest
    for key, image in first.images.items():
        np.testing.assert_array_equal(image, second.images[key])


def test_seed_changes_images():
    first, other = _small(), _small(seed=4)
    key = SampleKey(identity=0, index=0, modality="source")
    assert not np.array_equal(first.images[key], other.images[key])


def test_samples_do_not_depend_on_dataset_size():
    """Test that shared identities render identically in a larger dataset."""
    small, large = _small(n_identities=3), _small(n_identities=5)
    for key, image in small.images.items():
        np.testing.assert_array_equal(image, large.images[key])


@pytest.mark.parametrize("preset", PRESETS)
def test_zero_gap_target_equals_source(preset):
    assert target_transform(preset, 0.0).is_identity()
    dataset = _small(gap_strength=0.0, preset=preset)
    for record in dataset.manifest.records("benchmark", "target"):
        key = record.key
        source = dataset.images[key.model_copy(update={"modality": "source"})]
        np.testing.assert_array_equal(dataset.images[key], source)


@pytest.mark.parametrize("preset,channels", [("thermal", 1), ("nir", 1), ("sketch", 1), ("lowres", 3)])
def test_target_channels(preset, channels):
    dataset = _small(gap_strength=0.8, preset=preset)
    for record in dataset.manifest.records("benchmark", "target"):
        assert dataset.images[record.key].shape == (channels, 16, 16)
        assert record.channels == channels
    for record in dataset.manifest.records("benchmark", "source"):
        assert dataset.images[record.key].shape == (3, 16, 16)


def test_gap_changes_target_images():
    mild, strong = _small(gap_strength=0.2), _small(gap_strength=1.0)
    key = SampleKey(identity=1, index=0, modality="target")
    assert not np.allclose(mild.images[key], strong.images[key])


def test_source_images_lie_in_unit_range(small_dataset):
    for record in small_dataset.manifest.records("benchmark", "source"):
        image = small_dataset.images[record.key]
        assert image.dtype == np.float32
        assert np.all(np.abs(image) <= 1.0)


def test_identity_latents_are_separated():
    latents = sample_identity_latents(30, 8, seed=2)
    z = np.stack([latent.z for latent in latents])
    np.testing.assert_allclose(np.linalg.norm(z, axis=1), 1.0, rtol=1e-12)
    cosines = z @ z.T - 2.0 * np.eye(30)
    assert cosines.max() < 0.95
    assert [latent.id for latent in latents] == list(range(30))


def test_pretraining_pool(small_dataset):
    pool = small_dataset.manifest.records("pretrain")
    assert len(pool) == 4 * 3
    assert all(r.key.modality == "source" and r.key.pool == "pretrain" for r in pool)
    assert all(r.path.startswith("images/pretrain/") for r in pool)
    bench = small_dataset.images[SampleKey(identity=0, index=0, modality="source")]
    pretrain = small_dataset.images[SampleKey(identity=0, index=0, modality="source", pool="pretrain")]
    assert not np.array_equal(bench, pretrain)


def test_write_and_load_round_trip(small_dataset):
    with tempfile.TemporaryDirectory() as tmpdir:
        write_dataset(small_dataset, tmpdir)
        loader = DatasetLoader(tmpdir)
        assert loader.manifest == small_dataset.manifest

        targets = loader.load_pool("benchmark", "target")
        assert len(targets) == 8 * 3
        for image, key in zip(targets.images, targets.keys, strict=True):
            np.testing.assert_array_equal(image, small_dataset.images[key].astype(np.float64))
        np.testing.assert_array_equal(targets.identities, [k.identity for k in targets.keys])

        pool = loader.load_pool("pretrain")
        assert pool.images.shape == (12, 3, 16, 16)


def test_loader_errors(small_dataset):
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(FileNotFoundError):
            DatasetLoader(tmpdir)
        write_dataset(small_dataset, tmpdir)
        loader = DatasetLoader(tmpdir)
        with pytest.raises(ProtocolError):
            loader.load([SampleKey(identity=99, index=0, modality="source")])
        record = small_dataset.manifest.records("benchmark", "source")[0]
        (Path(tmpdir) / record.path).write_bytes(b"\x00" * 8)
        with pytest.raises(ValueError, match="expected"):
            loader.read(record)


def test_invalid_synthesis_parameters():
    with pytest.raises(ValueError):
        _small(gap_strength=1.5)
    with pytest.raises(ValueError, match="preset"):
        _small(preset="infrared")
    with pytest.raises(ValueError, match="multiple"):
        _small(resolution=12)
    with pytest.raises(ValueError):
        _small(n_identities=1)


def test_gaussian_blur_keeps_constant_images():
    image = np.full((1, 8, 8), 0.25)
    np.testing.assert_allclose(gaussian_blur(image, 1.5), image, rtol=1e-12)
    np.testing.assert_array_equal(gaussian_blur(image, 0.0), image)


def test_block_resample_averages_blocks():
    image = np.arange(16, dtype=np.float64).reshape(1, 4, 4)
    out = block_resample(image, 2)
    assert out[0, 0, 0] == out[0, 1, 1] == np.mean([0, 1, 4, 5])
    with pytest.raises(ValueError):
        block_resample(np.zeros((1, 6, 6)), 4)


def test_apply_transform_noise_is_seeded():
    image = np.zeros((3, 8, 8))
    transform = target_transform("thermal", 1.0)
    a = apply_transform(image, transform, np.random.default_rng(0))
    b = apply_transform(image, transform, np.random.default_rng(0))
    np.testing.assert_array_equal(a, b)
    assert a.shape == (1, 8, 8)
