"""Shared fixtures: small seeded backbones, networks and datasets."""

import numpy as np
import pytest

from caimbench.data import SampleSet, synthesize
from caimbench.data_models import InsertionPlan
from caimbench.network import FrozenBackbone, insert_caim

SMALL_CHANNELS = (4, 6, 8)
SMALL_EMBEDDING = 8
SMALL_RESOLUTION = 16


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_backbone():
    """Frozen 3-stage backbone on 16x16 inputs."""
    backbone = FrozenBackbone.initialize(
        np.random.default_rng(7), SMALL_CHANNELS, SMALL_EMBEDDING, SMALL_RESOLUTION
    )
    return backbone.freeze()


@pytest.fixture
def small_network(small_backbone):
    """Gated network with blocks after stages 1 and 2."""
    return insert_caim(small_backbone, InsertionPlan(positions=(1, 2)), seed=3)


@pytest.fixture
def small_dataset():
    """8 identities x 3 samples, thermal gap 0.8, 16x16, with a small pretraining pool."""
    return synthesize(
        n_identities=8,
        samples_per_identity=3,
        gap_strength=0.8,
        seed=11,
        resolution=SMALL_RESOLUTION,
        latent_dim=8,
        pretrain_identities=4,
        pretrain_samples_per_identity=3,
    )


@pytest.fixture
def train_sets(small_dataset):
    """(source, target) SampleSets covering every benchmark sample."""
    records = small_dataset.manifest.records("benchmark")
    source = [r.key for r in records if r.key.modality == "source"]
    target = [r.key for r in records if r.key.modality == "target"]
    return (
        SampleSet.from_arrays(small_dataset.images, source),
        SampleSet.from_arrays(small_dataset.images, target),
    )
