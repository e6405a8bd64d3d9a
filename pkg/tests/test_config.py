"""Validation of experiment configs, insertion plans and derived seeds.

Every JSON file under configs/ is loaded and checked, so a shipped config
cannot silently drift out of the schema.
"""

import tempfile
from pathlib import Path

import pytest
from pydantic import ValidationError

from caimbench.config import (
    DEFAULT_CHANNEL_PLAN,
    DEFAULT_FAR_TARGETS,
    DEFAULT_IDENTITIES,
    DEFAULT_TRAIN_FRACTION,
)
from caimbench.data.protocol import split_sizes
from caimbench.data_models import ExperimentConfig, InsertionPlan
from caimbench.rng import counter_rng, derive_seed

CONFIG_DIR = Path(__file__).parent.parent / "configs"


def get_all_config_files():
    if not CONFIG_DIR.exists():
        return []
    return sorted(p.name for p in CONFIG_DIR.glob("*.json"))


@pytest.mark.parametrize("config_name", get_all_config_files())
def test_shipped_config(config_name):
    """Test that a shipped config validates and describes a runnable protocol."""
    config = ExperimentConfig.load(CONFIG_DIR / config_name)
    assert config.plan.positions[-1] <= len(config.backbone.channels)
    split_sizes(config.dataset.n_identities, config.protocol.train_fraction)
    assert config.dataset.resolution % 8 == 0
    assert config.dataset.pretrain_samples_per_identity >= 2


def test_defaults_match_reference_protocol():
    config = ExperimentConfig()
    assert config.backbone.channels == DEFAULT_CHANNEL_PLAN
    assert config.plan.positions == (1, 2, 3)
    assert config.variant == "caim"
    assert config.train.margin == 2.0
    assert config.train.learning_rate == 1e-4
    assert config.train.epochs == 50
    assert config.train.batch_size == 90
    assert config.evaluation.far_targets == DEFAULT_FAR_TARGETS
    assert split_sizes(DEFAULT_IDENTITIES, DEFAULT_TRAIN_FRACTION) == (25, 35)


def test_save_and_load_round_trip():
    config = ExperimentConfig(seed=4, plan=InsertionPlan(positions=(2, 4)), variant="aim")
    with tempfile.TemporaryDirectory() as tmpdir:
        path = config.save(Path(tmpdir) / "nested" / "config.json")
        assert ExperimentConfig.load(path) == config


def test_load_missing_file():
    with pytest.raises(FileNotFoundError):
        ExperimentConfig.load("/nonexistent/config.json")


@pytest.mark.parametrize(
    "payload",
    [
        {"unknown": 1},
        {"train": {"margin": 0.0}},
        {"train": {"genuine_fraction": 1.0}},
        {"dataset": {"gap_strength": 1.5}},
        {"dataset": {"preset": "infrared"}},
        {"backbone": {"channels": []}},
        {"evaluation": {"far_targets": [0.0]}},
        {"plan": {"positions": [3, 1]}},
        {"plan": {"positions": [6]}},
        {"variant": "bn"},
    ],
)
def test_invalid_configs(payload):
    with pytest.raises(ValidationError):
        ExperimentConfig.model_validate(payload)


def test_overrides_win():
    config = ExperimentConfig(seed=1, output_dir="a").with_overrides(seed=9, output_dir="b")
    assert (config.seed, config.output_dir) == (9, "b")
    assert ExperimentConfig(seed=1).with_overrides() == ExperimentConfig(seed=1)


def test_effective_seeds():
    config = ExperimentConfig(seed=5)
    assert config.dataset_seed() == derive_seed(5, "dataset")
    assert len({config.dataset_seed(), config.protocol_seed(), config.pretrain_seed()}) == 3
    assert config.train_config().seed == derive_seed(5, "train")

    pinned = ExperimentConfig.model_validate({"seed": 5, "dataset": {"seed": 77}, "train": {"seed": 8}})
    assert pinned.dataset_seed() == 77
    assert pinned.train_config().seed == 8
    assert pinned.protocol_seed() == config.protocol_seed()


def test_derived_streams_are_stable():
    assert derive_seed(0, "dataset") == derive_seed(0, "dataset")
    assert derive_seed(0, "dataset") != derive_seed(1, "dataset")
    assert counter_rng(3, 1, 2).integers(1 << 30) == counter_rng(3, 1, 2).integers(1 << 30)
    assert counter_rng(3, 1, 2).integers(1 << 30) != counter_rng(3, 2, 1).integers(1 << 30)


def test_insertion_plan():
    plan = InsertionPlan.first(3)
    assert plan.positions == (1, 2, 3)
    assert 2 in plan and 4 not in plan
    assert len(plan) == 3
    assert plan.label() == "1-3"
    assert InsertionPlan(positions=(1, 3, 5)).label() == "1,3,5"
    assert InsertionPlan(positions=(2,)).label() == "2"
    assert InsertionPlan(positions=()).label() == "none"
    with pytest.raises(ValidationError):
        InsertionPlan(positions=(0, 1))
