"""Tests for the binary checkpoint container."""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from caimbench.errors import CheckpointError
from caimbench.io import MAGIC, Checkpoint, load_checkpoint, save_checkpoint


@pytest.fixture
def entries(rng):
    return {
        "backbone/stage1/weight": rng.normal(size=(4, 3, 3, 3)),
        "backbone/stage1/bias": rng.normal(size=4),
        "caim/1/conv1_bias": rng.normal(size=4),
        "caim/1/fc_mu_weight": rng.normal(size=(4, 4)),
    }


def test_round_trip_is_byte_identical(entries):
    """Test that decode then re-encode reproduces the exact bytes."""
    data = Checkpoint(entries=entries).to_bytes()
    restored = Checkpoint.from_bytes(data)
    assert restored.to_bytes() == data
    assert data.startswith(MAGIC)
    for name, value in entries.items():
        np.testing.assert_array_equal(restored.entries[name], value)
        assert restored.entries[name].dtype == np.float64


def test_entry_order_does_not_matter(entries):
    reversed_entries = dict(reversed(list(entries.items())))
    assert Checkpoint(entries=reversed_entries).to_bytes() == Checkpoint(entries=entries).to_bytes()


def test_int64_and_scalar_entries():
    state = {"optim/step": np.array([7], dtype=np.int64), "history/loss": np.array(0.25)}
    restored = Checkpoint.from_bytes(Checkpoint(entries=state).to_bytes())
    assert restored.entries["optim/step"].dtype == np.int64
    assert restored.entries["optim/step"].tolist() == [7]
    assert restored.entries["history/loss"].shape == ()
    assert float(restored.entries["history/loss"]) == 0.25


def test_every_byte_flip_is_detected():
    data = Checkpoint(entries={"caim/1/conv1_bias": np.arange(3.0)}).to_bytes()
    for position in range(len(data)):
        corrupted = bytearray(data)
        corrupted[position] ^= 0x01
        with pytest.raises(CheckpointError):
            Checkpoint.from_bytes(bytes(corrupted))


def test_truncation_is_detected(entries):
    data = Checkpoint(entries=entries).to_bytes()
    for cut in (0, 5, len(data) // 2, len(data) - 1):
        with pytest.raises(CheckpointError):
            Checkpoint.from_bytes(data[:cut])


def test_unsupported_dtype():
    with pytest.raises(CheckpointError, match="dtype"):
        Checkpoint(entries={"caim/1/x": np.array(["a"])}).to_bytes()


def test_kind_validation(entries):
    with tempfile.TemporaryDirectory() as tmpdir:
        model_path = save_checkpoint(Path(tmpdir) / "model.ckpt", entries, kind="model")
        assert set(load_checkpoint(model_path)) == set(entries)
        with pytest.raises(CheckpointError, match="state checkpoint"):
            load_checkpoint(model_path, kind="state")
        with pytest.raises(CheckpointError, match="model checkpoint"):
            save_checkpoint(Path(tmpdir) / "bad.ckpt", {"optim/step": np.array([1])}, kind="model")
        assert set(load_checkpoint(model_path, kind="any")) == set(entries)


def test_sections(entries):
    checkpoint = Checkpoint(entries=entries)
    assert set(checkpoint.section("caim")) == {"caim/1/conv1_bias", "caim/1/fc_mu_weight"}
    assert set(checkpoint.section("backbone/")) == {"backbone/stage1/weight", "backbone/stage1/bias"}
    changed = dict(entries, **{"caim/1/conv1_bias": np.zeros(4)})
    assert Checkpoint(entries=changed).section_bytes("backbone") == checkpoint.section_bytes("backbone")
    assert Checkpoint(entries=changed).section_bytes("caim") != checkpoint.section_bytes("caim")


def test_missing_file():
    with tempfile.TemporaryDirectory() as tmpdir:
        with pytest.raises(FileNotFoundError):
            load_checkpoint(Path(tmpdir) / "absent.ckpt")
