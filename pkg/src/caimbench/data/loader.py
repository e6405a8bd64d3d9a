"""Loading stored datasets into image arrays."""

from __future__ import annotations

import json
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from caimbench.data.synth import MANIFEST_FILE
from caimbench.data_models import DatasetManifest, ModalityName, SampleKey, SampleRecord
from caimbench.data_models.dataset import Pool
from caimbench.errors import ProtocolError


@dataclass(frozen=True)
class SampleSet:
    """Images of one modality with their identity labels, in key order."""

    images: np.ndarray
    identities: np.ndarray
    keys: tuple[SampleKey, ...]

    def __post_init__(self) -> None:
        if not (len(self.images) == len(self.identities) == len(self.keys)):
            raise ValueError(
                f"SampleSet sizes disagree: {len(self.images)} images, "
                f"{len(self.identities)} labels, {len(self.keys)} keys"
            )

    def __len__(self) -> int:
        return len(self.keys)

    def select(self, indices: Sequence[int] | np.ndarray) -> SampleSet:
        idx = np.asarray(indices, dtype=np.int64)
        return SampleSet(self.images[idx], self.identities[idx], tuple(self.keys[i] for i in idx.tolist()))

    def where(self, mask: np.ndarray) -> SampleSet:
        return self.select(np.flatnonzero(mask))

    @classmethod
    def from_arrays(cls, images: dict[SampleKey, np.ndarray], keys: Sequence[SampleKey]) -> SampleSet:
        """Stack in-memory images (e.g. from ``synthesize``) in the given key order."""
        if not keys:
            raise ValueError("SampleSet needs at least one sample")
        stacked = np.stack([images[k] for k in keys]).astype(np.float64)
        return cls(stacked, np.array([k.identity for k in keys], dtype=np.int64), tuple(keys))


class DatasetLoader:
    """Reads a dataset directory written by ``write_dataset``."""

    def __init__(self, directory: str | Path) -> None:
        """
        Args:
            directory: Dataset directory holding ``manifest.json``

        Raises:
            FileNotFoundError: If the manifest is missing
        """
        self.directory = Path(directory)
        manifest_path = self.directory / MANIFEST_FILE
        if not manifest_path.exists():
            raise FileNotFoundError(f"Dataset manifest not found: {manifest_path}")
        with open(manifest_path) as f:
            self.manifest = DatasetManifest.model_validate(json.load(f))
        self._records = {r.key: r for r in self.manifest.samples}

    def read(self, record: SampleRecord) -> np.ndarray:
        """One image as float64 C×R×R."""
        path = self.directory / record.path
        if not path.exists():
            raise FileNotFoundError(f"Image file not found: {path}")
        data = np.fromfile(path, dtype="<f4")
        resolution = self.manifest.resolution
        expected = record.channels * resolution * resolution
        if data.size != expected:
            raise ValueError(f"{path}: expected {expected} values, found {data.size}")
        return data.reshape(record.channels, resolution, resolution).astype(np.float64)

    def load(self, keys: Sequence[SampleKey]) -> SampleSet:
        """
        Stack the images of the given keys.

        Raises:
            ProtocolError: If a key is not in the manifest
        """
        if not keys:
            raise ValueError("SampleSet needs at least one sample")
        missing = [str(k) for k in keys if k not in self._records]
        if missing:
            raise ProtocolError(f"{len(missing)} samples are not in the dataset, e.g. {missing[:3]}")
        images = np.stack([self.read(self._records[k]) for k in keys])
        return SampleSet(images, np.array([k.identity for k in keys], dtype=np.int64), tuple(keys))

    def load_pool(self, pool: Pool = "benchmark", modality: ModalityName | None = None) -> SampleSet:
        return self.load([r.key for r in self.manifest.records(pool, modality)])
