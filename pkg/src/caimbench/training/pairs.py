"""Seeded cross-modality pair sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, NamedTuple

import numpy as np

from caimbench.rng import counter_rng

if TYPE_CHECKING:
    from caimbench.data.loader import SampleSet

PAIR_STREAM = 2
"""Counter that separates pair sampling from other streams of the training seed."""


class Pair(NamedTuple):
    source_image: np.ndarray
    target_image: np.ndarray
    label: int  # 0 genuine, 1 impostor


@dataclass(frozen=True)
class PairBatch:
    """Index triples into a source and a target SampleSet."""

    source_index: np.ndarray
    target_index: np.ndarray
    labels: np.ndarray

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_genuine(self) -> int:
        return int((self.labels == 0).sum())

    @property
    def n_impostor(self) -> int:
        return int((self.labels == 1).sum())

    def pairs(self, source: SampleSet, target: SampleSet) -> list[Pair]:
        return [
            Pair(source.images[s], target.images[t], int(y))
            for s, t, y in zip(self.source_index, self.target_index, self.labels, strict=True)
        ]


def batch_composition(batch_size: int, genuine_fraction: float) -> tuple[int, int]:
    """
    (genuine, impostor) pairs in a full batch.

    Raises:
        ValueError: If either count would be zero
    """
    genuine = round(batch_size * genuine_fraction)
    impostor = batch_size - genuine
    if genuine < 1 or impostor < 1:
        raise ValueError(
            f"genuine_fraction {genuine_fraction} leaves no room for both pair types in a batch of {batch_size}"
        )
    return genuine, impostor


def make_pairs(
    source: SampleSet,
    target: SampleSet,
    batch_size: int,
    genuine_fraction: float,
    seed: int,
    epoch: int = 1,
    passes: int = 1,
) -> list[PairBatch]:
    """
    Batches of one epoch.

    Every target sample anchors one genuine pair per pass, with a source sample
    of the same identity drawn at random. Each batch is topped up with
    impostor pairs (a random target sample against a source sample of another
    identity) so that full batches hold exactly ``genuine_fraction`` genuine
    pairs. The last batch keeps the same proportion.

    Raises:
        ValueError: If the split has fewer than 2 identities, a target identity
            has no source sample, or the fraction is impossible
    """
    genuine_per_batch, impostor_per_batch = batch_composition(batch_size, genuine_fraction)
    identities = np.unique(target.identities)
    if len(identities) < 2:
        raise ValueError(f"pair sampling needs at least 2 identities, got {len(identities)}")

    same: dict[int, np.ndarray] = {}
    other: dict[int, np.ndarray] = {}
    for identity in identities.tolist():
        same[identity] = np.flatnonzero(source.identities == identity)
        other[identity] = np.flatnonzero(source.identities != identity)
        if len(same[identity]) == 0:
            raise ValueError(f"identity {identity} has no source-modality sample")

    rng = counter_rng(seed, PAIR_STREAM, epoch)
    anchors = np.concatenate([rng.permutation(len(target)) for _ in range(passes)])

    batches = []
    for start in range(0, len(anchors), genuine_per_batch):
        chunk = anchors[start : start + genuine_per_batch]
        if len(chunk) == genuine_per_batch:
            n_impostor = impostor_per_batch
        else:
            n_impostor = max(1, round(len(chunk) * impostor_per_batch / genuine_per_batch))

        src = [rng.choice(same[int(target.identities[t])]) for t in chunk]
        tgt = list(chunk)
        for t in rng.integers(0, len(target), size=n_impostor):
            tgt.append(t)
            src.append(rng.choice(other[int(target.identities[t])]))
        labels = np.concatenate([np.zeros(len(chunk), dtype=np.int64), np.ones(n_impostor, dtype=np.int64)])

        order = rng.permutation(len(labels))
        batches.append(
            PairBatch(
                source_index=np.asarray(src, dtype=np.int64)[order],
                target_index=np.asarray(tgt, dtype=np.int64)[order],
                labels=labels[order],
            )
        )
    return batches
