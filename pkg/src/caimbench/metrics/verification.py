"""Threshold-based verification metrics over similarity scores.

Scores are similarities: higher means more likely the same identity. A pair is
accepted at threshold t when its score is ≥ t.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator, Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from caimbench.data_models import VrPoint


@dataclass(frozen=True)
class ScoreSet:
    """Genuine and impostor similarity scores."""

    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self) -> None:
        for name in ("genuine", "impostor"):
            values = np.asarray(getattr(self, name), dtype=np.float64).reshape(-1)
            if not np.isfinite(values).all():
                raise ValueError(f"{name} scores must be finite")
            object.__setattr__(self, name, values)

    @classmethod
    def of(cls, genuine: Iterable[float], impostor: Iterable[float]) -> ScoreSet:
        return cls(np.fromiter(genuine, dtype=np.float64), np.fromiter(impostor, dtype=np.float64))

    def swapped(self) -> ScoreSet:
        return ScoreSet(self.impostor, self.genuine)

    def require_non_empty(self) -> None:
        if len(self.genuine) == 0 or len(self.impostor) == 0:
            raise ValueError(
                f"threshold metrics need genuine and impostor scores, got {len(self.genuine)} and {len(self.impostor)}"
            )


@dataclass(frozen=True)
class RocCurve:
    """
    Operating points at every distinct score plus ±inf, thresholds ascending.

    FAR and TAR are fractions in [0, 1] and non-increasing along the curve.
    """

    thresholds: np.ndarray
    far: np.ndarray
    tar: np.ndarray

    @property
    def frr(self) -> np.ndarray:
        return 1.0 - self.tar

    def __iter__(self) -> Iterator[tuple[float, float, float]]:
        for t, f, r in zip(self.thresholds, self.far, self.tar, strict=True):
            yield float(t), float(f), float(r)

    def __len__(self) -> int:
        return len(self.thresholds)


def _accept_rate(sorted_scores: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Fraction of scores ≥ each threshold."""
    below = np.searchsorted(sorted_scores, thresholds, side="left")
    return (len(sorted_scores) - below) / len(sorted_scores)


def roc(scores: ScoreSet) -> RocCurve:
    """
    Sweep every observed score as a threshold.

    Raises:
        ValueError: If either score list is empty
    """
    scores.require_non_empty()
    observed = np.unique(np.concatenate([scores.genuine, scores.impostor]))
    thresholds = np.concatenate([[-np.inf], observed, [np.inf]])
    return RocCurve(
        thresholds=thresholds,
        far=_accept_rate(np.sort(scores.impostor), thresholds),
        tar=_accept_rate(np.sort(scores.genuine), thresholds),
    )


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under TAR against FAR, as a percentage."""
    width = curve.far[:-1] - curve.far[1:]
    height = (curve.tar[:-1] + curve.tar[1:]) / 2.0
    return float(100.0 * np.sum(width * height))


def eer(scores: ScoreSet | RocCurve) -> float:
    """
    Equal error rate, as a percentage.

    Taken as (FAR + FRR) / 2 at the threshold that minimizes |FAR − FRR|; on
    ties the smallest such midpoint wins.
    """
    curve = scores if isinstance(scores, RocCurve) else roc(scores)
    frr = curve.frr
    gap = np.abs(curve.far - frr)
    candidates = np.flatnonzero(gap == gap.min())
    midpoints = (curve.far[candidates] + frr[candidates]) / 2.0
    return float(100.0 * midpoints.min())


def vr_at_far(scores: ScoreSet, far_targets: Sequence[float]) -> list[VrPoint]:
    """
    Verification rate at each FAR target (percent).

    The smallest threshold whose FAR does not exceed the target is used; the
    FAR actually reached there is reported too. A target finer than one
    impostor score is flagged as unresolved.

    Raises:
        ValueError: If there are no impostor scores
    """
    if len(scores.impostor) == 0:
        raise ValueError("VR@FAR needs impostor scores")
    curve = roc(scores)
    points = []
    for target in far_targets:
        fraction = target / 100.0
        resolved = len(scores.impostor) * fraction >= 1.0
        if not resolved:
            logger.warning(
                f"{len(scores.impostor)} impostor scores cannot resolve FAR={target:g}%; "
                "reporting the strictest reachable operating point"
            )
        index = int(np.flatnonzero(curve.far <= fraction)[0])
        threshold = float(curve.thresholds[index])
        points.append(
            VrPoint(
                far_target=target,
                tar=100.0 * float(curve.tar[index]),
                realized_far=100.0 * float(curve.far[index]),
                threshold=threshold if np.isfinite(threshold) else None,
                resolved=resolved,
            )
        )
    return points


def det_points(scores: ScoreSet) -> list[tuple[float, float]]:
    """Raw (FAR, FRR) pairs along the ROC sweep, as fractions."""
    curve = roc(scores)
    return [(float(f), float(r)) for f, r in zip(curve.far, curve.frr, strict=True)]
