"""Contrastive loss on cross-modality embedding pairs.

Label convention: 0 = genuine (same identity), 1 = impostor.
"""

from typing import Literal

import numpy as np

from caimbench.autograd import Tensor, relu
from caimbench.config import DEFAULT_MARGIN
from caimbench.errors import ShapeError

Distance = Literal["euclidean", "cosine"]


def _check_labels(labels: np.ndarray, n: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError(f"expected {n} labels, got shape {labels.shape}")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError(f"pair labels must be 0 (genuine) or 1 (impostor), got {np.unique(labels).tolist()}")
    return labels.astype(np.float64)


def squared_distance(e_s: Tensor, e_t: Tensor) -> Tensor:
    diff = e_s - e_t
    return (diff * diff).sum(axis=1)


def pair_distance(e_s: Tensor, e_t: Tensor, distance: Distance = "euclidean") -> Tensor:
    """Per-pair D: ‖e_s − e_t‖₂ or 1 − ⟨e_s, e_t⟩."""
    if e_s.shape != e_t.shape or e_s.ndim != 2:
        raise ShapeError(f"embedding batches must be aligned N×D, got {e_s.shape} and {e_t.shape}")
    if distance == "euclidean":
        return squared_distance(e_s, e_t).sqrt()
    if distance == "cosine":
        return 1.0 - (e_s * e_t).sum(axis=1)
    raise ValueError(f"unknown distance {distance!r}")


def contrastive_loss(
    e_s: Tensor,
    e_t: Tensor,
    labels: np.ndarray,
    margin: float = DEFAULT_MARGIN,
    distance: Distance = "euclidean",
) -> Tensor:
    """
    Batch mean of (1 − y)·½·D² + y·½·max(0, m − D)².

    Args:
        e_s: Source-modality embeddings, N×D
        e_t: Target-modality embeddings, N×D
        labels: N pair labels, 0 genuine / 1 impostor
        margin: Hinge margin m
        distance: "euclidean" or "cosine"

    Raises:
        ValueError: If a label is not 0 or 1
        ShapeError: If batches are misaligned
    """
    d = pair_distance(e_s, e_t, distance)
    y = _check_labels(labels, d.shape[0])
    # euclidean genuine term: ½·‖e_s − e_t‖², no square root
    genuine = squared_distance(e_s, e_t) * 0.5 if distance == "euclidean" else d * d * 0.5
    hinge = relu(margin - d)
    impostor = hinge * hinge * 0.5
    return (genuine * (1.0 - y) + impostor * y).mean()
