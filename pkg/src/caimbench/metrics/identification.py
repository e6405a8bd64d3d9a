"""Closed-set identification and gallery/probe scoring."""

import numpy as np

from caimbench.errors import ProtocolError, ShapeError
from caimbench.metrics.verification import ScoreSet


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity of the rows of ``a`` (N×D) and ``b`` (M×D)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[1]:
        raise ShapeError(f"cosine_similarity needs N×D and M×D inputs, got {a.shape} and {b.shape}")
    a_norm = np.linalg.norm(a, axis=1, keepdims=True)
    b_norm = np.linalg.norm(b, axis=1, keepdims=True)
    return (a / np.where(a_norm > 0, a_norm, 1.0)) @ (b / np.where(b_norm > 0, b_norm, 1.0)).T


def _check_closed_set(gallery_ids: np.ndarray, probe_ids: np.ndarray) -> None:
    missing = np.setdiff1d(probe_ids, gallery_ids)
    if len(missing):
        raise ProtocolError(f"probe identities {missing.tolist()[:10]} have no gallery template")


def rank1(
    gallery: np.ndarray,
    gallery_ids: np.ndarray,
    probes: np.ndarray,
    probe_ids: np.ndarray,
) -> float:
    """
    Percentage of probes whose most similar gallery template has their identity.

    Ties go to the lowest gallery index.

    Raises:
        ProtocolError: If a probe identity is absent from the gallery
    """
    gallery_ids = np.asarray(gallery_ids)
    probe_ids = np.asarray(probe_ids)
    if len(probe_ids) == 0:
        raise ValueError("rank1 needs at least one probe")
    _check_closed_set(gallery_ids, probe_ids)
    best = np.argmax(cosine_similarity(probes, gallery), axis=1)
    return float(100.0 * np.mean(gallery_ids[best] == probe_ids))


def score_set(
    gallery: np.ndarray,
    gallery_ids: np.ndarray,
    probes: np.ndarray,
    probe_ids: np.ndarray,
) -> ScoreSet:
    """Every probe against every gallery template, split into genuine and impostor scores."""
    similarity = cosine_similarity(probes, gallery)
    same = np.asarray(probe_ids)[:, np.newaxis] == np.asarray(gallery_ids)[np.newaxis, :]
    return ScoreSet(genuine=similarity[same], impostor=similarity[~same])
