"""Tests for verification and identification metrics."""

import numpy as np
import pytest
from sklearn.metrics import roc_auc_score

from caimbench.errors import ProtocolError
from caimbench.metrics import (
    ScoreSet,
    aggregate_folds,
    auc,
    cosine_similarity,
    det_points,
    eer,
    rank1,
    roc,
    score_set,
    verification_report,
    vr_at_far,
)


def _random_scores(seed, n_genuine=60, n_impostor=240, quantize=True):
    """Overlapping score distributions; quantization creates ties."""
    rng = np.random.default_rng(seed)
    genuine = rng.normal(0.6, 0.2, size=n_genuine)
    impostor = rng.normal(0.2, 0.2, size=n_impostor)
    if quantize:
        genuine, impostor = np.round(genuine, 1), np.round(impostor, 1)
    return ScoreSet(genuine, impostor)


def _thresholds(scores):
    observed = np.unique(np.concatenate([scores.genuine, scores.impostor]))
    return [-np.inf, *observed.tolist(), np.inf]


def _brute_rates(scores, t):
    far = float(np.mean(scores.impostor >= t))
    tar = float(np.mean(scores.genuine >= t))
    return far, tar


def _brute_eer(scores):
    best_gap, best_mid = np.inf, np.inf
    for t in _thresholds(scores):
        far, tar = _brute_rates(scores, t)
        frr = 1.0 - tar
        gap, mid = abs(far - frr), (far + frr) / 2.0
        if gap < best_gap or (gap == best_gap and mid < best_mid):
            best_gap, best_mid = gap, mid
    return 100.0 * best_mid


def _brute_vr(scores, target):
    for t in _thresholds(scores):
        far, tar = _brute_rates(scores, t)
        if far <= target / 100.0:
            return 100.0 * tar, 100.0 * far


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("quantize", [True, False])
def test_auc_matches_sklearn(seed, quantize):
    scores = _random_scores(seed, quantize=quantize)
    labels = np.concatenate([np.ones(len(scores.genuine)), np.zeros(len(scores.impostor))])
    expected = 100.0 * roc_auc_score(labels, np.concatenate([scores.genuine, scores.impostor]))
    assert auc(roc(scores)) == pytest.approx(expected, abs=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_auc_matches_mann_whitney(seed):
    """Test AUC against the probability that a genuine score beats an impostor score."""
    scores = _random_scores(seed, n_genuine=30, n_impostor=50)
    diff = scores.genuine[:, None] - scores.impostor[None, :]
    expected = 100.0 * (np.mean(diff > 0) + 0.5 * np.mean(diff == 0))
    assert auc(roc(scores)) == pytest.approx(expected, abs=1e-9)


def test_roc_curve_endpoints_and_monotonicity():
    curve = roc(_random_scores(3))
    assert (curve.far[0], curve.tar[0]) == (1.0, 1.0)
    assert (curve.far[-1], curve.tar[-1]) == (0.0, 0.0)
    assert np.all(np.diff(curve.far) <= 0)
    assert np.all(np.diff(curve.tar) <= 0)


def test_eer_by_hand():
    scores = ScoreSet.of([0.9, 0.8, 0.7], [0.1, 0.2, 0.75])
    assert eer(scores) == pytest.approx(100.0 / 3.0)


def test_separable_scores():
    scores = ScoreSet.of([0.8, 0.9], [0.1, 0.3, 0.2])
    assert auc(roc(scores)) == pytest.approx(100.0)
    assert eer(scores) == 0.0
    assert eer(scores.swapped()) == 100.0


@pytest.mark.parametrize("seed", range(10))
def test_eer_matches_brute_force(seed):
    scores = _random_scores(seed, quantize=seed % 2 == 0)
    assert eer(scores) == pytest.approx(_brute_eer(scores), abs=1e-9)
    assert eer(roc(scores)) == eer(scores)


@pytest.mark.parametrize("seed", range(10))
def test_vr_at_far_matches_brute_force(seed):
    scores = _random_scores(seed, n_impostor=400, quantize=seed % 2 == 1)
    for point in vr_at_far(scores, (1.0, 5.0, 10.0)):
        tar, far = _brute_vr(scores, point.far_target)
        assert point.tar == pytest.approx(tar, abs=1e-9)
        assert point.realized_far == pytest.approx(far, abs=1e-9)
        assert point.realized_far <= point.far_target
        assert point.resolved


def test_vr_at_unresolvable_far():
    """Test that a FAR finer than one impostor is flagged and falls back to FAR 0."""
    scores = _random_scores(0, n_impostor=50, quantize=False)
    (point,) = vr_at_far(scores, (0.01,))
    assert not point.resolved
    assert point.realized_far == 0.0
    assert point.tar == pytest.approx(100.0 * np.mean(scores.genuine > scores.impostor.max()))


def test_vr_when_every_pair_is_rejected():
    scores = ScoreSet.of([0.1, 0.2], [0.5, 0.9])
    (point,) = vr_at_far(scores, (10.0,))
    assert point.tar == 0.0
    assert point.threshold is None


def test_det_points_are_fractions():
    points = det_points(ScoreSet.of([0.9, 0.4], [0.1, 0.5]))
    assert points[0] == (1.0, 0.0)
    assert points[-1] == (0.0, 1.0)
    assert all(0.0 <= far <= 1.0 and 0.0 <= frr <= 1.0 for far, frr in points)


def test_score_set_validation():
    with pytest.raises(ValueError, match="finite"):
        ScoreSet.of([0.1, np.nan], [0.2])
    with pytest.raises(ValueError):
        roc(ScoreSet.of([], [0.2]))
    with pytest.raises(ValueError):
        vr_at_far(ScoreSet.of([0.3], []), (1.0,))


@pytest.mark.parametrize("seed", range(5))
def test_rank1_matches_loop(seed):
    rng = np.random.default_rng(seed)
    gallery_ids = np.repeat(np.arange(6), 2)
    probe_ids = rng.integers(0, 6, size=20)
    gallery = rng.normal(size=(12, 5))
    probes = gallery[probe_ids * 2] + rng.normal(0.0, 1.0, size=(20, 5))

    hits = 0
    for probe, identity in zip(probes, probe_ids, strict=True):
        sims = [probe @ g / (np.linalg.norm(probe) * np.linalg.norm(g)) for g in gallery]
        hits += gallery_ids[int(np.argmax(sims))] == identity
    assert rank1(gallery, gallery_ids, probes, probe_ids) == pytest.approx(100.0 * hits / 20)


def test_rank1_requires_closed_set():
    gallery = np.eye(3)
    with pytest.raises(ProtocolError):
        rank1(gallery, np.array([0, 1, 2]), np.eye(3)[:1], np.array([5]))


def test_score_set_pairs_every_probe_with_every_template(rng):
    gallery, probes = rng.normal(size=(4, 3)), rng.normal(size=(5, 3))
    gallery_ids, probe_ids = np.array([0, 0, 1, 2]), np.array([0, 1, 1, 2, 2])
    scores = score_set(gallery, gallery_ids, probes, probe_ids)
    assert len(scores.genuine) == 2 + 1 + 1 + 1 + 1
    assert len(scores.genuine) + len(scores.impostor) == 20
    # row-major: probe 0 (identity 0) against gallery templates 0 and 1 come first
    np.testing.assert_allclose(scores.genuine[:2], cosine_similarity(probes, gallery)[0, :2])


def test_verification_report(rng):
    gallery = rng.normal(size=(4, 8))
    gallery_ids = np.arange(4)
    probes = np.repeat(gallery, 2, axis=0) + rng.normal(0.0, 0.05, size=(8, 8))
    probe_ids = np.repeat(gallery_ids, 2)
    report = verification_report(2, gallery, gallery_ids, probes, probe_ids, far_targets=(10.0,))
    assert report.fold == 2
    assert report.n_genuine == 8
    assert report.n_impostor == 24
    assert report.rank1 == 100.0
    assert report.auc == pytest.approx(100.0)
    assert report.eer == 0.0
    assert set(report.as_record()) >= {"AUC", "EER", "Rank-1"}


def test_aggregate_folds():
    report = aggregate_folds([{"AUC": 90.0, "EER": 10.0}, {"AUC": 92.0, "EER": 8.0}, {"AUC": 94.0, "EER": 6.0}])
    assert report.n_folds == 3
    assert report.metrics["AUC"].mean == pytest.approx(92.0)
    assert report.metrics["AUC"].std == pytest.approx(2.0)
    assert report.metrics["EER"].values == [10.0, 8.0, 6.0]

    single = aggregate_folds([{"AUC": 70.0}])
    assert single.metrics["AUC"].std == 0.0

    with pytest.raises(ValueError, match="earlier folds"):
        aggregate_folds([{"AUC": 1.0}, {"EER": 1.0}])
    with pytest.raises(ValueError):
        aggregate_folds([])
