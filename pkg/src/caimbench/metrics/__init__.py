"""caimbench biometric metrics."""

from caimbench.metrics.aggregate import FoldAccumulator, aggregate_folds
from caimbench.metrics.identification import cosine_similarity, rank1, score_set
from caimbench.metrics.report import verification_report
from caimbench.metrics.verification import RocCurve, ScoreSet, auc, det_points, eer, roc, vr_at_far

__all__ = [
    "ScoreSet",
    "RocCurve",
    "roc",
    "auc",
    "eer",
    "vr_at_far",
    "det_points",
    "cosine_similarity",
    "rank1",
    "score_set",
    "verification_report",
    "FoldAccumulator",
    "aggregate_folds",
]
