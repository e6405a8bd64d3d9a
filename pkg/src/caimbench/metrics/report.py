"""Per-fold metric bundle."""

from collections.abc import Sequence

import numpy as np

from caimbench.config import DEFAULT_FAR_TARGETS
from caimbench.data_models import FoldMetrics
from caimbench.metrics.identification import rank1, score_set
from caimbench.metrics.verification import auc, eer, roc, vr_at_far


def verification_report(
    fold: int,
    gallery: np.ndarray,
    gallery_ids: np.ndarray,
    probes: np.ndarray,
    probe_ids: np.ndarray,
    far_targets: Sequence[float] = DEFAULT_FAR_TARGETS,
) -> FoldMetrics:
    """
    AUC, EER, Rank-1 and VR@FAR of one fold from gallery and probe embeddings.

    Verification scores compare every probe with every gallery template.
    """
    scores = score_set(gallery, gallery_ids, probes, probe_ids)
    curve = roc(scores)
    return FoldMetrics(
        fold=fold,
        auc=auc(curve),
        eer=eer(curve),
        rank1=rank1(gallery, gallery_ids, probes, probe_ids),
        vr=vr_at_far(scores, far_targets),
        n_genuine=len(scores.genuine),
        n_impostor=len(scores.impostor),
    )
