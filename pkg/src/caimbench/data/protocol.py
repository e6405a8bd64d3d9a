"""Disjoint-identity evaluation folds."""

import json
from pathlib import Path
from typing import Literal

from loguru import logger

from caimbench.data_models import DatasetManifest, ProtocolSplit, SampleKey
from caimbench.errors import ProtocolError
from caimbench.rng import counter_rng

PROTOCOL_DIR = "protocol"


def split_sizes(n_identities: int, train_fraction: float) -> tuple[int, int]:
    """
    (train, eval) identity counts.

    Raises:
        ProtocolError: If either side would hold fewer than 2 identities
    """
    n_train = round(n_identities * train_fraction)
    n_eval = n_identities - n_train
    if n_train < 2 or n_eval < 2:
        raise ProtocolError(
            f"train_fraction {train_fraction:.4f} of {n_identities} identities gives "
            f"{n_train} train / {n_eval} eval; both sides need at least 2"
        )
    return n_train, n_eval


def make_protocol(
    manifest: DatasetManifest,
    n_folds: int,
    train_fraction: float,
    seed: int,
    gallery_templates: Literal["all", "first"] = "all",
) -> list[ProtocolSplit]:
    """
    Independent random identity partitions, one per fold.

    Train samples cover both modalities of the train identities. The gallery
    holds source samples of the eval identities (all of them, or only sample
    0 of each) and the probes are their target samples.

    Raises:
        ProtocolError: If the split sizes are degenerate
    """
    if n_folds < 1:
        raise ProtocolError(f"n_folds must be positive, got {n_folds}")
    n_train, _ = split_sizes(manifest.n_identities, train_fraction)
    samples = range(manifest.samples_per_identity)
    gallery_samples = samples if gallery_templates == "all" else range(1)

    splits = []
    for fold in range(n_folds):
        order = counter_rng(seed, fold).permutation(manifest.n_identities)
        train_ids = sorted(int(i) for i in order[:n_train])
        eval_ids = sorted(int(i) for i in order[n_train:])
        splits.append(
            ProtocolSplit(
                fold=fold,
                seed=seed,
                train_identities=train_ids,
                eval_identities=eval_ids,
                gallery_templates=gallery_templates,
                train=[
                    SampleKey(identity=i, index=k, modality=m)
                    for m in ("source", "target")
                    for i in train_ids
                    for k in samples
                ],
                gallery=[SampleKey(identity=i, index=k, modality="source") for i in eval_ids for k in gallery_samples],
                probes=[SampleKey(identity=i, index=k, modality="target") for i in eval_ids for k in samples],
            )
        )
    return splits


def source_sanity_split(split: ProtocolSplit, samples_per_identity: int) -> ProtocolSplit:
    """
    Source-vs-source variant of a fold.

    The gallery is sample 0 of each eval identity and the probes are the
    remaining source samples.

    Raises:
        ProtocolError: With fewer than 2 samples per identity
    """
    if samples_per_identity < 2:
        raise ProtocolError("source-vs-source evaluation needs at least 2 samples per identity")
    return split.model_copy(
        update={
            "gallery_templates": "first",
            "gallery": [SampleKey(identity=i, index=0, modality="source") for i in split.eval_identities],
            "probes": [
                SampleKey(identity=i, index=k, modality="source")
                for i in split.eval_identities
                for k in range(1, samples_per_identity)
            ],
        }
    )


def write_protocol(splits: list[ProtocolSplit], directory: str | Path) -> list[Path]:
    """Write ``protocol/fold_<k>.json`` files under ``directory``."""
    out = Path(directory) / PROTOCOL_DIR
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for split in splits:
        path = out / f"fold_{split.fold}.json"
        path.write_text(json.dumps(split.model_dump(mode="json"), indent=2) + "\n")
        paths.append(path)
    logger.info(f"Wrote {len(paths)} protocol folds to {out}")
    return paths


def load_protocol(directory: str | Path) -> list[ProtocolSplit]:
    """
    Read every fold file, ordered by fold index.

    Raises:
        FileNotFoundError: If no fold files exist
    """
    folder = Path(directory) / PROTOCOL_DIR
    files = sorted(folder.glob("fold_*.json"))
    if not files:
        raise FileNotFoundError(f"No protocol folds found in {folder}")
    splits = []
    for path in files:
        with open(path) as f:
            splits.append(ProtocolSplit.model_validate(json.load(f)))
    return sorted(splits, key=lambda s: s.fold)
