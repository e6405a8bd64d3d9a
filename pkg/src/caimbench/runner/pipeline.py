"""Experiment pipeline: generate, pretrain, train, evaluate, ablate and cost-report.

Every step reads its inputs from and writes its outputs to one experiment
directory::

    <out>/config.json          effective configuration
    <out>/data/                manifest, images and protocol folds
    <out>/backbone/            pretrained backbone checkpoint and report
    <out>/train/fold_<k>/      CAIM checkpoints and loss curve
    <out>/eval/<name>/         metrics and DET points
    <out>/ablate/<row>/        per-row training and evaluation
    <out>/cost/                parameter and FLOP table
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from loguru import logger

from caimbench.data import (
    DatasetLoader,
    SampleSet,
    generate_dataset,
    load_protocol,
    make_protocol,
    source_sanity_split,
    write_protocol,
)
from caimbench.data_models import (
    AblationReport,
    AblationRow,
    CostReport,
    CostRow,
    DatasetManifest,
    EvalReport,
    ExperimentConfig,
    FoldMetrics,
    InsertionPlan,
    PretrainReport,
    ProtocolSplit,
    Variant,
)
from caimbench.errors import ContractError
from caimbench.io import (
    load_checkpoint,
    save_checkpoint,
    save_csv,
    save_det_csv,
    save_json,
    save_loss_csv,
)
from caimbench.metrics import aggregate_folds, det_points, rank1, score_set, verification_report
from caimbench.network import (
    FrozenBackbone,
    HfrNetwork,
    count_network_cost,
    embed_in_batches,
    insert_caim,
    pretrain_backbone,
    source_identity_check,
)
from caimbench.rng import counter_rng, derive_seed
from caimbench.runner.utils import parse_folds, prepare_output
from caimbench.training import MODEL_FILE, TrainResult, TrainState, latest_checkpoint, train

CONFIG_FILE = "config.json"
PRETRAIN_REPORT = "pretrain.json"
LOSS_FILE = "loss.csv"
UNCONDITIONAL_DEPTH = 3
"""Plan depth of the unconditional ablation rows."""


@dataclass(frozen=True)
class ExperimentLayout:
    """Paths inside one experiment directory."""

    root: Path

    @property
    def config(self) -> Path:
        return self.root / CONFIG_FILE

    @property
    def data(self) -> Path:
        return self.root / "data"

    @property
    def backbone(self) -> Path:
        return self.root / "backbone"

    @property
    def train(self) -> Path:
        return self.root / "train"

    @property
    def eval(self) -> Path:
        return self.root / "eval"

    @property
    def ablate(self) -> Path:
        return self.root / "ablate"

    @property
    def cost(self) -> Path:
        return self.root / "cost"

    @staticmethod
    def fold_dir(run_dir: Path, fold: int) -> Path:
        return run_dir / f"fold_{fold}"

    @classmethod
    def of(cls, config: ExperimentConfig) -> ExperimentLayout:
        return cls(Path(config.output_dir))


def write_effective_config(config: ExperimentConfig) -> Path:
    """Echo the configuration a command ran with into the output directory."""
    return config.save(ExperimentLayout.of(config).config)


def _require(path: Path, command: str) -> Path:
    if not path.exists():
        raise FileNotFoundError(f"{path} not found; run `caimbench {command}` first")
    return path


# ----------------------------------------------------------------------
# gen-data
# ----------------------------------------------------------------------


def gen_data(config: ExperimentConfig, force: bool = False) -> tuple[DatasetManifest, list[ProtocolSplit]]:
    """
    Generate the synthetic dataset and its protocol folds.

    Returns:
        The dataset manifest and the protocol folds

    Raises:
        FileExistsError: If the data directory is populated and ``force`` is False
    """
    layout = ExperimentLayout.of(config)
    prepare_output(layout.data, force)
    write_effective_config(config)
    dataset = generate_dataset(config.dataset, config.dataset_seed(), layout.data)
    splits = make_protocol(
        dataset.manifest,
        config.protocol.n_folds,
        config.protocol.train_fraction,
        config.protocol_seed(),
        config.protocol.gallery_templates,
    )
    write_protocol(splits, layout.data)
    return dataset.manifest, splits


def _open_data(layout: ExperimentLayout) -> tuple[DatasetLoader, list[ProtocolSplit]]:
    _require(layout.data, "gen-data")
    return DatasetLoader(layout.data), load_protocol(layout.data)


# ----------------------------------------------------------------------
# pretrain
# ----------------------------------------------------------------------


def pretrain(config: ExperimentConfig, force: bool = False) -> PretrainReport:
    """
    Pretrain the source-modality backbone on the pretraining pool and freeze it.

    The last sample of every pool identity is held out and identified against
    the remaining samples as a sanity check of the frozen embedding.
    """
    layout = ExperimentLayout.of(config)
    loader = DatasetLoader(_require(layout.data, "gen-data"))
    pool = loader.load_pool("pretrain")
    prepare_output(layout.backbone, force)
    write_effective_config(config)

    last = loader.manifest.pretrain_samples_per_identity - 1
    held_out = np.array([k.index == last for k in pool.keys])
    fit, holdout = pool.where(~held_out), pool.where(held_out)

    result = pretrain_backbone(
        fit.images,
        fit.identities,
        config.pretrain,
        config.pretrain_seed(),
        channels=config.backbone.channels,
        embedding_dim=config.backbone.embedding_dim,
    )
    backbone = result.backbone
    holdout_rank1 = rank1(
        embed_in_batches(backbone, fit.images),
        fit.identities,
        embed_in_batches(backbone, holdout.images),
        holdout.identities,
    )
    logger.info(f"Held-out rank-1 of the pretrained backbone: {holdout_rank1:.2f}%")

    save_checkpoint(layout.backbone / MODEL_FILE, backbone.state_dict())
    if result.losses:
        save_loss_csv(result.losses, layout.backbone / LOSS_FILE)
    report = PretrainReport(
        n_identities=loader.manifest.pretrain_identities,
        n_images=len(fit),
        losses=result.losses,
        holdout_rank1=holdout_rank1,
        fingerprint=backbone.fingerprint(),
    )
    save_json(report, layout.backbone / PRETRAIN_REPORT)
    return report


def load_backbone(config: ExperimentConfig, resolution: int) -> FrozenBackbone:
    """
    Read the pretrained backbone and check it against the configured geometry.

    Raises:
        FileNotFoundError: If pretraining has not run
        ValueError: If the stored channels differ from the configuration
    """
    path = _require(ExperimentLayout.of(config).backbone / MODEL_FILE, "pretrain")
    backbone = FrozenBackbone.from_state_dict(load_checkpoint(path), resolution)
    if backbone.channels != tuple(config.backbone.channels):
        raise ValueError(
            f"stored backbone has channels {list(backbone.channels)}, "
            f"config asks for {list(config.backbone.channels)}"
        )
    return backbone


# ----------------------------------------------------------------------
# train
# ----------------------------------------------------------------------


def _train_sets(loader: DatasetLoader, split: ProtocolSplit) -> tuple[SampleSet, SampleSet]:
    source = [k for k in split.train if k.modality == "source"]
    target = [k for k in split.train if k.modality == "target"]
    return loader.load(source), loader.load(target)


def train_fold(
    config: ExperimentConfig,
    backbone: FrozenBackbone,
    loader: DatasetLoader,
    split: ProtocolSplit,
    run_dir: Path,
    resume: bool = False,
    force: bool = False,
) -> TrainResult:
    """
    Train one fold into ``run_dir/fold_<k>``.

    With ``resume`` an existing run continues from its most advanced
    checkpoint, final or periodic, up to the configured number of epochs.
    """
    fold_dir = ExperimentLayout.fold_dir(run_dir, split.fold)
    train_config = config.train_config()
    state: TrainState | None = None
    found = latest_checkpoint(fold_dir) if resume and fold_dir.is_dir() else None

    if found is not None:
        resume_dir, state = found
        net = HfrNetwork.from_state_dict(
            load_checkpoint(resume_dir / MODEL_FILE), config.variant, backbone.resolution
        )
        if net.backbone.fingerprint() != backbone.fingerprint():
            raise ContractError(f"{resume_dir} was trained on a different backbone")
        logger.info(f"Resuming fold {split.fold} after epoch {state.epoch} from {resume_dir}")
    else:
        if resume:
            logger.warning(f"Nothing to resume in {fold_dir}; starting fold {split.fold} fresh")
        prepare_output(fold_dir, force)
        net = insert_caim(backbone, config.plan, derive_seed(train_config.seed or 0, "init"), config.variant)

    source, target = _train_sets(loader, split)
    logger.info(f"Fold {split.fold}: {len(source)} source / {len(target)} target training samples")
    result = train(net, source, target, train_config, resume=state, checkpoint_dir=fold_dir)
    if result.history:
        save_loss_csv(result.history, fold_dir / LOSS_FILE)
    return result


def train_folds(
    config: ExperimentConfig,
    folds: str | None = None,
    resume: bool = False,
    force: bool = False,
    run_dir: Path | None = None,
) -> list[TrainResult]:
    """Train the selected folds (all by default) from the shared pretrained backbone."""
    layout = ExperimentLayout.of(config)
    loader, splits = _open_data(layout)
    backbone = load_backbone(config, loader.manifest.resolution)
    write_effective_config(config)
    out = run_dir if run_dir is not None else layout.train
    selected = parse_folds(folds, len(splits))
    return [train_fold(config, backbone, loader, splits[k], out, resume, force) for k in selected]


# ----------------------------------------------------------------------
# eval
# ----------------------------------------------------------------------


def _evaluate_splits(
    config: ExperimentConfig,
    network_for: Callable[[int], HfrNetwork],
    loader: DatasetLoader,
    splits: Sequence[ProtocolSplit],
    out_dir: Path,
    probe_modality: str,
    force_source_gate: bool,
) -> tuple[list[FoldMetrics], bool]:
    folds: list[FoldMetrics] = []
    identity = True
    for split in splits:
        if probe_modality == "source":
            split = source_sanity_split(split, loader.manifest.samples_per_identity)
        net = network_for(split.fold)
        gallery = loader.load(split.gallery)
        probes = loader.load(split.probes)
        probe_path = "source" if force_source_gate or probe_modality == "source" else "target"
        g = net.embed_array(gallery.images, "source")
        p = net.embed_array(probes.images, probe_path)

        metrics = verification_report(
            split.fold, g, gallery.identities, p, probes.identities, config.evaluation.far_targets
        )
        save_det_csv(
            det_points(score_set(g, gallery.identities, p, probes.identities)),
            out_dir / f"det_fold_{split.fold}.csv",
        )
        identity = source_identity_check(net, gallery.images) and identity
        logger.info(str(metrics))
        folds.append(metrics)
    return folds, identity


def evaluate(
    config: ExperimentConfig,
    run_dir: Path | None = None,
    name: str | None = None,
    baseline: bool = False,
    force_source_gate: bool | None = None,
    probe_modality: str | None = None,
    folds: str | None = None,
    force: bool = False,
) -> EvalReport:
    """
    Evaluate trained fold checkpoints, or the bare backbone with ``baseline``.

    Args:
        config: Experiment configuration
        run_dir: Directory holding ``fold_<k>/model.ckpt`` (default ``<out>/train``)
        name: Report name under ``<out>/eval`` (derived from the options when omitted)
        baseline: Evaluate the pretrained backbone without any inserted module
        force_source_gate: Embed probes with the gate closed (config value when None)
        probe_modality: "target" or "source" (config value when None)
        folds: Fold selection, see ``parse_folds``
        force: Overwrite an existing report directory

    Returns:
        EvalReport with per-fold metrics and the cross-fold summary
    """
    layout = ExperimentLayout.of(config)
    loader, splits = _open_data(layout)
    backbone = load_backbone(config, loader.manifest.resolution)
    gate_closed = config.evaluation.force_source_gate if force_source_gate is None else force_source_gate
    probes = probe_modality or config.evaluation.probe_modality
    runs = run_dir if run_dir is not None else layout.train

    if name is None:
        if baseline:
            name = "baseline"
        else:
            name = runs.name if run_dir is not None else f"{config.variant}_{config.plan.label()}"
        if gate_closed:
            name += "-source-gate"
        if probes == "source":
            name += "-source-probes"
    out_dir = prepare_output(layout.eval / name, force)
    write_effective_config(config)

    plans: list[str] = []

    def network_for(fold: int) -> HfrNetwork:
        if baseline:
            return HfrNetwork(backbone, InsertionPlan(positions=()), variant="caim")
        path = _require(ExperimentLayout.fold_dir(runs, fold) / MODEL_FILE, "train")
        net = HfrNetwork.from_state_dict(load_checkpoint(path), config.variant, backbone.resolution)
        if net.backbone.fingerprint() != backbone.fingerprint():
            raise ContractError(f"{path} holds a backbone that differs from the pretrained one")
        plans.append(net.plan.label())
        return net

    selected = [splits[k] for k in parse_folds(folds, len(splits))]
    fold_metrics, identity = _evaluate_splits(config, network_for, loader, selected, out_dir, probes, gate_closed)
    plan = "none" if baseline else ", ".join(sorted(set(plans)))
    report = EvalReport(
        name=name,
        variant="backbone" if baseline else config.variant,
        plan=plan,
        probe_modality=probes,
        force_source_gate=gate_closed,
        folds=fold_metrics,
        summary=aggregate_folds(m.as_record() for m in fold_metrics),
        source_identity=identity,
    )
    save_json(report, out_dir / "metrics.json")
    save_csv([{"Fold": m.fold, **m.as_record()} for m in fold_metrics], out_dir / "metrics.csv")
    return report


# ----------------------------------------------------------------------
# ablate
# ----------------------------------------------------------------------


def ablation_rows(n_stages: int) -> list[tuple[str, Variant, InsertionPlan]]:
    """Plans {1}, {1,2}, ... for the gated block, then the unconditional variants at depth 3."""
    rows: list[tuple[str, Variant, InsertionPlan]] = []
    for k in range(1, n_stages + 1):
        plan = InsertionPlan.first(k)
        rows.append((f"caim_{plan.label()}", "caim", plan))
    plan = InsertionPlan.first(min(UNCONDITIONAL_DEPTH, n_stages))
    unconditional: tuple[Variant, ...] = ("aim", "in")
    for variant in unconditional:
        rows.append((f"{variant}_{plan.label()}", variant, plan))
    return rows


def run_ablation_row(config_json: str, name: str, variant: Variant, plan_positions: tuple[int, ...]) -> str:
    """
    Train and evaluate one ablation row in its own directory.

    Takes and returns JSON so rows can run in worker processes.
    """
    base = ExperimentConfig.model_validate_json(config_json)
    config = base.model_validate(
        {**base.model_dump(), "variant": variant, "plan": {"positions": plan_positions}}
    )
    layout = ExperimentLayout.of(config)
    loader, splits = _open_data(layout)
    backbone = load_backbone(config, loader.manifest.resolution)
    row_dir = layout.ablate / name
    run_dir = row_dir / "train"

    for split in splits:
        train_fold(config, backbone, loader, split, run_dir)

    def network_for(fold: int) -> HfrNetwork:
        path = ExperimentLayout.fold_dir(run_dir, fold) / MODEL_FILE
        return HfrNetwork.from_state_dict(load_checkpoint(path), config.variant, backbone.resolution)

    out_dir = prepare_output(row_dir / "eval", force=True)
    fold_metrics, identity = _evaluate_splits(
        config, network_for, loader, splits, out_dir, "target", force_source_gate=False
    )
    row = AblationRow(
        name=name,
        variant=variant,
        plan=config.plan.label(),
        summary=aggregate_folds(m.as_record() for m in fold_metrics),
        source_identity=identity,
    )
    save_json(row, row_dir / "row.json")
    return row.model_dump_json()


def ablate(config: ExperimentConfig, workers: int = 1, force: bool = False) -> AblationReport:
    """
    Sweep insertion depth and block variant over every fold.

    All rows retrain from the same pretrained backbone with the same seed, so
    they differ only in plan and variant. Rows are independent and may run in
    ``workers`` processes.
    """
    layout = ExperimentLayout.of(config)
    _open_data(layout)
    n_stages = len(config.backbone.channels)
    _require(layout.backbone / MODEL_FILE, "pretrain")
    prepare_output(layout.ablate, force)
    write_effective_config(config)

    rows = ablation_rows(n_stages)
    config_json = config.model_dump_json()
    logger.info(f"Ablation: {len(rows)} rows, {workers} worker(s)")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(run_ablation_row, config_json, n, v, p.positions) for n, v, p in rows]
            results = [f.result() for f in futures]
    else:
        results = [run_ablation_row(config_json, n, v, p.positions) for n, v, p in rows]

    report = AblationReport(seed=config.seed, rows=[AblationRow.model_validate_json(r) for r in results])
    for row in report.rows:
        if not row.source_identity:
            logger.warning(f"{row.name}: source-modality embeddings differ from the bare backbone")
    save_json(report, layout.ablate / "ablation.json")
    save_csv([r.as_record() for r in report.rows], layout.ablate / "ablation.csv")
    return report


# ----------------------------------------------------------------------
# cost
# ----------------------------------------------------------------------


def cost_table(config: ExperimentConfig, force: bool = False) -> CostReport:
    """
    Parameters and FLOPs of the backbone alone and with plans {1}, {1,2}, ...

    Counts depend only on geometry, so no trained artifacts are needed.
    """
    layout = ExperimentLayout.of(config)
    prepare_output(layout.cost, force)
    write_effective_config(config)
    backbone = FrozenBackbone.initialize(
        counter_rng(0),
        config.backbone.channels,
        config.backbone.embedding_dim,
        config.dataset.resolution,
    ).freeze()

    plans = [InsertionPlan(positions=())] + [
        InsertionPlan.first(k) for k in range(1, backbone.n_stages + 1)
    ]
    rows = []
    for plan in plans:
        net = insert_caim(backbone, plan, 0)
        label = "backbone" if not plan.positions else f"+{{{plan.label()}}}"
        rows.append(CostRow(label=label, cost=count_network_cost(net)))

    report = CostReport(rows=rows)
    save_json(report, layout.cost / "cost.json")
    save_csv([r.as_record() for r in rows], layout.cost / "cost.csv")
    return report
