"""Command-line interface for caimbench."""

import argparse
import sys
import traceback
from pathlib import Path

from loguru import logger

from caimbench.config import DEFAULT_WORKERS, MAX_WORKERS
from caimbench.data_models import ExperimentConfig
from caimbench.io import format_eval_report, format_table


def configure_logging(verbose: bool) -> None:
    """Single stderr sink; DEBUG with --verbose."""
    logger.remove()
    logger.add(sys.stderr, format="{level}: {message}", level="DEBUG" if verbose else "INFO")


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Experiment configuration from ``--config`` with flag overrides applied.

    Flags win over file values.
    """
    from caimbench.runner.utils import parse_plan

    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    config = config.with_overrides(seed=args.seed, output_dir=args.out)
    update: dict[str, object] = {}
    if getattr(args, "plan", None) is not None:
        update["plan"] = parse_plan(args.plan).model_dump()
    if getattr(args, "variant", None) is not None:
        update["variant"] = args.variant
    if update:
        config = ExperimentConfig.model_validate({**config.model_dump(), **update})
    return config


def cmd_gen_data(args: argparse.Namespace) -> None:
    """Generate the synthetic dataset and protocol folds."""
    from caimbench.runner import gen_data

    config = load_config(args)
    manifest, splits = gen_data(config, force=args.force)
    print(f"Dataset: {manifest.summary()}")
    for split in splits:
        print(f"  {split}")
    print(f"Written to {Path(config.output_dir) / 'data'}")


def cmd_pretrain(args: argparse.Namespace) -> None:
    """Pretrain and freeze the backbone."""
    from caimbench.runner import pretrain

    report = pretrain(load_config(args), force=args.force)
    final = f"{report.losses[-1].mean_loss:.4f}" if report.losses else "n/a"
    print(f"Backbone pretrained on {report.n_images} images of {report.n_identities} identities")
    print(f"  final loss {final}, held-out rank-1 {report.holdout_rank1:.2f}%")
    print(f"  fingerprint {report.fingerprint}")


def cmd_train(args: argparse.Namespace) -> None:
    """Train CAIM on every selected fold."""
    from caimbench.runner import train_folds

    config = load_config(args)
    run_dir = Path(args.run) if args.run else None
    results = train_folds(config, folds=args.folds, resume=args.resume, force=args.force, run_dir=run_dir)
    records = [
        {
            "Run": r.checkpoints[-1].parent.name if r.checkpoints else "-",
            "Epochs": r.state.epoch,
            "Final loss": r.history[-1].mean_loss if r.history else float("nan"),
        }
        for r in results
    ]
    print(format_table(records, f"Training: variant {config.variant}, plan {config.plan.label()}"))


def cmd_eval(args: argparse.Namespace) -> None:
    """Evaluate trained checkpoints or the bare backbone."""
    from caimbench.runner import evaluate

    report = evaluate(
        load_config(args),
        run_dir=Path(args.run) if args.run else None,
        name=args.name,
        baseline=args.baseline,
        force_source_gate=True if args.force_source_gate else None,
        probe_modality=args.probe_modality,
        folds=args.folds,
        force=args.force,
    )
    print(format_eval_report(report, verbose=args.verbose))


def cmd_ablate(args: argparse.Namespace) -> None:
    """Run the insertion-depth and variant sweep."""
    from caimbench.runner import ablate

    if not 1 <= args.workers <= MAX_WORKERS:
        raise ValueError(f"--workers must be in 1..{MAX_WORKERS}, got {args.workers}")
    report = ablate(load_config(args), workers=args.workers, force=args.force)
    print(format_table([r.as_record() for r in report.rows], f"Ablation (seed {report.seed})"))


def cmd_cost(args: argparse.Namespace) -> None:
    """Print the parameter and FLOP table."""
    from caimbench.runner import cost_table

    report = cost_table(load_config(args), force=args.force)
    print(format_table([r.as_record() for r in report.rows], "Computational cost"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="Experiment config JSON (default: built-in defaults)")
    common.add_argument("--seed", type=int, metavar="N", help="Master seed (overrides the config)")
    common.add_argument("--out", metavar="DIR", help="Experiment directory (overrides the config)")
    common.add_argument("--force", action="store_true", help="Overwrite existing outputs")
    common.add_argument("--verbose", action="store_true", help="Debug logging and tracebacks")

    parser = argparse.ArgumentParser(
        description="caimbench - Conditional Adaptive Instance Modulation for heterogeneous face recognition",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  caimbench gen-data --config configs/quick.json
  caimbench pretrain --config configs/quick.json
  caimbench train --config configs/quick.json --folds 0-1
  caimbench eval --config configs/quick.json
  caimbench eval --config configs/quick.json --baseline
  caimbench ablate --config configs/quick.json --workers 4
  caimbench cost
""",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, help="Available commands")

    gen = subparsers.add_parser("gen-data", parents=[common], help="Generate the synthetic dataset and folds")
    gen.set_defaults(func=cmd_gen_data)

    pre = subparsers.add_parser("pretrain", parents=[common], help="Pretrain and freeze the backbone")
    pre.set_defaults(func=cmd_pretrain)

    fold_help = "Folds to use: 'all' (default), '2', '0,3' or '1-3'"

    tr = subparsers.add_parser("train", parents=[common], help="Train CAIM blocks on the protocol folds")
    tr.add_argument("--folds", metavar="FOLDS", help=fold_help)
    tr.add_argument("--plan", metavar="PLAN", help="Insertion plan: 'none', '2', '1,3' or '1-3'")
    tr.add_argument("--variant", choices=["caim", "aim", "in"], help="Block variant")
    tr.add_argument("--run", metavar="DIR", help="Run directory (default: <out>/train)")
    tr.add_argument("--resume", action="store_true", help="Continue from the training-state checkpoints")
    tr.set_defaults(func=cmd_train)

    ev = subparsers.add_parser("eval", parents=[common], help="Evaluate trained checkpoints")
    ev.add_argument("--folds", metavar="FOLDS", help=fold_help)
    ev.add_argument("--variant", choices=["caim", "aim", "in"], help="Block variant of the checkpoints")
    ev.add_argument("--run", metavar="DIR", help="Run directory holding fold_<k>/model.ckpt")
    ev.add_argument("--name", metavar="NAME", help="Report name under <out>/eval")
    ev.add_argument("--baseline", action="store_true", help="Evaluate the bare pretrained backbone")
    ev.add_argument("--force-source-gate", action="store_true", help="Embed probes with the gate closed")
    ev.add_argument("--probe-modality", choices=["target", "source"], help="Probe modality")
    ev.set_defaults(func=cmd_eval)

    ab = subparsers.add_parser("ablate", parents=[common], help="Sweep insertion depth and block variant")
    ab.add_argument(
        "--workers",
        type=int,
        default=DEFAULT_WORKERS,
        metavar="N",
        help=f"Rows run in parallel processes (default: {DEFAULT_WORKERS})",
    )
    ab.set_defaults(func=cmd_ablate)

    co = subparsers.add_parser("cost", parents=[common], help="Parameter and FLOP table")
    co.set_defaults(func=cmd_cost)
    return parser


def main(argv: list[str] | None = None) -> None:
    """Main CLI entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    try:
        args.func(args)
    except Exception as e:
        if args.verbose:
            traceback.print_exc()
        message = " ".join(str(e).split())
        print(f"error: {type(e).__name__}: {message}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
