"""caimbench experiment runners.

Orchestrates the pipeline steps behind the command-line interface.
"""

from caimbench.runner.pipeline import (
    ExperimentLayout,
    ablate,
    ablation_rows,
    cost_table,
    evaluate,
    gen_data,
    load_backbone,
    pretrain,
    train_fold,
    train_folds,
    write_effective_config,
)
from caimbench.runner.utils import parse_folds, parse_plan, prepare_output

__all__ = [
    "ExperimentLayout",
    "gen_data",
    "pretrain",
    "load_backbone",
    "train_fold",
    "train_folds",
    "evaluate",
    "ablation_rows",
    "ablate",
    "cost_table",
    "write_effective_config",
    "parse_folds",
    "parse_plan",
    "prepare_output",
]
