"""caimbench contrastive training."""

from caimbench.training.loss import Distance, contrastive_loss, pair_distance
from caimbench.training.optim import Adam, AdamState, adam_step
from caimbench.training.pairs import Pair, PairBatch, batch_composition, make_pairs
from caimbench.training.trainer import (
    MODEL_FILE,
    STATE_FILE,
    TrainResult,
    TrainState,
    latest_checkpoint,
    save_run,
    train,
)

__all__ = [
    "Distance",
    "contrastive_loss",
    "pair_distance",
    "Adam",
    "AdamState",
    "adam_step",
    "Pair",
    "PairBatch",
    "batch_composition",
    "make_pairs",
    "TrainState",
    "TrainResult",
    "train",
    "save_run",
    "latest_checkpoint",
    "MODEL_FILE",
    "STATE_FILE",
]
