"""Siamese contrastive training of the modulation parameters."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import numpy as np
from loguru import logger

from caimbench.autograd import Tensor
from caimbench.data_models import EpochLoss, TrainConfig
from caimbench.errors import CheckpointError, ContractError
from caimbench.io.checkpoint import load_checkpoint, save_checkpoint
from caimbench.network import HfrNetwork, embed_in_batches
from caimbench.training.loss import contrastive_loss
from caimbench.training.optim import Adam, AdamState
from caimbench.training.pairs import make_pairs

if TYPE_CHECKING:
    from caimbench.data.loader import SampleSet

MODEL_FILE = "model.ckpt"
STATE_FILE = "state.ckpt"


@dataclass
class TrainState:
    """Everything besides the network values needed to continue a run."""

    epoch: int = 0
    optimizer: AdamState = field(default_factory=AdamState)
    history: list[EpochLoss] = field(default_factory=list)

    def state_dict(self) -> dict[str, np.ndarray]:
        entries = self.optimizer.state_dict()
        entries["history/epoch"] = np.array([self.epoch], dtype=np.int64)
        entries["history/loss"] = np.array([h.mean_loss for h in self.history], dtype=np.float64)
        return entries

    @classmethod
    def from_state_dict(cls, entries: Mapping[str, np.ndarray]) -> TrainState:
        for required in ("history/epoch", "history/loss", "optim/step"):
            if required not in entries:
                raise CheckpointError(f"training state is missing {required}")
        losses = np.asarray(entries["history/loss"], dtype=np.float64).reshape(-1)
        return cls(
            epoch=int(np.asarray(entries["history/epoch"]).reshape(-1)[0]),
            optimizer=AdamState.from_state_dict(entries),
            history=[EpochLoss(epoch=i, mean_loss=float(v)) for i, v in enumerate(losses, start=1)],
        )


@dataclass
class TrainResult:
    network: HfrNetwork
    state: TrainState
    checkpoints: list[Path] = field(default_factory=list)

    @property
    def history(self) -> list[EpochLoss]:
        return self.state.history


def save_run(net: HfrNetwork, state: TrainState, directory: Path) -> Path:
    """Write ``model.ckpt`` and ``state.ckpt`` into ``directory``."""
    directory.mkdir(parents=True, exist_ok=True)
    save_checkpoint(directory / STATE_FILE, state.state_dict(), kind="state")
    return save_checkpoint(directory / MODEL_FILE, net.state_dict(), kind="model")


def latest_checkpoint(run_dir: Path) -> tuple[Path, TrainState] | None:
    """
    Most advanced resumable checkpoint under ``run_dir``.

    Candidates are ``run_dir`` itself and its periodic ``epoch_NNN`` directories;
    each needs both ``model.ckpt`` and ``state.ckpt``. The highest completed
    epoch wins, ``run_dir`` on a tie.
    """
    candidates = [run_dir, *sorted(run_dir.glob("epoch_*"))]
    best: tuple[Path, TrainState] | None = None
    for directory in candidates:
        if not ((directory / STATE_FILE).is_file() and (directory / MODEL_FILE).is_file()):
            continue
        state = TrainState.from_state_dict(load_checkpoint(directory / STATE_FILE, kind="state"))
        if best is None or state.epoch > best[1].epoch:
            best = (directory, state)
    return best


def train(
    net: HfrNetwork,
    source: SampleSet,
    target: SampleSet,
    config: TrainConfig,
    resume: TrainState | None = None,
    checkpoint_dir: str | Path | None = None,
) -> TrainResult:
    """
    Train the network's modulation parameters with the contrastive loss.

    Only ``net.trainable_parameters()`` are updated. Source-modality embeddings
    of the gated network are computed once up front, since the gate keeps them
    equal to the frozen backbone's.

    Args:
        net: Network with a frozen backbone and a non-empty plan
        source: Source-modality training samples
        target: Target-modality training samples
        config: Training recipe; a missing seed counts as 0
        resume: State of an interrupted run; the network must already hold its values
        checkpoint_dir: Where to write checkpoints (none written when omitted)

    Returns:
        TrainResult with the loss history and written checkpoint paths

    Raises:
        ContractError: If the backbone is not frozen, nothing is trainable, or
            the backbone changed during training
    """
    net.require_trainable()
    seed = config.seed if config.seed is not None else 0
    params = net.trainable_parameters()
    state = resume if resume is not None else TrainState(optimizer=AdamState.zeros_like(params))
    if state.optimizer.m.keys() != params.keys():
        raise CheckpointError("training state does not match the network's trainable parameters")
    optimizer = Adam(params, learning_rate=config.learning_rate, state=state.optimizer)

    out_dir = Path(checkpoint_dir) if checkpoint_dir is not None else None
    written: list[Path] = []
    fingerprint = net.backbone.fingerprint()

    cached_source = embed_in_batches(net.backbone, source.images) if net.source_path_is_backbone else None

    logger.info(
        f"Training {len(params)} tensors ({sum(t.size for t in params.values())} values), "
        f"variant={net.variant}, plan={net.plan.label()}, epochs {state.epoch + 1}..{config.epochs}"
    )
    for epoch in range(state.epoch + 1, config.epochs + 1):
        batches = make_pairs(
            source,
            target,
            config.batch_size,
            config.genuine_fraction,
            seed,
            epoch=epoch,
            passes=config.epoch_passes,
        )
        total, count = 0.0, 0
        for batch in batches:
            if cached_source is not None:
                e_s = Tensor(cached_source[batch.source_index])
            else:
                e_s = net.embed(source.images[batch.source_index], "source")
            e_t = net.embed(target.images[batch.target_index], "target")
            loss = contrastive_loss(e_s, e_t, batch.labels, config.margin, config.distance)
            loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total += loss.item() * len(batch)
            count += len(batch)

        state.epoch = epoch
        state.history.append(EpochLoss(epoch=epoch, mean_loss=total / count))
        logger.info(f"epoch {epoch}/{config.epochs}: loss {total / count:.5f}")

        if out_dir is not None and config.checkpoint_every and epoch % config.checkpoint_every == 0:
            written.append(save_run(net, state, out_dir / f"epoch_{epoch:03d}"))

    if net.backbone.fingerprint() != fingerprint:
        raise ContractError("backbone parameters changed during training")
    if out_dir is not None:
        written.append(save_run(net, state, out_dir))
    return TrainResult(network=net, state=state, checkpoints=written)
