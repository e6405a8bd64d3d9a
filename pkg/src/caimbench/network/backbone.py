"""Toy embedding backbone and its softmax pretraining."""

from __future__ import annotations

import hashlib
from collections.abc import Callable, Mapping
from dataclasses import dataclass, field

import numpy as np
from loguru import logger

from caimbench.autograd import (
    Tensor,
    conv2d,
    conv_output_extent,
    dense,
    global_average_pool,
    l2_normalize,
    no_grad,
    relu,
    softmax_cross_entropy,
)
from caimbench.config import DEFAULT_CHANNEL_PLAN, DEFAULT_EMBEDDING_DIM, DEFAULT_RESOLUTION
from caimbench.data_models import EpochLoss, PretrainConfig
from caimbench.errors import CheckpointError, ShapeError
from caimbench.rng import counter_rng

INPUT_CHANNELS = 3
KERNEL = 3
STRIDE = 2
PADDING = 1

StageHook = Callable[[int, Tensor], Tensor]
"""Called with (1-based stage index, stage output); returns the map fed onward."""


def prepare_images(images: np.ndarray | Tensor, resolution: int) -> Tensor:
    """
    Validate a batch of images and replicate single-channel inputs to three channels.

    Raises:
        ShapeError: If the batch is not N×{1,3}×resolution×resolution
    """
    data = images.data if isinstance(images, Tensor) else np.asarray(images, dtype=np.float64)
    if data.ndim == 3:
        data = data[np.newaxis]
    if data.ndim != 4:
        raise ShapeError(f"images must be N×C×H×W, got shape {data.shape}")
    if data.shape[1] not in (1, INPUT_CHANNELS):
        raise ShapeError(f"images must have 1 or 3 channels, got {data.shape[1]}")
    if data.shape[2:] != (resolution, resolution):
        raise ShapeError(f"images must be {resolution}×{resolution}, got {data.shape[2]}×{data.shape[3]}")
    if data.shape[1] == 1:
        data = np.repeat(data, INPUT_CHANNELS, axis=1)
    return Tensor(data)


class FrozenBackbone:
    """
    Stack of stride-2 convolution stages followed by a pooled embedding head.

    Stage i maps C_{i-1}×H×W to C_i×H/2×W/2 with a 3×3 convolution (padding 1)
    and a ReLU. The head pools globally, projects to ``embedding_dim`` and
    L2-normalizes.
    """

    def __init__(
        self,
        stage_weights: list[Tensor],
        stage_biases: list[Tensor],
        head_weight: Tensor,
        head_bias: Tensor,
        resolution: int = DEFAULT_RESOLUTION,
    ) -> None:
        if not stage_weights or len(stage_weights) != len(stage_biases):
            raise ShapeError("backbone needs one weight and one bias per stage")
        in_channels = INPUT_CHANNELS
        for i, (w, b) in enumerate(zip(stage_weights, stage_biases, strict=True), start=1):
            if w.ndim != 4 or w.shape[1:] != (in_channels, KERNEL, KERNEL) or b.shape != (w.shape[0],):
                raise ShapeError(f"stage {i}: weight {w.shape} / bias {b.shape} do not follow {in_channels} inputs")
            in_channels = w.shape[0]
        if head_weight.ndim != 2 or head_weight.shape[1] != in_channels or head_bias.shape != (head_weight.shape[0],):
            raise ShapeError(f"head weight {head_weight.shape} does not follow {in_channels} channels")
        self.stage_weights = stage_weights
        self.stage_biases = stage_biases
        self.head_weight = head_weight
        self.head_bias = head_bias
        self.resolution = resolution

    @classmethod
    def initialize(
        cls,
        rng: np.random.Generator,
        channels: tuple[int, ...] = DEFAULT_CHANNEL_PLAN,
        embedding_dim: int = DEFAULT_EMBEDDING_DIM,
        resolution: int = DEFAULT_RESOLUTION,
    ) -> FrozenBackbone:
        """He-normal convolutions with zero biases; uniform fan-in head. Trainable until frozen."""
        weights, biases = [], []
        in_channels = INPUT_CHANNELS
        for out_channels in channels:
            std = np.sqrt(2.0 / (in_channels * KERNEL * KERNEL))
            weights.append(Tensor(rng.normal(0.0, std, size=(out_channels, in_channels, KERNEL, KERNEL)), True))
            biases.append(Tensor(np.zeros(out_channels), True))
            in_channels = out_channels
        bound = 1.0 / np.sqrt(in_channels)
        head_weight = Tensor(rng.uniform(-bound, bound, size=(embedding_dim, in_channels)), True)
        head_bias = Tensor(np.zeros(embedding_dim), True)
        return cls(weights, biases, head_weight, head_bias, resolution)

    # ------------------------------------------------------------------
    # Geometry
    # ------------------------------------------------------------------

    @property
    def n_stages(self) -> int:
        return len(self.stage_weights)

    @property
    def channels(self) -> tuple[int, ...]:
        return tuple(w.shape[0] for w in self.stage_weights)

    @property
    def embedding_dim(self) -> int:
        return self.head_weight.shape[0]

    def stage_shapes(self) -> list[tuple[int, int, int]]:
        """C×H×W of every stage output, in stage order."""
        shapes = []
        extent = self.resolution
        for c in self.channels:
            extent = conv_output_extent(extent, KERNEL, STRIDE, PADDING)
            shapes.append((c, extent, extent))
        return shapes

    def cost(self) -> tuple[int, int]:
        """(params, flops) of the backbone, counting 2 FLOPs per conv and dense MAC."""
        params = sum(t.size for t in self.parameters().values())
        macs = 0
        in_channels = INPUT_CHANNELS
        for c, h, w in self.stage_shapes():
            macs += c * in_channels * KERNEL * KERNEL * h * w
            in_channels = c
        macs += self.embedding_dim * in_channels
        return params, 2 * macs

    # ------------------------------------------------------------------
    # Forward
    # ------------------------------------------------------------------

    def features(self, images: np.ndarray | Tensor, hook: StageHook | None = None) -> Tensor:
        """Un-normalized head output; ``hook`` sees every stage output."""
        x = prepare_images(images, self.resolution)
        for i, (w, b) in enumerate(zip(self.stage_weights, self.stage_biases, strict=True), start=1):
            x = relu(conv2d(x, w, b, stride=STRIDE, padding=PADDING))
            if hook is not None:
                x = hook(i, x)
        return dense(global_average_pool(x), self.head_weight, self.head_bias)

    def embed(self, images: np.ndarray | Tensor, hook: StageHook | None = None) -> Tensor:
        """Unit-norm N×embedding_dim embeddings."""
        return l2_normalize(self.features(images, hook))

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------

    def parameters(self) -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for i, (w, b) in enumerate(zip(self.stage_weights, self.stage_biases, strict=True), start=1):
            params[f"backbone/stage{i}/weight"] = w
            params[f"backbone/stage{i}/bias"] = b
        params["backbone/head/weight"] = self.head_weight
        params["backbone/head/bias"] = self.head_bias
        return params

    @property
    def frozen(self) -> bool:
        return not any(t.requires_grad for t in self.parameters().values())

    def freeze(self) -> FrozenBackbone:
        for tensor in self.parameters().values():
            tensor.requires_grad = False
            tensor.zero_grad()
        return self

    def state_dict(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.parameters().items()}

    @classmethod
    def from_state_dict(cls, state: Mapping[str, np.ndarray], resolution: int = DEFAULT_RESOLUTION) -> FrozenBackbone:
        """
        Rebuild a frozen backbone from ``backbone/*`` entries.

        Raises:
            CheckpointError: If stage or head entries are missing
        """
        weights, biases = [], []
        i = 1
        while f"backbone/stage{i}/weight" in state:
            bias_name = f"backbone/stage{i}/bias"
            if bias_name not in state:
                raise CheckpointError(f"checkpoint is missing {bias_name}")
            weights.append(Tensor(state[f"backbone/stage{i}/weight"]))
            biases.append(Tensor(state[bias_name]))
            i += 1
        for name in ("backbone/head/weight", "backbone/head/bias"):
            if name not in state:
                raise CheckpointError(f"checkpoint is missing {name}")
        if not weights:
            raise CheckpointError("checkpoint holds no backbone stages")
        try:
            return cls(weights, biases, Tensor(state["backbone/head/weight"]), Tensor(state["backbone/head/bias"]), resolution)
        except ShapeError as e:
            raise CheckpointError(f"inconsistent backbone entries: {e}") from e

    def fingerprint(self) -> str:
        """SHA-256 over parameter names and raw little-endian bytes."""
        digest = hashlib.sha256()
        for name, tensor in sorted(self.parameters().items()):
            digest.update(name.encode("utf-8"))
            digest.update(np.ascontiguousarray(tensor.data, dtype="<f8").tobytes())
        return digest.hexdigest()

    def __repr__(self) -> str:
        return (
            f"FrozenBackbone(channels={list(self.channels)}, embedding_dim={self.embedding_dim}, "
            f"resolution={self.resolution}, frozen={self.frozen})"
        )


@dataclass
class PretrainResult:
    backbone: FrozenBackbone
    losses: list[EpochLoss] = field(default_factory=list)


def pretrain_backbone(
    images: np.ndarray,
    labels: np.ndarray,
    config: PretrainConfig,
    seed: int,
    channels: tuple[int, ...] = DEFAULT_CHANNEL_PLAN,
    embedding_dim: int = DEFAULT_EMBEDDING_DIM,
) -> PretrainResult:
    """
    Train a backbone with a temporary softmax classifier, then discard the classifier and freeze.

    Args:
        images: N×{1,3}×R×R source-modality images
        labels: N identity labels
        config: Epochs, learning rate and batch size
        seed: Effective pretraining seed
        channels: Stage channel plan
        embedding_dim: Embedding size

    Returns:
        PretrainResult with the frozen backbone and per-epoch mean losses

    Raises:
        ValueError: If fewer than two identities are present
    """
    from caimbench.training.optim import Adam

    labels = np.asarray(labels)
    classes, targets = np.unique(labels, return_inverse=True)
    if len(classes) < 2:
        raise ValueError(f"pretraining needs at least 2 identities, got {len(classes)}")
    if len(images) != len(labels):
        raise ShapeError(f"{len(images)} images but {len(labels)} labels")

    resolution = int(np.asarray(images).shape[-1])
    init_rng = counter_rng(seed, 0)
    backbone = FrozenBackbone.initialize(init_rng, channels, embedding_dim, resolution)
    bound = 1.0 / np.sqrt(embedding_dim)
    classifier_weight = Tensor(init_rng.uniform(-bound, bound, size=(len(classes), embedding_dim)), True)
    classifier_bias = Tensor(np.zeros(len(classes)), True)

    params = {
        **backbone.parameters(),
        "classifier/weight": classifier_weight,
        "classifier/bias": classifier_bias,
    }
    optimizer = Adam(params, learning_rate=config.learning_rate)
    logger.info(
        f"Pretraining backbone on {len(images)} images of {len(classes)} identities "
        f"for {config.epochs} epochs"
    )

    losses: list[EpochLoss] = []
    n = len(images)
    for epoch in range(1, config.epochs + 1):
        order = counter_rng(seed, 1, epoch).permutation(n)
        total, count = 0.0, 0
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            features = backbone.features(images[batch])
            logits = dense(features, classifier_weight, classifier_bias)
            loss = softmax_cross_entropy(logits, targets[batch])
            loss.backward()
            optimizer.step()
            optimizer.zero_grad()
            total += loss.item() * len(batch)
            count += len(batch)
        losses.append(EpochLoss(epoch=epoch, mean_loss=total / count))
        logger.debug(f"pretrain epoch {epoch}: loss {total / count:.4f}")

    backbone.freeze()
    if losses:
        logger.info(f"Pretraining finished: final loss {losses[-1].mean_loss:.4f}")
    return PretrainResult(backbone=backbone, losses=losses)


def embed_in_batches(backbone: FrozenBackbone, images: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Gradient-free embeddings of a large image array."""
    with no_grad():
        chunks = [backbone.embed(images[i : i + batch_size]).data for i in range(0, len(images), batch_size)]
    return np.concatenate(chunks) if chunks else np.zeros((0, backbone.embedding_dim))
