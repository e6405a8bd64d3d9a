"""Frozen backbone plus gated style modulation blocks."""

from __future__ import annotations

from collections.abc import Mapping

import numpy as np

from caimbench.autograd import Tensor, no_grad
from caimbench.data_models import InsertionPlan, NetworkCost, Variant
from caimbench.errors import CheckpointError, ContractError
from caimbench.modulation import (
    CaimBlock,
    Gate,
    InstanceNormParams,
    Modality,
    block_cost,
    caim_forward,
    instance_norm,
    unconditional_forward,
)
from caimbench.modulation.caim import PARAMETER_NAMES
from caimbench.network.backbone import FrozenBackbone, StageHook
from caimbench.rng import counter_rng

VARIANTS: tuple[Variant, ...] = ("caim", "aim", "in")


class HfrNetwork:
    """
    A frozen backbone with one modulation module after each planned stage.

    ``variant`` selects what sits at each position:

    - ``caim``: a gated CaimBlock; the source path is the bare backbone.
    - ``aim``: the same block applied unconditionally, without residual.
    - ``in``: instance normalization with learnable affine parameters,
      applied unconditionally.
    """

    def __init__(
        self,
        backbone: FrozenBackbone,
        plan: InsertionPlan,
        blocks: Mapping[int, CaimBlock] | None = None,
        norms: Mapping[int, InstanceNormParams] | None = None,
        variant: Variant = "caim",
    ) -> None:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
        _check_plan(backbone, plan)
        self.backbone = backbone
        self.plan = plan
        self.variant: Variant = variant
        self.blocks: dict[int, CaimBlock] = dict(blocks or {})
        self.norms: dict[int, InstanceNormParams] = dict(norms or {})
        modules = self.norms if variant == "in" else self.blocks
        if set(modules) != set(plan.positions) or (self.blocks and self.norms):
            raise ValueError(
                f"{variant} network needs exactly one module per plan position {list(plan.positions)}"
            )
        stage_channels = backbone.channels
        for position, module in modules.items():
            if module.channels != stage_channels[position - 1]:
                raise ValueError(
                    f"module at position {position} has {module.channels} channels, "
                    f"stage output has {stage_channels[position - 1]}"
                )

    # ------------------------------------------------------------------
    # Forward
    # ------------------------------------------------------------------

    def _hook(self, gate: Gate) -> StageHook:
        def apply(position: int, f: Tensor) -> Tensor:
            if position not in self.plan:
                return f
            if self.variant == "caim":
                return caim_forward(self.blocks[position], f, gate)
            if self.variant == "aim":
                return unconditional_forward(f, "aim", self.blocks[position])
            return instance_norm(f, self.norms[position])

        return apply

    def embed(self, images: np.ndarray | Tensor, modality: Modality) -> Tensor:
        """
        Unit-norm embeddings of a batch of one modality.

        1-channel images are replicated to 3 channels. For the caim variant,
        source-modality embeddings are exactly the bare backbone's.
        """
        gate = Gate.for_modality(modality)
        return self.backbone.embed(images, self._hook(gate))

    def embed_array(self, images: np.ndarray, modality: Modality, batch_size: int = 256) -> np.ndarray:
        """Gradient-free embeddings of a large image array."""
        with no_grad():
            chunks = [
                self.embed(images[i : i + batch_size], modality).data
                for i in range(0, len(images), batch_size)
            ]
        return np.concatenate(chunks) if chunks else np.zeros((0, self.backbone.embedding_dim))

    @property
    def source_path_is_backbone(self) -> bool:
        """True when source embeddings cannot differ from the bare backbone."""
        return self.variant == "caim" or not self.plan.positions

    # ------------------------------------------------------------------
    # Parameters
    # ------------------------------------------------------------------

    def trainable_parameters(self) -> dict[str, Tensor]:
        """Every trainable tensor, named ``caim/<position>/<parameter>``."""
        params: dict[str, Tensor] = {}
        for position, block in sorted(self.blocks.items()):
            for name, tensor in block.parameters().items():
                params[f"caim/{position}/{name}"] = tensor
        for position, norm in sorted(self.norms.items()):
            params[f"caim/{position}/gamma"] = norm.gamma
            params[f"caim/{position}/beta"] = norm.beta
        return params

    def state_dict(self) -> dict[str, np.ndarray]:
        state = self.backbone.state_dict()
        state.update({name: t.data.copy() for name, t in self.trainable_parameters().items()})
        return state

    def load_trainable(self, state: Mapping[str, np.ndarray]) -> None:
        """Overwrite trainable values in place from ``caim/*`` entries."""
        for name, tensor in self.trainable_parameters().items():
            if name not in state:
                raise CheckpointError(f"checkpoint is missing {name}")
            value = np.asarray(state[name], dtype=np.float64)
            if value.shape != tensor.shape:
                raise CheckpointError(f"{name}: checkpoint shape {value.shape}, network shape {tensor.shape}")
            tensor.data[...] = value

    @classmethod
    def from_state_dict(
        cls,
        state: Mapping[str, np.ndarray],
        variant: Variant = "caim",
        resolution: int | None = None,
    ) -> HfrNetwork:
        """
        Rebuild a network; the plan is read from the ``caim/<position>/*`` names.

        Raises:
            CheckpointError: On unknown entry names or incomplete blocks
        """
        backbone = (
            FrozenBackbone.from_state_dict(state)
            if resolution is None
            else FrozenBackbone.from_state_dict(state, resolution)
        )
        grouped: dict[int, dict[str, np.ndarray]] = {}
        for name, value in state.items():
            if name.startswith("backbone/"):
                continue
            parts = name.split("/")
            if len(parts) != 3 or parts[0] != "caim" or not parts[1].isdigit():
                raise CheckpointError(f"unexpected checkpoint entry {name!r}")
            grouped.setdefault(int(parts[1]), {})[parts[2]] = value
        plan = InsertionPlan(positions=tuple(sorted(grouped)))

        if variant == "in":
            norms = {}
            for position, entries in grouped.items():
                if set(entries) != {"gamma", "beta"}:
                    raise CheckpointError(f"caim/{position} must hold gamma and beta, got {sorted(entries)}")
                norm = InstanceNormParams.learnable(len(entries["gamma"]))
                norm.gamma.data[...] = entries["gamma"]
                norm.beta.data[...] = entries["beta"]
                norms[position] = norm
            return cls(backbone, plan, norms=norms, variant=variant)

        blocks = {}
        for position, entries in grouped.items():
            if set(entries) != set(PARAMETER_NAMES):
                raise CheckpointError(f"caim/{position} entries {sorted(entries)} are not a CaimBlock")
            channels = int(np.asarray(entries["conv1_bias"]).shape[0])
            blocks[position] = CaimBlock(channels, **{k: Tensor(v) for k, v in entries.items()})
        return cls(backbone, plan, blocks=blocks, variant=variant)

    def require_trainable(self) -> None:
        """
        Enforce the training contract.

        Raises:
            ContractError: If the backbone is not frozen or nothing is trainable
        """
        if not self.backbone.frozen:
            raise ContractError("backbone is not frozen; refusing to train")
        if not self.trainable_parameters():
            raise ContractError("nothing trainable: the insertion plan is empty")

    def __repr__(self) -> str:
        return f"HfrNetwork(variant={self.variant}, plan={self.plan.label()}, backbone={self.backbone!r})"


def _check_plan(backbone: FrozenBackbone, plan: InsertionPlan) -> None:
    for position in plan.positions:
        if position > backbone.n_stages:
            raise ValueError(
                f"insertion position {position} is out of range for a {backbone.n_stages}-stage backbone"
            )


def insert_caim(
    backbone: FrozenBackbone,
    plan: InsertionPlan,
    seed: int,
    variant: Variant = "caim",
) -> HfrNetwork:
    """
    Place freshly initialized modules after the planned stages.

    Each block is seeded from (seed, position), so a block's initial values do
    not depend on which other positions are planned.

    Raises:
        ValueError: If a position exceeds the number of stages
    """
    _check_plan(backbone, plan)
    channels = backbone.channels
    if variant == "in":
        norms = {p: InstanceNormParams.learnable(channels[p - 1]) for p in plan.positions}
        return HfrNetwork(backbone, plan, norms=norms, variant=variant)
    blocks = {p: CaimBlock.initialize(channels[p - 1], counter_rng(seed, p)) for p in plan.positions}
    return HfrNetwork(backbone, plan, blocks=blocks, variant=variant)


def count_network_cost(net: HfrNetwork, input_resolution: int | None = None) -> NetworkCost:
    """
    Backbone cost and the cost added by the inserted modules.

    Instance-norm modules count 2 parameters and 4 FLOPs per channel element.
    """
    backbone = net.backbone
    if input_resolution is not None and input_resolution != backbone.resolution:
        backbone = FrozenBackbone(
            backbone.stage_weights, backbone.stage_biases, backbone.head_weight, backbone.head_bias, input_resolution
        )
    backbone_params, backbone_flops = backbone.cost()
    shapes = backbone.stage_shapes()
    caim_params = caim_flops = 0
    for position in net.plan.positions:
        c, h, w = shapes[position - 1]
        if net.variant == "in":
            caim_params += 2 * c
            caim_flops += 4 * c * h * w
        else:
            cost = block_cost(c, h, w)
            caim_params += cost.params
            caim_flops += cost.flops
    return NetworkCost(
        backbone_params=backbone_params,
        backbone_flops=backbone_flops,
        caim_params=caim_params,
        caim_flops=caim_flops,
    )


def source_identity_check(net: HfrNetwork, images: np.ndarray) -> bool:
    """Whether source-modality embeddings equal the bare backbone's, bit for bit."""
    with no_grad():
        bare = net.backbone.embed(images).data
        routed = net.embed(images, "source").data
    return bool(np.array_equal(bare, routed))

