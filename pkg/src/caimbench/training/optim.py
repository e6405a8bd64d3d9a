"""Adam optimizer over named tensors."""

from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from caimbench.autograd import Tensor
from caimbench.config import ADAM_BETA1, ADAM_BETA2, ADAM_EPS
from caimbench.errors import ShapeError


@dataclass
class AdamState:
    """First and second moment buffers per parameter name, plus the step count."""

    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros_like(cls, params: Mapping[str, Tensor]) -> AdamState:
        return cls(
            step=0,
            m={name: np.zeros(t.shape) for name, t in params.items()},
            v={name: np.zeros(t.shape) for name, t in params.items()},
        )

    def state_dict(self) -> dict[str, np.ndarray]:
        """Flat ``optim/*`` entries for the checkpoint container."""
        entries: dict[str, np.ndarray] = {"optim/step": np.array([self.step], dtype=np.int64)}
        for name in self.m:
            entries[f"optim/m/{name}"] = self.m[name]
            entries[f"optim/v/{name}"] = self.v[name]
        return entries

    @classmethod
    def from_state_dict(cls, entries: Mapping[str, np.ndarray]) -> AdamState:
        state = cls(step=int(np.asarray(entries["optim/step"]).reshape(-1)[0]))
        for key, value in entries.items():
            if key.startswith("optim/m/"):
                state.m[key.removeprefix("optim/m/")] = np.asarray(value, dtype=np.float64)
            elif key.startswith("optim/v/"):
                state.v[key.removeprefix("optim/v/")] = np.asarray(value, dtype=np.float64)
        return state


def adam_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray | None],
    state: AdamState,
    learning_rate: float,
    beta1: float = ADAM_BETA1,
    beta2: float = ADAM_BETA2,
    eps: float = ADAM_EPS,
) -> None:
    """
    One bias-corrected Adam update, in place.

    A missing gradient counts as zero.

    Raises:
        ShapeError: If a parameter, gradient and moment buffer disagree in shape
        KeyError: If the state has no buffers for a parameter
    """
    state.step += 1
    t = state.step
    for name, param in params.items():
        grad = grads.get(name)
        g = np.zeros(param.shape) if grad is None else grad
        m, v = state.m[name], state.v[name]
        if g.shape != param.shape or m.shape != param.shape or v.shape != param.shape:
            raise ShapeError(
                f"adam: {name} has shape {param.shape}, grad {g.shape}, moments {m.shape}/{v.shape}"
            )
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / (1.0 - beta1**t)
        v_hat = v / (1.0 - beta2**t)
        param.data -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)


class Adam:
    """Adam bound to a fixed set of named parameters."""

    def __init__(
        self,
        params: Mapping[str, Tensor],
        learning_rate: float,
        state: AdamState | None = None,
    ) -> None:
        self.params = dict(params)
        self.learning_rate = learning_rate
        self.state = state if state is not None else AdamState.zeros_like(self.params)
        missing = self.params.keys() - self.state.m.keys()
        if missing:
            raise KeyError(f"optimizer state has no moments for {sorted(missing)}")

    def step(self) -> None:
        adam_step(self.params, {n: p.grad for n, p in self.params.items()}, self.state, self.learning_rate)

    def zero_grad(self) -> None:
        for param in self.params.values():
            param.zero_grad()
