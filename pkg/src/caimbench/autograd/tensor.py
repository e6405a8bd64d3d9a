"""Dense float64 tensor with tape-based reverse-mode differentiation.

Every operation on a tensor that requires a gradient records its parents and a
backward closure. ``Tensor.backward`` walks the recorded graph once, writes the
gradients of all reachable leaf tensors and then frees the graph.
"""

from __future__ import annotations

import contextlib
from collections.abc import Callable, Iterator, Sequence
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from caimbench.errors import GradientError, ShapeError

Array = NDArray[np.float64]
BackwardFn = Callable[[Array], Sequence[Array | None]]

_grad_enabled = True


@contextlib.contextmanager
def no_grad() -> Iterator[None]:
    """Disable graph recording inside the block."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


def is_grad_enabled() -> bool:
    return _grad_enabled


def _unbroadcast(grad: Array, shape: tuple[int, ...]) -> Array:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    """
    N-dimensional float64 array with an optional gradient.

    Leaf tensors are created by the constructor; every other tensor is the
    result of an operation. Only leaves receive ``grad`` during backward.
    """

    __array_priority__ = 1000  # ndarray <op> Tensor dispatches to Tensor

    def __init__(self, data: ArrayLike, requires_grad: bool = False) -> None:
        self.data: Array = np.array(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Array | None = None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: BackwardFn | None = None
        self._leaf = True
        self._consumed = False
        self._op = "leaf"

    @classmethod
    def _result(
        cls,
        data: Array,
        parents: tuple[Tensor, ...],
        backward: BackwardFn,
        op: str,
    ) -> Tensor:
        out = cls.__new__(cls)
        out.data = np.asarray(data, dtype=np.float64)
        out.grad = None
        out._leaf = False
        out._consumed = False
        out._op = op
        track = _grad_enabled and any(p.requires_grad for p in parents)
        out.requires_grad = track
        out._parents = parents if track else ()
        out._backward = backward if track else None
        return out

    # ------------------------------------------------------------------
    # Introspection
    # ------------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.data.shape)

    @property
    def ndim(self) -> int:
        return int(self.data.ndim)

    @property
    def size(self) -> int:
        return int(self.data.size)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> Array:
        return self.data.copy()

    def detach(self) -> Tensor:
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}, op={self._op!r})"

    def __len__(self) -> int:
        return int(self.data.shape[0])

    # ------------------------------------------------------------------
    # Backward
    # ------------------------------------------------------------------

    def backward(self) -> None:
        """
        Populate ``grad`` on every leaf reachable from this scalar.

        Raises:
            ShapeError: If this tensor is not a scalar
            GradientError: If the graph was already consumed, nothing requires a
                gradient, or a reachable leaf still holds a gradient
        """
        if self.data.size != 1:
            raise ShapeError(f"backward() needs a scalar loss, got shape {self.shape}")
        if self._consumed:
            raise GradientError("graph already consumed by backward(); rebuild the forward pass")
        if not self.requires_grad:
            raise GradientError("loss does not depend on any tensor that requires grad")

        order = self._topological_order()
        for node in order:
            if node._leaf and node.grad is not None:
                raise GradientError(
                    f"leaf {node!r} still holds a gradient; call zero_grad() before backward()"
                )

        grads: dict[int, Array] = {id(self): np.ones_like(self.data)}
        for node in reversed(order):
            grad = grads.pop(id(node), None)
            if grad is None:
                continue
            if node._leaf:
                node.grad = grad
                continue
            assert node._backward is not None
            for parent, parent_grad in zip(node._parents, node._backward(grad), strict=True):
                if parent_grad is None or not parent.requires_grad:
                    continue
                key = id(parent)
                grads[key] = grads[key] + parent_grad if key in grads else parent_grad

        for node in order:
            if not node._leaf:
                node._parents = ()
                node._backward = None
                node._consumed = True

    def _topological_order(self) -> list[Tensor]:
        """Post-order of the graph below this tensor (parents before children)."""
        order: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return order

    # ------------------------------------------------------------------
    # Elementwise arithmetic
    # ------------------------------------------------------------------

    def __add__(self, other: Any) -> Tensor:
        other = as_tensor(other)
        a_shape, b_shape = self.shape, other.shape

        def backward(g: Array) -> tuple[Array, Array]:
            return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

        return Tensor._result(self.data + other.data, (self, other), backward, "add")

    def __radd__(self, other: Any) -> Tensor:
        return as_tensor(other) + self

    def __sub__(self, other: Any) -> Tensor:
        other = as_tensor(other)
        a_shape, b_shape = self.shape, other.shape

        def backward(g: Array) -> tuple[Array, Array]:
            return _unbroadcast(g, a_shape), _unbroadcast(-g, b_shape)

        return Tensor._result(self.data - other.data, (self, other), backward, "sub")

    def __rsub__(self, other: Any) -> Tensor:
        return as_tensor(other) - self

    def __mul__(self, other: Any) -> Tensor:
        other = as_tensor(other)
        a, b = self.data, other.data

        def backward(g: Array) -> tuple[Array, Array]:
            return _unbroadcast(g * b, a.shape), _unbroadcast(g * a, b.shape)

        return Tensor._result(a * b, (self, other), backward, "mul")

    def __rmul__(self, other: Any) -> Tensor:
        return as_tensor(other) * self

    def __truediv__(self, other: Any) -> Tensor:
        other = as_tensor(other)
        a, b = self.data, other.data
        out = a / b

        def backward(g: Array) -> tuple[Array, Array]:
            return _unbroadcast(g / b, a.shape), _unbroadcast(-g * out / b, b.shape)

        return Tensor._result(out, (self, other), backward, "div")

    def __rtruediv__(self, other: Any) -> Tensor:
        return as_tensor(other) / self

    def __neg__(self) -> Tensor:
        def backward(g: Array) -> tuple[Array]:
            return (-g,)

        return Tensor._result(-self.data, (self,), backward, "neg")

    def __pow__(self, exponent: float) -> Tensor:
        if not isinstance(exponent, int | float):
            raise TypeError("only scalar exponents are supported")
        a = self.data

        def backward(g: Array) -> tuple[Array]:
            return (g * exponent * a ** (exponent - 1),)

        return Tensor._result(a**exponent, (self,), backward, "pow")

    def sqrt(self) -> Tensor:
        """Elementwise square root; the derivative at exactly 0 is taken as 0."""
        out = np.sqrt(self.data)

        def backward(g: Array) -> tuple[Array]:
            safe = np.where(out > 0.0, out, 1.0)
            return (np.where(out > 0.0, g / (2.0 * safe), 0.0),)

        return Tensor._result(out, (self,), backward, "sqrt")

    # ------------------------------------------------------------------
    # Reductions and views
    # ------------------------------------------------------------------

    def sum(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        shape = self.shape

        def backward(g: Array) -> tuple[Array]:
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            return (np.broadcast_to(g, shape).copy(),)

        return Tensor._result(self.data.sum(axis=axis, keepdims=keepdims), (self,), backward, "sum")

    def mean(self, axis: int | tuple[int, ...] | None = None, keepdims: bool = False) -> Tensor:
        if axis is None:
            count = self.size
        else:
            axes = (axis,) if isinstance(axis, int) else axis
            count = int(np.prod([self.shape[a] for a in axes]))
        return self.sum(axis=axis, keepdims=keepdims) / float(count)

    def reshape(self, *shape: int) -> Tensor:
        original = self.shape

        def backward(g: Array) -> tuple[Array]:
            return (g.reshape(original),)

        return Tensor._result(self.data.reshape(shape), (self,), backward, "reshape")

    def __getitem__(self, index: Any) -> Tensor:
        original = self.shape

        def backward(g: Array) -> tuple[Array]:
            full = np.zeros(original, dtype=np.float64)
            np.add.at(full, index, g)
            return (full,)

        return Tensor._result(self.data[index], (self,), backward, "index")


def as_tensor(value: Any) -> Tensor:
    """Wrap scalars and arrays as constant tensors; tensors pass through."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)
