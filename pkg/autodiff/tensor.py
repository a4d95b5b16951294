"""Tensor values and the reverse-mode graph they form."""

from __future__ import annotations

import contextlib
import threading
import typing

import numpy as np

from errors import InvalidInput, ShapeError, VocoderError

_grad_state = threading.local()


def is_grad_enabled() -> bool:
    return getattr(_grad_state, 'enabled', True)


@contextlib.contextmanager
def no_grad():
    """Operations inside the block record no backward recipe.
    Applies to the calling thread only."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


def unbroadcast(grad: np.ndarray, shape: typing.Tuple[int, ...]) -> np.ndarray:
    """Sum `grad` down to `shape`, undoing numpy broadcasting."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad.reshape(shape)


class Tensor:
    """A node in the differentiation graph.

    `value` holds the data, `grad` (float64, same shape) is filled in for
    leaves that require a gradient when backward() runs on a scalar that
    depends on them."""
    def __init__(self, value, requires_grad: bool = False,
                 _ctx: typing.Optional[Function] = None, name: str = None):
        value = np.asarray(value)
        if not np.issubdtype(value.dtype, np.floating):
            value = value.astype(np.float64)
        self.value = value
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._ctx = _ctx

    def __repr__(self) -> str:
        label = f' {self.name}' if self.name else ''
        return f'<Tensor{label} {self.shape} {self.value.dtype}{" grad" if self.requires_grad else ""}>'

    @property
    def shape(self) -> typing.Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return self.value.size

    @property
    def is_leaf(self) -> bool:
        return self._ctx is None

    def item(self) -> float:
        return float(self.value.reshape(-1)[0]) if self.value.size == 1 else float(self.value)

    def numpy(self) -> np.ndarray:
        return self.value

    def zero_grad(self):
        self.grad = None

    def gradient(self) -> np.ndarray:
        """The accumulated gradient, zeros if backward never reached this tensor."""
        if self.grad is None:
            return np.zeros(self.shape, dtype=np.float64)
        return self.grad

    def _topological_order(self) -> typing.List[Tensor]:
        """Nodes reachable from self that need a gradient, inputs before outputs."""
        order = []
        visited = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            if node._ctx is not None:
                for parent in node._ctx.parents:
                    if parent.requires_grad and id(parent) not in visited:
                        stack.append((parent, False))
        return order

    def backward(self):
        """Accumulate d(self)/d(leaf) into every reachable leaf's grad."""
        if self.value.size != 1:
            raise InvalidInput(f'backward needs a scalar, got shape {self.shape}')
        if not self.requires_grad:
            return
        pending = {id(self): np.ones(self.shape, dtype=np.float64)}
        for node in reversed(self._topological_order()):
            grad = pending.pop(id(node), None)
            if grad is None:
                continue
            if node._ctx is None:
                node.grad = grad if node.grad is None else node.grad + grad
                continue
            for parent, parent_grad in zip(node._ctx.parents, node._ctx.backward(grad)):
                if parent_grad is None or not parent.requires_grad:
                    continue
                parent_grad = unbroadcast(np.asarray(parent_grad, dtype=np.float64), parent.shape)
                if id(parent) in pending:
                    pending[id(parent)] = pending[id(parent)] + parent_grad
                else:
                    pending[id(parent)] = parent_grad

    # Operator sugar; the implementations live in autodiff.ops.
    def __add__(self, other):
        from autodiff import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from autodiff import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from autodiff import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from autodiff import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from autodiff import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from autodiff import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from autodiff import ops
        return ops.div(self, other)

    def __rtruediv__(self, other):
        from autodiff import ops
        return ops.div(other, self)

    def __neg__(self):
        from autodiff import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from autodiff import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from autodiff import ops
        return ops.index(self, index)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


class Function:
    """One differentiable operation. Subclasses implement forward() on
    numpy values and backward() returning one gradient (or None) per input."""
    def __init__(self, parents: typing.Sequence[Tensor], **options):
        self.parents = tuple(parents)
        self.options = options

    @classmethod
    def apply(cls, *inputs, **options) -> Tensor:
        tensors = [as_tensor(x) for x in inputs]
        fn = cls(tensors, **options)
        try:
            value = fn.forward(*[t.value for t in tensors])
        except VocoderError:
            raise
        except ValueError as e:
            raise ShapeError(f'{cls.__name__}: {e}') from e
        needs_grad = is_grad_enabled() and any(t.requires_grad for t in tensors)
        return Tensor(value, requires_grad=needs_grad, _ctx=fn if needs_grad else None)

    def forward(self, *values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def backward(self, grad: np.ndarray) -> typing.Sequence[typing.Optional[np.ndarray]]:
        raise NotImplementedError
