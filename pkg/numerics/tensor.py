"""Tensor

A module for dense float64 tensors with tape-based reverse-mode differentiation.

Every op returns a new Tensor holding its parents and a backward rule. The tape
for a loss is recovered by a topological walk from the loss back to the leaves,
so no global recorder is needed and separate threads never share a tape.
"""
from __future__ import annotations

import threading
from contextlib import contextmanager
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from includes.exceptions import DimensionError

_state = threading.local()


def grad_enabled() -> bool:
    return getattr(_state, "enabled", True)


@contextmanager
def no_grad():
    """Disable graph recording for the current thread"""
    previous = grad_enabled()
    _state.enabled = False
    try:
        yield
    finally:
        _state.enabled = previous


def _unbroadcast(grad: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``"""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def as_tensor(value) -> "Tensor":
    return value if isinstance(value, Tensor) else Tensor(value)


class Tensor:
    """Tensor
    Dense float64 array with an optional gradient

    Args:
        data (array-like): values, copied into a float64 array
        requires_grad (bool, optional): track gradients for this tensor
        name (str, optional): label used in diagnostics
    """
    __array_ufunc__ = None

    def __init__(self, data, requires_grad: bool = False, name: str = "",
                 _parents: Sequence["Tensor"] = (), _op: str = "", _copy: bool = True):
        if not isinstance(requires_grad, bool):
            raise TypeError(f"Unexpected type for requires_grad: {type(requires_grad)}. "
                            "Expected: bool")
        if _copy:
            self.__data = np.array(data, dtype=np.float64)
        else:
            self.__data = np.asarray(data, dtype=np.float64)
        self.__requires_grad = requires_grad
        self.__grad = None
        self.name = name
        self._parents = tuple(_parents)
        self._backward: Callable[[np.ndarray], None] | None = None
        self._op = _op

    @property
    def data(self) -> np.ndarray:
        return self.__data

    @data.setter
    def data(self, value):
        value = np.asarray(value, dtype=np.float64)
        if value.shape != self.__data.shape:
            raise DimensionError("cannot assign data of another shape",
                                 self.__data.shape, value.shape)
        self.__data = value.copy()

    @property
    def grad(self) -> np.ndarray | None:
        return self.__grad

    @grad.setter
    def grad(self, value):
        self.__grad = None if value is None else np.asarray(value, dtype=np.float64)

    @property
    def requires_grad(self) -> bool:
        return self.__requires_grad

    @property
    def shape(self) -> tuple:
        return self.__data.shape

    @property
    def ndim(self) -> int:
        return self.__data.ndim

    @property
    def size(self) -> int:
        return self.__data.size

    @property
    def values(self) -> np.ndarray:
        """Flat view of the values"""
        return self.__data.reshape(-1)

    def numpy(self) -> np.ndarray:
        return self.__data

    def item(self) -> float:
        if self.__data.size != 1:
            raise DimensionError("item() needs a single value", self.shape)
        return float(self.__data.reshape(-1)[0])

    def zero_grad(self):
        self.__grad = None

    def accumulate(self, grad: np.ndarray):
        """Add ``grad`` into this tensor's gradient"""
        if not self.__requires_grad:
            return
        grad = _unbroadcast(np.asarray(grad, dtype=np.float64), self.shape)
        if self.__grad is None:
            self.__grad = np.array(grad, dtype=np.float64)
        else:
            self.__grad = self.__grad + grad

    def __repr__(self):
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    # graph construction

    @staticmethod
    def make(data: np.ndarray, parents: Sequence["Tensor"], op: str,
             backward: Callable[[np.ndarray], None]) -> "Tensor":
        """Create an op output, recording the backward rule when needed"""
        track = grad_enabled() and any(p.requires_grad for p in parents)
        out = Tensor(data, requires_grad=track, _parents=parents if track else (), _op=op,
                     _copy=False)
        if track:
            out._backward = backward
        return out

    # arithmetic

    def __add__(self, other) -> "Tensor":
        other = as_tensor(other)
        def backward(grad):
            self.accumulate(grad)
            other.accumulate(grad)
        return Tensor.make(self.data + other.data, (self, other), "add", backward)

    __radd__ = __add__

    def __neg__(self) -> "Tensor":
        return Tensor.make(-self.data, (self,), "neg", lambda grad: self.accumulate(-grad))

    def __sub__(self, other) -> "Tensor":
        return self + (-as_tensor(other))

    def __rsub__(self, other) -> "Tensor":
        return as_tensor(other) + (-self)

    def __mul__(self, other) -> "Tensor":
        other = as_tensor(other)
        def backward(grad):
            self.accumulate(grad * other.data)
            other.accumulate(grad * self.data)
        return Tensor.make(self.data * other.data, (self, other), "mul", backward)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Tensor":
        other = as_tensor(other)
        def backward(grad):
            self.accumulate(grad / other.data)
            other.accumulate(-grad * self.data / (other.data * other.data))
        return Tensor.make(self.data / other.data, (self, other), "div", backward)

    def __rtruediv__(self, other) -> "Tensor":
        return as_tensor(other) / self

    def __pow__(self, exponent: float) -> "Tensor":
        if not isinstance(exponent, int | float):
            raise TypeError(f"Unexpected type for exponent: {type(exponent)}. "
                            "Expected: int, float")
        def backward(grad):
            self.accumulate(grad * exponent * self.data ** (exponent - 1))
        return Tensor.make(self.data ** exponent, (self,), "pow", backward)

    def __matmul__(self, other) -> "Tensor":
        return matmul(self, other)

    def __getitem__(self, key) -> "Tensor":
        def backward(grad):
            full = np.zeros_like(self.data)
            np.add.at(full, key, grad)
            self.accumulate(full)
        return Tensor.make(self.data[key], (self,), "index", backward)

    # elementwise

    def exp(self) -> "Tensor":
        out_data = np.exp(self.data)
        return Tensor.make(out_data, (self,), "exp",
                           lambda grad: self.accumulate(grad * out_data))

    def log(self) -> "Tensor":
        return Tensor.make(np.log(self.data), (self,), "log",
                           lambda grad: self.accumulate(grad / self.data))

    def log1p(self) -> "Tensor":
        return Tensor.make(np.log1p(self.data), (self,), "log1p",
                           lambda grad: self.accumulate(grad / (1.0 + self.data)))

    def tanh(self) -> "Tensor":
        out_data = np.tanh(self.data)
        return Tensor.make(out_data, (self,), "tanh",
                           lambda grad: self.accumulate(grad * (1.0 - out_data ** 2)))

    # reductions and shape

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        def backward(grad):
            if axis is not None and not keepdims:
                grad = np.expand_dims(grad, axis)
            self.accumulate(np.broadcast_to(grad, self.shape))
        return Tensor.make(self.data.sum(axis=axis, keepdims=keepdims), (self,), "sum", backward)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        count = self.size if axis is None else int(np.prod([self.shape[a] for a in np.atleast_1d(axis)]))
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / count)

    def reshape(self, *shape) -> "Tensor":
        if len(shape) == 1 and isinstance(shape[0], tuple | list):
            shape = tuple(shape[0])
        old_shape = self.shape
        return Tensor.make(self.data.reshape(shape), (self,), "reshape",
                           lambda grad: self.accumulate(grad.reshape(old_shape)))

    def transpose(self, *axes) -> "Tensor":
        axes = axes if axes else tuple(reversed(range(self.ndim)))
        inverse = tuple(np.argsort(axes))
        return Tensor.make(self.data.transpose(axes), (self,), "transpose",
                           lambda grad: self.accumulate(grad.transpose(inverse)))

    def swapaxes(self, first: int, second: int) -> "Tensor":
        return Tensor.make(np.swapaxes(self.data, first, second), (self,), "swapaxes",
                           lambda grad: self.accumulate(np.swapaxes(grad, first, second)))

    @property
    def T(self) -> "Tensor":
        return self.swapaxes(-1, -2)


class Tape:
    """Tape
    Ops reachable from a root tensor, parents before children
    """
    def __init__(self, nodes: Sequence[Tensor]):
        self.__nodes = list(nodes)

    @classmethod
    def record(cls, root: Tensor) -> "Tape":
        nodes, seen = [], set()
        stack = [(root, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                nodes.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in reversed(node._parents):
                if parent.requires_grad and id(parent) not in seen:
                    stack.append((parent, False))
        return cls(nodes)

    @property
    def nodes(self) -> list:
        return list(self.__nodes)

    def __len__(self):
        return len(self.__nodes)

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self.__nodes)

    def run(self, seed: np.ndarray):
        """Propagate ``seed`` from the root back to every leaf"""
        root = self.__nodes[-1]
        intermediates = [node for node in self.__nodes if node._backward is not None]
        for node in intermediates:
            node.zero_grad()
        root.accumulate(seed)
        for node in reversed(self.__nodes):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)


def backward(loss: Tensor) -> Tape:
    """Populate ``grad`` on every leaf that requires it

    Args:
        loss (Tensor): scalar tensor

    Returns:
        Tape: the tape that was run
    """
    if not isinstance(loss, Tensor):
        raise TypeError(f"Unexpected type for loss: {type(loss)}. Expected: Tensor")
    if loss.size != 1:
        raise DimensionError("backward needs a scalar loss", loss.shape)
    tape = Tape.record(loss)
    if loss.requires_grad:
        tape.run(np.ones_like(loss.data))
    return tape


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product over the last two axes, broadcasting leading ones

    Raises:
        DimensionError: inner dimensions differ
    """
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim < 2 or b.ndim < 2 or a.shape[-1] != b.shape[-2]:
        raise DimensionError("matmul inner dimensions differ", a.shape, b.shape)
    def backward(grad):
        a.accumulate(grad @ np.swapaxes(b.data, -1, -2))
        b.accumulate(np.swapaxes(a.data, -1, -2) @ grad)
    return Tensor.make(a.data @ b.data, (a, b), "matmul", backward)


def einsum(subscripts: str, a: Tensor, b: Tensor) -> Tensor:
    """Two-operand einsum

    Every index of an operand must also occur in the other operand or the output.
    """
    a, b = as_tensor(a), as_tensor(b)
    inputs, output = subscripts.replace(" ", "").split("->")
    left, right = inputs.split(",")
    for own, other in ((left, right), (right, left)):
        if set(own) - set(other) - set(output):
            raise DimensionError(f"einsum index summed in one operand only: {subscripts}")
    try:
        out_data = np.einsum(subscripts, a.data, b.data)
    except ValueError as error:
        raise DimensionError(f"einsum {subscripts}: {error}", a.shape, b.shape) from error
    def backward(grad):
        if a.requires_grad:
            a.accumulate(np.einsum(f"{output},{right}->{left}", grad, b.data))
        if b.requires_grad:
            b.accumulate(np.einsum(f"{output},{left}->{right}", grad, a.data))
    return Tensor.make(out_data, (a, b), "einsum", backward)


def concat(tensors: Iterable[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    def backward(grad):
        for tensor, part in zip(tensors, np.split(grad, splits, axis=axis)):
            tensor.accumulate(part)
    return Tensor.make(np.concatenate([t.data for t in tensors], axis=axis),
                       tensors, "concat", backward)


def stack(tensors: Iterable[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    def backward(grad):
        for index, tensor in enumerate(tensors):
            tensor.accumulate(np.take(grad, index, axis=axis))
    return Tensor.make(np.stack([t.data for t in tensors], axis=axis),
                       tensors, "stack", backward)


def gather_rows(table: Tensor, indices) -> Tensor:
    """Look rows of ``table`` up by index

    Args:
        table (Tensor): R x d table
        indices (array-like): integer indices of any shape

    Returns:
        Tensor: ``indices.shape + (d,)``

    Raises:
        IndexError: an index falls outside ``[0, R)``
    """
    indices = np.asarray(indices)
    if indices.size and not np.issubdtype(indices.dtype, np.integer):
        raise TypeError(f"Unexpected type for indices: {indices.dtype}. Expected: integer")
    indices = indices.astype(np.int64)
    rows = table.shape[0]
    bad = indices[(indices < 0) | (indices >= rows)]
    if bad.size:
        raise IndexError(f"index {int(bad.reshape(-1)[0])} out of range for table with {rows} rows")
    def backward(grad):
        full = np.zeros_like(table.data)
        np.add.at(full, indices.reshape(-1), grad.reshape(-1, table.shape[-1]))
        table.accumulate(full)
    return Tensor.make(table.data[indices], (table,), "gather_rows", backward)


def where(condition, a: Tensor, b: Tensor) -> Tensor:
    condition = np.asarray(condition, dtype=bool)
    a, b = as_tensor(a), as_tensor(b)
    def backward(grad):
        a.accumulate(np.where(condition, grad, 0.0))
        b.accumulate(np.where(condition, 0.0, grad))
    return Tensor.make(np.where(condition, a.data, b.data), (a, b), "where", backward)
