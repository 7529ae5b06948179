"""Reverse-mode automatic differentiation over numpy float64 arrays.

Every op builds a node holding its parents and a closure that pushes the
output gradient back to them.  ``backward`` walks the nodes in reverse
topological order once; the graph is released afterwards, and a second
call on the same root raises :class:`GraphReuse`.
"""

from __future__ import annotations

import numpy as np


class NeuralError(RuntimeError):
    pass


class ShapeMismatch(NeuralError, ValueError):
    pass


class NumericOverflow(NeuralError, FloatingPointError):
    pass


class GraphReuse(NeuralError):
    pass


def _check_finite(data: np.ndarray, op: str) -> None:
    if not np.isfinite(data).all():
        raise NumericOverflow(f"non-finite value produced by {op}")


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (reverse of numpy broadcasting)."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_op", "_consumed", "name")

    def __init__(self, data, requires_grad: bool = False, _parents: tuple = (), _op: str = "", name: str = ""):
        self.data = np.asarray(data, dtype=np.float64)
        _check_finite(self.data, _op or "constructor")
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad or any(p.requires_grad for p in _parents)
        self._parents = _parents if self.requires_grad else ()
        self._backward = None
        self._op = _op
        self._consumed = False
        self.name = name

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self._op or 'leaf'})"

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    def numpy(self) -> np.ndarray:
        return self.data

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.array(g, dtype=np.float64, copy=True)
        else:
            self.grad += g

    # -- graph traversal -------------------------------------------------

    def backward(self, grad: np.ndarray | None = None) -> None:
        if self._consumed:
            raise GraphReuse("backward() already ran on this graph")
        if grad is None:
            if self.data.size != 1:
                raise ShapeMismatch("backward() without a seed gradient needs a scalar output")
            grad = np.ones_like(self.data)
        order: list[Tensor] = []
        seen: set[int] = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))
        self._accumulate(np.asarray(grad, dtype=np.float64))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        for node in order:
            # intermediate nodes release their graph; leaves keep .grad
            if node._parents:
                node._parents = ()
                node._backward = None
                node.grad = None
                node._consumed = True
        self._consumed = True

    # -- elementwise arithmetic -------------------------------------------

    def __add__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data + other.data, _parents=(self, other), _op="add")

        def _backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g, other.shape))

        out._backward = _backward
        return out

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-as_tensor(other))

    def __rsub__(self, other):
        return as_tensor(other) + (-self)

    def __mul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data * other.data, _parents=(self, other), _op="mul")

        def _backward(g):
            if self.requires_grad:
                self._accumulate(_unbroadcast(g * other.data, self.shape))
            if other.requires_grad:
                other._accumulate(_unbroadcast(g * self.data, other.shape))

        out._backward = _backward
        return out

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_tensor(other)
        return self * other.reciprocal()

    def reciprocal(self):
        out = Tensor(1.0 / self.data, _parents=(self,), _op="reciprocal")

        def _backward(g):
            self._accumulate(-g / self.data**2)

        out._backward = _backward
        return out

    def __pow__(self, power: float):
        out = Tensor(self.data**power, _parents=(self,), _op="pow")

        def _backward(g):
            self._accumulate(g * power * self.data ** (power - 1))

        out._backward = _backward
        return out

    def __matmul__(self, other):
        other = as_tensor(other)
        out = Tensor(self.data @ other.data, _parents=(self, other), _op="matmul")

        def _backward(g):
            if self.requires_grad:
                gs = g @ np.swapaxes(other.data, -1, -2) if other.ndim > 1 else np.multiply.outer(g, other.data)
                self._accumulate(_unbroadcast(gs, self.shape))
            if other.requires_grad:
                go = np.swapaxes(self.data, -1, -2) @ g
                other._accumulate(_unbroadcast(go, other.shape))

        out._backward = _backward
        return out

    # -- unary functions ------------------------------------------------

    def exp(self):
        value = np.exp(self.data)
        out = Tensor(value, _parents=(self,), _op="exp")

        def _backward(g):
            self._accumulate(g * value)

        out._backward = _backward
        return out

    def tanh(self):
        value = np.tanh(self.data)
        out = Tensor(value, _parents=(self,), _op="tanh")

        def _backward(g):
            self._accumulate(g * (1.0 - value**2))

        out._backward = _backward
        return out

    def sigmoid(self):
        value = sigmoid(self.data)
        out = Tensor(value, _parents=(self,), _op="sigmoid")

        def _backward(g):
            self._accumulate(g * value * (1.0 - value))

        out._backward = _backward
        return out

    def gelu(self):
        x = self.data
        x2 = x * x
        t = np.tanh(_GELU_C * x * (1.0 + 0.044715 * x2))
        out = Tensor(0.5 * x * (1.0 + t), _parents=(self,), _op="gelu")

        def _backward(g):
            dinner = _GELU_C * (1.0 + 3 * 0.044715 * x2)
            self._accumulate(g * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * dinner))

        out._backward = _backward
        return out

    # -- reductions and shape ops ---------------------------------------

    def sum(self, axis=None, keepdims: bool = False):
        out = Tensor(self.data.sum(axis=axis, keepdims=keepdims), _parents=(self,), _op="sum")

        def _backward(g):
            if axis is not None and not keepdims:
                g = np.expand_dims(g, axis)
            self._accumulate(np.broadcast_to(g, self.shape))

        out._backward = _backward
        return out

    def mean(self, axis=None, keepdims: bool = False):
        n = self.data.size if axis is None else np.prod([self.shape[a] for a in np.atleast_1d(axis)])
        return self.sum(axis=axis, keepdims=keepdims) * (1.0 / n)

    def reshape(self, *shape):
        out = Tensor(self.data.reshape(*shape), _parents=(self,), _op="reshape")

        def _backward(g):
            self._accumulate(g.reshape(self.shape))

        out._backward = _backward
        return out

    def transpose(self, *axes):
        out = Tensor(self.data.transpose(*axes), _parents=(self,), _op="transpose")
        inverse = np.argsort(axes)

        def _backward(g):
            self._accumulate(g.transpose(*inverse))

        out._backward = _backward
        return out

    def __getitem__(self, index):
        out = Tensor(self.data[index], _parents=(self,), _op="getitem")

        def _backward(g):
            full = np.zeros_like(self.data)
            np.add.at(full, index, g)
            self._accumulate(full)

        out._backward = _backward
        return out


_GELU_C = np.sqrt(2.0 / np.pi)


def sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def as_tensor(value) -> Tensor:
    return value if isinstance(value, Tensor) else Tensor(value)


def parameter(data) -> Tensor:
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True)


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    value = e / e.sum(axis=axis, keepdims=True)
    out = Tensor(value, _parents=(x,), _op="softmax")

    def _backward(g):
        x._accumulate(value * (g - (g * value).sum(axis=axis, keepdims=True)))

    out._backward = _backward
    return out


LN_EPS = 1e-10


def layer_norm(x: Tensor, scale: Tensor | None = None, shift: Tensor | None = None, eps: float = LN_EPS) -> Tensor:
    """Normalize the last axis to zero mean / unit variance, then scale and shift."""
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv_std
    out = Tensor(xhat, _parents=(x,), _op="layer_norm")

    def _backward(g):
        n = x.shape[-1]
        gx = inv_std / n * (n * g - g.sum(axis=-1, keepdims=True) - xhat * (g * xhat).sum(axis=-1, keepdims=True))
        x._accumulate(gx)

    out._backward = _backward
    if scale is not None:
        out = out * scale
    if shift is not None:
        out = out + shift
    return out


def concat(tensors: list[Tensor], axis: int = 0) -> Tensor:
    out = Tensor(np.concatenate([t.data for t in tensors], axis=axis), _parents=tuple(tensors), _op="concat")
    bounds = np.cumsum([0] + [t.shape[axis] for t in tensors])

    def _backward(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t._accumulate(g[tuple(index)])

    out._backward = _backward
    return out
