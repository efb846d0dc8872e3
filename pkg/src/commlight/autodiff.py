"""Reverse-mode automatic differentiation over float64 numpy arrays.

A small tape-free engine: every operation returns a new :class:`Tensor`
holding references to its parents and a closure that scatters the incoming
gradient back to them.  ``backward()`` on a scalar topologically sorts the
graph, accumulates gradients into every tensor that requires them, and then
consumes the graph so it cannot be (incorrectly) reused.

Only the operations the dense Q-networks need are provided; elementwise ops
require equal shapes or a python scalar operand (no silent broadcasting).
"""

from __future__ import annotations

import numpy as np


class AutodiffError(Exception):
    """Base class for graph construction / usage errors."""


class DimensionError(AutodiffError):
    """Operand shapes are incompatible."""


class GraphConsumedError(AutodiffError):
    """backward() was called through an already-consumed graph."""


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "_consumed")

    def __init__(self, data, requires_grad: bool = False, _parents=(), _backward=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = _parents
        self._backward = _backward
        self._consumed = False

    @property
    def shape(self):
        return self.data.shape

    def detach(self) -> "Tensor":
        """A copy cut off from the graph; receives no gradient, ever."""
        return Tensor(self.data.copy())

    def zero_grad(self) -> None:
        self.grad = None

    def _accumulate(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = g.copy()
        else:
            self.grad += g

    def backward(self) -> None:
        """Populate ``grad`` on every tensor in this graph that requires it.

        Must be called on a scalar.  Visits each node exactly once, then
        strips the graph; a second call raises :class:`GraphConsumedError`.
        """
        if self.data.size != 1:
            raise AutodiffError(
                f"backward() requires a scalar loss, got shape {self.data.shape}"
            )
        if self._consumed:
            raise GraphConsumedError("backward() already consumed this graph")

        order = _toposort(self)
        for node in order:
            if node._consumed:
                raise GraphConsumedError(
                    "graph reuses nodes from an already-consumed graph"
                )

        self._accumulate(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)
        for node in order:
            if node._parents:
                node._consumed = True
                node._parents = ()
                node._backward = None
        self._consumed = True

    # Convenience operators used by small-scale tests; the training path
    # calls the module-level functions directly.
    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(_as_tensor(other), self)

    def __mul__(self, other):
        return mul(self, other)

    def __rmul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return mul(self, -1.0)

    def __repr__(self):
        return f"Tensor(shape={self.data.shape}, requires_grad={self.requires_grad})"


def _toposort(root: Tensor) -> list[Tensor]:
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x, dtype=np.float64))


def _check_same_shape(a: Tensor, b: Tensor, op: str) -> None:
    if a.data.shape != b.data.shape and a.data.size != 1 and b.data.size != 1:
        raise DimensionError(f"{op}: shapes {a.data.shape} and {b.data.shape} differ")


def _tracked(*parents: Tensor) -> bool:
    return any(p.requires_grad for p in parents)


def add(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape(a, b, "add")
    out = Tensor(a.data + b.data, requires_grad=_tracked(a, b), _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a._accumulate(g if a.data.shape == g.shape else np.sum(g).reshape(a.data.shape))
        if b.requires_grad:
            b._accumulate(g if b.data.shape == g.shape else np.sum(g).reshape(b.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def sub(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape(a, b, "sub")
    out = Tensor(a.data - b.data, requires_grad=_tracked(a, b), _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            a._accumulate(g if a.data.shape == g.shape else np.sum(g).reshape(a.data.shape))
        if b.requires_grad:
            b._accumulate(-g if b.data.shape == g.shape else -np.sum(g).reshape(b.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def mul(a, b) -> Tensor:
    a, b = _as_tensor(a), _as_tensor(b)
    _check_same_shape(a, b, "mul")
    out = Tensor(a.data * b.data, requires_grad=_tracked(a, b), _parents=(a, b))

    def backward(g):
        if a.requires_grad:
            ga = g * b.data
            a._accumulate(ga if a.data.shape == ga.shape else np.sum(ga).reshape(a.data.shape))
        if b.requires_grad:
            gb = g * a.data
            b._accumulate(gb if b.data.shape == gb.shape else np.sum(gb).reshape(b.data.shape))

    out._backward = backward if out.requires_grad else None
    return out


def square(a) -> Tensor:
    a = _as_tensor(a)
    out = Tensor(a.data * a.data, requires_grad=a.requires_grad, _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a._accumulate(2.0 * a.data * g)

    out._backward = backward if out.requires_grad else None
    return out


def relu(a: Tensor) -> Tensor:
    out_data = np.maximum(a.data, 0.0)
    out = Tensor(out_data, requires_grad=a.requires_grad, _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a._accumulate(g * (out_data > 0.0))

    out._backward = backward if out.requires_grad else None
    return out


def linear(x: Tensor, w: Tensor, b: Tensor) -> Tensor:
    """y = x @ w.T + b with w of shape (out, in); x may be 1-D or batched 2-D."""
    if x.data.ndim not in (1, 2) or w.data.ndim != 2:
        raise DimensionError(
            f"linear: x must be 1-D or 2-D and w 2-D, got x{x.data.shape} w{w.data.shape}"
        )
    if x.data.shape[-1] != w.data.shape[1]:
        raise DimensionError(
            f"linear: input width {x.data.shape} does not match weight {w.data.shape}"
        )
    if b.data.shape != (w.data.shape[0],):
        raise DimensionError(
            f"linear: bias shape {b.data.shape} does not match weight {w.data.shape}"
        )
    y = x.data @ w.data.T + b.data
    out = Tensor(y, requires_grad=_tracked(x, w, b), _parents=(x, w, b))
    batched = x.data.ndim == 2

    def backward(g):
        if x.requires_grad:
            x._accumulate(g @ w.data)
        if w.requires_grad:
            w._accumulate(g.T @ x.data if batched else np.outer(g, x.data))
        if b.requires_grad:
            b._accumulate(g.sum(axis=0) if batched else g)

    out._backward = backward if out.requires_grad else None
    return out


def concat(parts: list[Tensor]) -> Tensor:
    """Concatenate along the last axis; all parts share the leading shape."""
    lead = parts[0].data.shape[:-1]
    for p in parts:
        if p.data.shape[:-1] != lead:
            raise DimensionError(
                f"concat: leading shapes differ: {[p.data.shape for p in parts]}"
            )
    out = Tensor(
        np.concatenate([p.data for p in parts], axis=-1),
        requires_grad=_tracked(*parts),
        _parents=tuple(parts),
    )
    widths = [p.data.shape[-1] for p in parts]

    def backward(g):
        off = 0
        for p, w in zip(parts, widths):
            if p.requires_grad:
                p._accumulate(g[..., off : off + w])
            off += w

    out._backward = backward if out.requires_grad else None
    return out


def gather_rows(x: Tensor, idx: np.ndarray) -> Tensor:
    """Pick one column per row: out[i] = x[i, idx[i]] for a 2-D x."""
    if x.data.ndim != 2:
        raise DimensionError(f"gather_rows: need 2-D input, got {x.data.shape}")
    idx = np.asarray(idx, dtype=np.intp)
    rows = np.arange(x.data.shape[0])
    out = Tensor(x.data[rows, idx], requires_grad=x.requires_grad, _parents=(x,))

    def backward(g):
        if x.requires_grad:
            scatter = np.zeros_like(x.data)
            scatter[rows, idx] = g
            x._accumulate(scatter)

    out._backward = backward if out.requires_grad else None
    return out


def stack(parts: list[Tensor]) -> Tensor:
    """Stack same-shape tensors along a new leading axis."""
    shape = parts[0].data.shape
    for p in parts:
        if p.data.shape != shape:
            raise DimensionError(
                f"stack: shapes differ: {[p.data.shape for p in parts]}"
            )
    out = Tensor(
        np.stack([p.data for p in parts]),
        requires_grad=_tracked(*parts),
        _parents=tuple(parts),
    )

    def backward(g):
        for i, p in enumerate(parts):
            if p.requires_grad:
                p._accumulate(g[i])

    out._backward = backward if out.requires_grad else None
    return out


def mean(a: Tensor) -> Tensor:
    out = Tensor(a.data.mean(), requires_grad=a.requires_grad, _parents=(a,))
    n = a.data.size

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, float(g) / n))

    out._backward = backward if out.requires_grad else None
    return out


def total(a: Tensor) -> Tensor:
    """Sum of all entries."""
    out = Tensor(a.data.sum(), requires_grad=a.requires_grad, _parents=(a,))

    def backward(g):
        if a.requires_grad:
            a._accumulate(np.full_like(a.data, float(g)))

    out._backward = backward if out.requires_grad else None
    return out
