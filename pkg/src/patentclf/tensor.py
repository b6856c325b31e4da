"""Dense tensors with reverse-mode automatic differentiation.

Define-by-run: each operation records its inputs and a backward closure,
and ``backward()`` on a scalar walks the recorded graph once in reverse
topological order, accumulating gradients additively into every tensor
that requires them.

Storage is float32 by default.  All ops preserve the dtype of their
inputs, so a graph built from float64 leaves runs entirely in float64 —
that is what the finite-difference gradient checks rely on.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ContractError, DimensionError

__all__ = [
    "Tensor",
    "no_grad",
    "add",
    "mul",
    "neg",
    "matmul",
    "transpose",
    "reshape",
    "concat",
    "gather_rows",
    "slice_cols",
    "sigmoid",
    "tanh",
    "relu",
    "log",
    "exp",
    "clip",
    "tsum",
    "tmean",
    "softmax_rows",
    "dropout",
]

_grad_enabled = True


class no_grad:
    """Context manager that disables graph recording (forward-only mode)."""

    def __enter__(self):
        global _grad_enabled
        self._saved = _grad_enabled
        _grad_enabled = False
        return self

    def __exit__(self, *exc):
        global _grad_enabled
        _grad_enabled = self._saved
        return False


def _coerce(data, dtype):
    if isinstance(data, np.ndarray):
        if dtype is None:
            dtype = data.dtype if data.dtype in (np.float32, np.float64) else np.float32
        return np.asarray(data, dtype=dtype)
    return np.asarray(data, dtype=dtype or np.float32)


class Tensor:
    """A dense float array plus an optional node in the autodiff graph."""

    __slots__ = ("data", "grad", "requires_grad", "op", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = _coerce(data, dtype)
        self.grad = None
        self.requires_grad = bool(requires_grad)
        self.op = "leaf"
        self._parents = ()
        self._backward = None

    # -- construction helpers -------------------------------------------------

    @staticmethod
    def zeros(shape, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.zeros(shape, dtype=dtype), requires_grad=requires_grad)

    @staticmethod
    def ones(shape, dtype=np.float32, requires_grad: bool = False) -> "Tensor":
        return Tensor(np.ones(shape, dtype=dtype), requires_grad=requires_grad)

    # -- inspection ------------------------------------------------------------

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        """The underlying array (not a copy)."""
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() requires a single element, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        return f"Tensor(shape={self.shape}, op={self.op!r}, requires_grad={self.requires_grad})"

    # -- gradient handling -----------------------------------------------------

    def zero_grad(self):
        self.grad = None

    def backward(self):
        """Populate ``grad`` on every reachable tensor that requires it.

        The loss must be a scalar; each graph node is visited exactly once,
        in reverse topological order, and gradients from multiple uses of a
        tensor accumulate additively.
        """
        if self.data.size != 1:
            raise ContractError(
                f"backward() requires a scalar loss, got shape {self.shape}"
            )
        topo: list[Tensor] = []
        visited: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, processed = stack.pop()
            if processed:
                topo.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for p in node._parents:
                if id(p) not in visited and p.requires_grad:
                    stack.append((p, False))
        _accum(self, np.ones_like(self.data))
        for node in reversed(topo):
            if node._backward is not None:
                node._backward(node.grad)

    # -- operator sugar ----------------------------------------------------------

    def __add__(self, other):
        return add(self, _wrap(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(_wrap(other, self)))

    def __rsub__(self, other):
        return add(_wrap(other, self), neg(self))

    def __mul__(self, other):
        return mul(self, _wrap(other, self))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            raise ContractError("tensor/tensor division is not supported; divide by a scalar")
        return mul(self, _wrap(1.0 / float(other), self))

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def transpose(self) -> "Tensor":
        return transpose(self)

    def reshape(self, shape) -> "Tensor":
        return reshape(self, shape)

    def sum(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False) -> "Tensor":
        return tmean(self, axis=axis, keepdims=keepdims)


def _wrap(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(np.asarray(value, dtype=like.dtype))


def _accum(t: Tensor, g: np.ndarray):
    if t.grad is None:
        t.grad = np.zeros_like(t.data)
    t.grad += g


def _result(data: np.ndarray, parents: tuple, op: str, backward) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    if _grad_enabled and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.op = op
        out._parents = parents
        out._backward = backward
    else:
        out.requires_grad = False
        out.op = op
        out._parents = ()
        out._backward = None
    return out


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    """Sum a gradient over the axes numpy broadcast to produce it."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


# -- elementwise ops ---------------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    data = a.data + b.data

    def backward(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g, b.data.shape))

    return _result(data, (a, b), "add", backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    data = a.data * b.data

    def backward(g):
        if a.requires_grad:
            _accum(a, _unbroadcast(g * b.data, a.data.shape))
        if b.requires_grad:
            _accum(b, _unbroadcast(g * a.data, b.data.shape))

    return _result(data, (a, b), "mul", backward)


def neg(a: Tensor) -> Tensor:
    def backward(g):
        if a.requires_grad:
            _accum(a, -g)

    return _result(-a.data, (a,), "neg", backward)


def sigmoid(a: Tensor) -> Tensor:
    # exp(-|x|) never overflows; the two branches cover both signs stably
    z = np.exp(-np.abs(a.data))
    data = np.where(a.data >= 0, 1.0 / (1.0 + z), z / (1.0 + z))

    def backward(g):
        if a.requires_grad:
            _accum(a, g * data * (1.0 - data))

    return _result(data, (a,), "sigmoid", backward)


def tanh(a: Tensor) -> Tensor:
    data = np.tanh(a.data)

    def backward(g):
        if a.requires_grad:
            _accum(a, g * (1.0 - data * data))

    return _result(data, (a,), "tanh", backward)


def relu(a: Tensor) -> Tensor:
    data = np.maximum(a.data, 0.0)

    def backward(g):
        if a.requires_grad:
            _accum(a, g * (a.data > 0))

    return _result(data, (a,), "relu", backward)


def log(a: Tensor) -> Tensor:
    data = np.log(a.data)

    def backward(g):
        if a.requires_grad:
            _accum(a, g / a.data)

    return _result(data, (a,), "log", backward)


def exp(a: Tensor) -> Tensor:
    data = np.exp(a.data)

    def backward(g):
        if a.requires_grad:
            _accum(a, g * data)

    return _result(data, (a,), "exp", backward)


def clip(a: Tensor, lo: float, hi: float) -> Tensor:
    """Clamp values to [lo, hi]; gradient passes only where unclamped."""
    data = np.clip(a.data, lo, hi)
    passthrough = (a.data >= lo) & (a.data <= hi)

    def backward(g):
        if a.requires_grad:
            _accum(a, g * passthrough)

    return _result(data, (a,), "clip", backward)


# -- linear algebra ------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.data.shape[1] != b.data.shape[0]:
        raise DimensionError(
            f"matmul: incompatible shapes {a.data.shape} and {b.data.shape}"
        )
    data = a.data @ b.data

    def backward(g):
        if a.requires_grad:
            _accum(a, g @ b.data.T)
        if b.requires_grad:
            _accum(b, a.data.T @ g)

    return _result(data, (a, b), "matmul", backward)


def transpose(a: Tensor) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"transpose expects a matrix, got shape {a.data.shape}")

    def backward(g):
        if a.requires_grad:
            _accum(a, g.T)

    return _result(a.data.T, (a,), "transpose", backward)


def reshape(a: Tensor, shape) -> Tensor:
    data = a.data.reshape(shape)

    def backward(g):
        if a.requires_grad:
            _accum(a, g.reshape(a.data.shape))

    return _result(data, (a,), "reshape", backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ContractError("concat of an empty list")
    data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g):
        for t, start, stop in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                sl = [slice(None)] * g.ndim
                sl[axis] = slice(start, stop)
                _accum(t, g[tuple(sl)])

    return _result(data, tuple(tensors), "concat", backward)


def gather_rows(a: Tensor, indices) -> Tensor:
    """Select rows by index; the backward pass scatter-adds into the source."""
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1:
        raise DimensionError(f"gather_rows expects a 1-D index list, got shape {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= a.data.shape[0]):
        raise IndexError(
            f"gather_rows: index out of range for {a.data.shape[0]} rows "
            f"(got min {idx.min()}, max {idx.max()})"
        )
    data = a.data[idx]

    def backward(g):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            np.add.at(a.grad, idx, g)

    return _result(data, (a,), "gather_rows", backward)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    if a.data.ndim != 2:
        raise DimensionError(f"slice_cols expects a matrix, got shape {a.data.shape}")
    data = a.data[:, start:stop]

    def backward(g):
        if a.requires_grad:
            if a.grad is None:
                a.grad = np.zeros_like(a.data)
            a.grad[:, start:stop] += g

    return _result(data, (a,), "slice_cols", backward)


# -- reductions ---------------------------------------------------------------


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    data = a.data.sum(axis=axis, keepdims=keepdims)
    data = np.asarray(data, dtype=a.data.dtype)

    def backward(g):
        if a.requires_grad:
            if axis is None:
                _accum(a, np.broadcast_to(g, a.data.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                _accum(a, np.broadcast_to(gg, a.data.shape).copy())

    return _result(data, (a,), "sum", backward)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    count = a.data.size if axis is None else a.data.shape[axis]
    data = np.asarray(a.data.mean(axis=axis, keepdims=keepdims), dtype=a.data.dtype)

    def backward(g):
        if a.requires_grad:
            if axis is None:
                _accum(a, np.broadcast_to(g / count, a.data.shape).copy())
            else:
                gg = g if keepdims else np.expand_dims(g, axis)
                _accum(a, np.broadcast_to(gg / count, a.data.shape).copy())

    return _result(data, (a,), "mean", backward)


# -- softmax and dropout --------------------------------------------------------


def softmax_rows(a: Tensor, mask=None) -> Tensor:
    """Row-wise softmax, stabilized by subtracting each row's max.

    With a {0,1} ``mask`` (broadcastable to ``a``), masked positions get
    exactly zero weight and each row normalizes over its unmasked entries;
    a row with no unmasked entries is a contract violation.
    """
    if a.data.ndim != 2:
        raise DimensionError(f"softmax_rows expects a matrix, got shape {a.data.shape}")
    if mask is None:
        shifted = a.data - a.data.max(axis=1, keepdims=True)
        e = np.exp(shifted)
    else:
        m = np.broadcast_to(np.asarray(mask, dtype=bool), a.data.shape)
        if not m.any(axis=1).all():
            raise ContractError("softmax_rows: a row has no unmasked entries")
        valid = np.where(m, a.data, -np.inf)
        shifted = valid - valid.max(axis=1, keepdims=True)
        with np.errstate(invalid="ignore"):
            e = np.where(m, np.exp(shifted), 0.0)
    w = e / e.sum(axis=1, keepdims=True)
    w = np.asarray(w, dtype=a.data.dtype)

    def backward(g):
        if a.requires_grad:
            dot = (g * w).sum(axis=1, keepdims=True)
            _accum(a, w * (g - dot))

    return _result(w, (a,), "softmax_rows", backward)


def dropout(a: Tensor, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout. In eval mode (``train=False``) returns ``a`` unchanged."""
    if not 0.0 <= p < 1.0:
        raise ConfigError(f"dropout rate must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return a
    if rng is None:
        raise ContractError("dropout in train mode requires a random generator")
    keep = (rng.random(a.data.shape) >= p).astype(a.data.dtype) / np.asarray(
        1.0 - p, dtype=a.data.dtype
    )
    data = a.data * keep

    def backward(g):
        if a.requires_grad:
            _accum(a, g * keep)

    return _result(data, (a,), "dropout", backward)
