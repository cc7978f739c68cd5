"""Dense N-dimensional arrays of 64-bit floats.

Flat row-major storage (stdlib array('d')) plus an explicit shape tuple.
All public operations return new tensors; buffers are never shared with
callers, so values are safe to pass between threads. Arithmetic dispatches
to the active kernel backend (compiled or pure Python).
"""

from array import array
from math import prod

from . import backend
from .errors import DimensionError, DomainError


class Tensor:
    """Immutable dense array; rank 1-3 in practice, rank 2 for arithmetic."""

    __slots__ = ("shape", "data")

    def __init__(self, shape, data):
        shape = tuple(int(d) for d in shape)
        if any(d < 0 for d in shape):
            raise DimensionError(f"dimensions must be non-negative, got {shape}")
        buf = array("d", data)
        if len(buf) != prod(shape):
            raise DimensionError(
                f"data length {len(buf)} does not match shape {shape}")
        self.shape = shape
        self.data = buf

    @classmethod
    def _wrap(cls, shape, buf):
        """Adopt an existing buffer without copying (internal fast path)."""
        t = object.__new__(cls)
        t.shape = tuple(shape)
        t.data = buf
        return t

    @classmethod
    def zeros(cls, shape):
        return cls._wrap(tuple(int(d) for d in shape),
                         array("d", bytes(8 * prod(shape))))

    @classmethod
    def full(cls, shape, value):
        return cls._wrap(tuple(int(d) for d in shape),
                         array("d", [float(value)]) * prod(shape))

    @classmethod
    def of(cls, nested):
        """Build from a (possibly nested) list of numbers."""
        shape = []
        probe = nested
        while isinstance(probe, (list, tuple)):
            shape.append(len(probe))
            probe = probe[0]
        flat = array("d")

        def walk(node, depth):
            if depth == len(shape):
                flat.append(float(node))
                return
            if len(node) != shape[depth]:
                raise DimensionError("ragged nested list")
            for child in node:
                walk(child, depth + 1)

        walk(nested, 0)
        return cls(shape, flat)

    @classmethod
    def eye(cls, n):
        t = cls.zeros((n, n))
        for i in range(n):
            t.data[i * n + i] = 1.0
        return t

    @property
    def size(self):
        return len(self.data)

    @property
    def rank(self):
        return len(self.shape)

    def item(self):
        if self.size != 1:
            raise DomainError(f"item() needs a single element, shape {self.shape}")
        return self.data[0]

    def tolist(self):
        def build(offset, dims):
            if not dims:
                return self.data[offset]
            step = prod(dims[1:])
            return [build(offset + i * step, dims[1:]) for i in range(dims[0])]
        return build(0, self.shape)

    def reshape(self, shape):
        shape = tuple(int(d) for d in shape)
        if prod(shape) != self.size:
            raise DimensionError(
                f"cannot reshape {self.shape} (size {self.size}) to {shape}")
        return Tensor._wrap(shape, array("d", self.data))

    def copy(self):
        return Tensor._wrap(self.shape, array("d", self.data))

    def take(self, indices):
        """Gather along the first axis; result shape [len(indices), *rest]."""
        if self.rank < 1:
            raise DimensionError("take needs rank >= 1")
        row = prod(self.shape[1:]) if self.rank > 1 else 1
        out = array("d")
        for i in indices:
            if not 0 <= i < self.shape[0]:
                raise DomainError(f"row index {i} out of range {self.shape[0]}")
            out.extend(self.data[i * row:(i + 1) * row])
        return Tensor._wrap((len(indices),) + self.shape[1:], out)

    def scale(self, s):
        return Tensor._wrap(self.shape, backend.kernels.scale(self.data, float(s)))

    # operator sugar over the module-level ops
    def __matmul__(self, other):
        return matmul(self, other)

    def __add__(self, other):
        return ew_binary("add", self, other)

    def __sub__(self, other):
        return ew_binary("sub", self, other)

    def __mul__(self, other):
        return ew_binary("mul", self, other)

    def mean(self):
        return reduce_mean(self)

    @property
    def T(self):
        return transpose(self)

    def __repr__(self):
        return f"Tensor(shape={self.shape})"

    def __eq__(self, other):
        return (isinstance(other, Tensor) and self.shape == other.shape
                and self.data == other.data)

    __hash__ = None  # unhashable; mutable buffer inside


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Rank-2 matrix product [m x k] @ [k x n] -> [m x n]."""
    if a.rank != 2 or b.rank != 2:
        raise DimensionError(
            f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    m, k = a.shape
    k2, n = b.shape
    if k != k2:
        raise DimensionError(
            f"matmul inner dimensions disagree: {a.shape} x {b.shape}")
    buf = backend.kernels.matmul_nn(a.data, b.data, m, k, n)
    return Tensor._wrap((m, n), buf)


def _matmul_tn(a: Tensor, b: Tensor) -> Tensor:
    """a.T @ b with a stored untransposed: [k x m].T @ [k x n] -> [m x n]."""
    k, m = a.shape
    k2, n = b.shape
    if k != k2:
        raise DimensionError(
            f"matmul_tn leading dimensions disagree: {a.shape} x {b.shape}")
    buf = backend.kernels.matmul_tn(a.data, b.data, k, m, n)
    return Tensor._wrap((m, n), buf)


def ew_binary(op: str, a: Tensor, b: Tensor) -> Tensor:
    """Elementwise add/sub/mul; b may be rank-1 broadcast over a's last axis."""
    kern = backend.kernels
    if op not in ("add", "sub", "mul"):
        raise DomainError(f"unknown elementwise op {op!r}")
    if a.shape == b.shape:
        f = {"add": kern.ew_add, "sub": kern.ew_sub, "mul": kern.ew_mul}[op]
        return Tensor._wrap(a.shape, f(a.data, b.data))
    if b.rank == 1 and a.rank >= 2 and a.shape[-1] == b.shape[0]:
        rows = a.size // b.shape[0]
        if op == "add":
            return Tensor._wrap(a.shape,
                                kern.bias_add(a.data, b.data, rows, b.shape[0]))
        tiled = b.data * rows  # cold path: materialize the broadcast
        f = kern.ew_sub if op == "sub" else kern.ew_mul
        return Tensor._wrap(a.shape, f(a.data, tiled))
    raise DimensionError(
        f"elementwise {op}: incompatible shapes {a.shape} and {b.shape}")


def reduce_mean(a: Tensor) -> float:
    """Arithmetic mean over all elements."""
    if a.size == 0:
        raise DomainError("reduce_mean of an empty tensor")
    return backend.kernels.reduce_sum(a.data) / a.size


def transpose(a: Tensor) -> Tensor:
    if a.rank != 2:
        raise DimensionError(f"transpose needs rank 2, got shape {a.shape}")
    m, n = a.shape
    return Tensor._wrap((n, m), backend.kernels.transpose(a.data, m, n))
