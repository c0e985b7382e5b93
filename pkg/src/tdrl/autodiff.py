"""A small dense reverse-mode autodiff engine on float64 numpy arrays, plus Adam.

Every op returns a new :class:`Tensor` that remembers its parents and a
backward rule. :func:`backward` walks that graph in reverse topological order
once and accumulates into ``.grad`` of leaf tensors created with
``requires_grad=True``. The graph is rebuilt on every forward pass.
"""

from __future__ import annotations

import io
import struct
from typing import BinaryIO, Callable, Iterable, Mapping, Sequence

import numpy as np

DTYPE = np.float64


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad: bool = False, name: str | None = None):
        self.data = np.array(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.grad: np.ndarray | None = np.zeros_like(self.data) if requires_grad else None
        self._parents: tuple[Tensor, ...] = ()
        self._backward: Callable[[np.ndarray], Sequence[np.ndarray | None]] | None = None
        self.name = name

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def item(self) -> float:
        if self.data.size != 1:
            raise ValueError("tensor is not a scalar")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        if self.requires_grad:
            self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Tensor{label}(shape={self.shape})"


def _tracked(*ts: Tensor) -> bool:
    return any(t.requires_grad or t._parents for t in ts)


def _make(data: np.ndarray, parents: tuple[Tensor, ...], backward) -> Tensor:
    out = Tensor.__new__(Tensor)
    out.data = data
    out.grad = None
    out.requires_grad = False
    out.name = None
    if _tracked(*parents):
        out._parents = parents
        out._backward = backward
    else:
        out._parents = ()
        out._backward = None
    return out


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


# ---------------------------------------------------------------------------
# primitives


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul shape mismatch {a.shape} @ {b.shape}")
    return _make(a.data @ b.data, (a, b), lambda g: (g @ b.data.T, a.data.T @ g))


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum; ``b`` may also be a single row broadcast over ``a``'s rows."""
    if a.shape == b.shape:
        return _make(a.data + b.data, (a, b), lambda g: (g, g))
    if a.data.ndim == 2 and b.shape == (1, a.shape[1]):
        return _make(a.data + b.data, (a, b), lambda g: (g, g.sum(axis=0, keepdims=True)))
    raise ValueError(f"add shape mismatch {a.shape} + {b.shape}")


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"sub shape mismatch {a.shape} - {b.shape}")
    return _make(a.data - b.data, (a, b), lambda g: (g, -g))


def mul(a: Tensor, b: Tensor) -> Tensor:
    if a.shape != b.shape:
        raise ValueError(f"mul shape mismatch {a.shape} * {b.shape}")
    return _make(a.data * b.data, (a, b), lambda g: (g * b.data, g * a.data))


def scale(a: Tensor, c: float) -> Tensor:
    c = float(c)
    return _make(a.data * c, (a,), lambda g: (g * c,))


def total(a: Tensor) -> Tensor:
    """Sum of all entries as a 0-d tensor."""
    shape = a.shape
    return _make(np.array(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),))


def row_sum(a: Tensor) -> Tensor:
    """``(n, k) -> (n, 1)``."""
    if a.data.ndim != 2:
        raise ValueError("row_sum expects a matrix")
    k = a.shape[1]
    return _make(a.data.sum(axis=1, keepdims=True), (a,), lambda g: (np.repeat(g, k, axis=1),))


def mean_rows(a: Tensor) -> Tensor:
    """Average over rows, ``(n, k) -> (1, k)``."""
    if a.data.ndim != 2 or a.shape[0] == 0:
        raise ValueError("mean_rows expects a non-empty matrix")
    n = a.shape[0]
    return _make(a.data.mean(axis=0, keepdims=True), (a,), lambda g: (np.repeat(g / n, n, axis=0),))


def elu(a: Tensor, alpha: float = 1.0) -> Tensor:
    x = a.data
    neg = x < 0
    ex = np.exp(np.where(neg, x, 0.0))
    out = np.where(neg, alpha * (ex - 1.0), x)
    return _make(out, (a,), lambda g: (g * np.where(neg, alpha * ex, 1.0),))


def log(a: Tensor) -> Tensor:
    x = a.data
    return _make(np.log(x), (a,), lambda g: (g / x,))


def exp(a: Tensor) -> Tensor:
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    old = a.shape
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(old),))


def gather_rows(a: Tensor, index: Sequence[int]) -> Tensor:
    """Rows (or entries, for a vector) of ``a`` at ``index``; repeats are allowed."""
    idx = np.asarray(index, dtype=np.intp)
    shape = a.shape

    def back(g):
        out = np.zeros(shape, dtype=DTYPE)
        np.add.at(out, idx, g)
        return (out,)

    return _make(a.data[idx], (a,), back)


def _check_mask(x: np.ndarray, mask) -> np.ndarray:
    m = np.ones(x.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).reshape(x.shape)
    if not m.any():
        raise ValueError("softmax over an all-masked vector")
    return m


def softmax_masked(logits: Tensor, mask=None) -> Tensor:
    """Softmax over the valid entries; masked entries get probability exactly 0."""
    x = logits.data
    m = _check_mask(x, mask)
    z = np.where(m, x - x[m].max(), 0.0)
    e = np.where(m, np.exp(z), 0.0)
    p = e / e.sum()

    def back(g):
        return (p * (g - (g * p).sum()),)

    return _make(p, (logits,), back)


def log_softmax_masked(logits: Tensor, mask=None) -> Tensor:
    """Log-probabilities over valid entries; masked entries are set to 0, not ``-inf``."""
    x = logits.data
    m = _check_mask(x, mask)
    z = np.where(m, x - x[m].max(), 0.0)
    lse = np.log(np.where(m, np.exp(z), 0.0).sum())
    out = np.where(m, z - lse, 0.0)
    p = np.where(m, np.exp(out), 0.0)

    def back(g):
        gm = np.where(m, g, 0.0)
        return (gm - p * gm.sum(),)

    return _make(out, (logits,), back)


# ---------------------------------------------------------------------------


def backward(loss: Tensor) -> None:
    """Accumulate d(loss)/d(leaf) into every reachable leaf's ``.grad``."""
    if loss.data.size != 1:
        raise ValueError("backward needs a scalar loss")
    order: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        t, done = stack.pop()
        if done:
            order.append(t)
            continue
        if id(t) in seen:
            continue
        seen.add(id(t))
        stack.append((t, True))
        for p in t._parents:
            if id(p) not in seen:
                stack.append((p, False))

    grads: dict[int, np.ndarray] = {id(loss): np.ones_like(loss.data)}
    for t in reversed(order):
        g = grads.pop(id(t), None)
        if g is None:
            continue
        if t._backward is None:
            if t.requires_grad:
                t.grad = g.copy() if t.grad is None else t.grad + g
            continue
        for p, pg in zip(t._parents, t._backward(g)):
            if pg is None or not _tracked(p):
                continue
            prev = grads.get(id(p))
            grads[id(p)] = pg if prev is None else prev + pg


# ---------------------------------------------------------------------------


class Adam:
    """Adam with bias correction. :meth:`step` zeroes gradients after updating."""

    def __init__(
        self,
        params: Iterable[Tensor],
        lr: float = 0.008,
        betas: tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p.data -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            p.zero_grad()

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


# ---------------------------------------------------------------------------
# checkpoint files
#
#   magic "TDRLCKPT" | u32 version | u32 block count
#   per block: u16 name length | utf-8 name | u8 ndim | u64 dims... | float64 LE data

CHECKPOINT_MAGIC = b"TDRLCKPT"
CHECKPOINT_VERSION = 1


def save_arrays(f: BinaryIO, arrays: Mapping[str, np.ndarray]) -> None:
    f.write(CHECKPOINT_MAGIC)
    f.write(struct.pack("<II", CHECKPOINT_VERSION, len(arrays)))
    for name, arr in arrays.items():
        raw = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f8")
        f.write(struct.pack("<H", len(raw)))
        f.write(raw)
        f.write(struct.pack("<B", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}Q", *arr.shape))
        f.write(np.ascontiguousarray(arr).tobytes())


def load_arrays(f: BinaryIO) -> dict[str, np.ndarray]:
    if f.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise ValueError("not a checkpoint file")
    version, count = struct.unpack("<II", _read(f, 8))
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    out = {}
    for _ in range(count):
        (nlen,) = struct.unpack("<H", _read(f, 2))
        name = _read(f, nlen).decode("utf-8")
        (ndim,) = struct.unpack("<B", _read(f, 1))
        shape = struct.unpack(f"<{ndim}Q", _read(f, 8 * ndim))
        size = int(np.prod(shape, dtype=np.int64))
        data = np.frombuffer(_read(f, 8 * size), dtype="<f8").astype(DTYPE)
        out[name] = data.reshape(shape)
    if f.read(1):
        raise ValueError("trailing bytes after last checkpoint block")
    return out


def _read(f: BinaryIO, n: int) -> bytes:
    b = f.read(n)
    if len(b) != n:
        raise ValueError("truncated checkpoint file")
    return b


def dumps_arrays(arrays: Mapping[str, np.ndarray]) -> bytes:
    buf = io.BytesIO()
    save_arrays(buf, arrays)
    return buf.getvalue()


def loads_arrays(data: bytes) -> dict[str, np.ndarray]:
    return load_arrays(io.BytesIO(data))
