"""Reverse-mode differentiation over dense float64 arrays.

Every operation is recorded on an append-only :class:`Tape`. An operation's
inputs always exist before the operation itself, so record order is already
topological and the backward sweep is a single reverse walk over the records.
There is no broadcasting: operand shapes must match exactly, and every shape
coercion (slice, concatenation, row gather, transpose) is its own recorded
operation with an explicit backward rule.

Gradient buffers are allocated lazily on first accumulation and grow
additively; callers zero them between steps. A value that never receives
gradient mass keeps ``grad=None``, which reads as zero (see :func:`grad_of`).
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = [
    "ShapeError",
    "DomainError",
    "DiffValue",
    "Parameter",
    "Tape",
    "grad_of",
    "matmul",
    "transpose",
    "add",
    "sub",
    "mul",
    "scale",
    "const_mul",
    "sigmoid",
    "tanh",
    "relu",
    "absolute",
    "log",
    "exp",
    "softmax",
    "concat",
    "vslice",
    "row",
    "take_rows",
    "total",
    "detach",
    "sum_scalars",
    "weighted_sum",
    "backward",
    "finite_difference_check",
    "ELEMENTWISE",
]


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class DomainError(ValueError):
    """Operand values lie outside an operation's domain."""


class DiffValue:
    """One node of a recorded computation.

    Holds the forward value, the owning tape, the node's position on that
    tape, and the gradient accumulated by :func:`backward` (``None`` until
    the node first receives gradient mass). ``data`` is read-only by
    convention; mutating it after recording invalidates the tape.
    """

    __slots__ = ("data", "grad", "tape", "tape_id")

    def __init__(self, data: np.ndarray, tape: "Tape", tape_id: int):
        self.data = data
        self.grad: np.ndarray | None = None
        self.tape = tape
        self.tape_id = tape_id

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    def ensure_grad(self) -> np.ndarray:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        return self.grad

    def __repr__(self) -> str:
        return f"DiffValue(shape={self.data.shape}, tape_id={self.tape_id})"


class Parameter:
    """Named array with a persistent gradient buffer.

    Parameters live outside any tape; a forward pass adopts one with
    :meth:`Tape.watch` and the trainer folds the tape's leaf gradients back
    into ``grad`` with :meth:`Tape.merge_param_grads`.
    """

    __slots__ = ("name", "data", "grad", "trainable")

    def __init__(self, name: str, data, trainable: bool = True):
        self.name = name
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = np.zeros_like(self.data)
        self.trainable = trainable

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def __repr__(self) -> str:
        return f"Parameter({self.name!r}, shape={self.data.shape})"


class Tape:
    """Append-only operation record for one unit of work.

    A tape and the DiffValues recorded on it form a single-threaded unit;
    values from different tapes must never be mixed in one operation.
    """

    __slots__ = ("_values", "_rules", "_watched", "_watch_ids")

    def __init__(self):
        self._values: list[DiffValue] = []
        self._rules: list[Callable[[np.ndarray], None] | None] = []
        self._watched: list[tuple[Parameter, DiffValue]] = []
        self._watch_ids: dict[int, DiffValue] = {}

    def __len__(self) -> int:
        return len(self._values)

    def _record(self, data: np.ndarray, rule) -> DiffValue:
        value = DiffValue(data, self, len(self._values))
        self._values.append(value)
        self._rules.append(rule)
        return value

    def leaf(self, data) -> DiffValue:
        """Record a constant input. No backward rule; grads may still land here."""
        arr = np.asarray(data, dtype=np.float64)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        return self._record(arr, None)

    def watch(self, param: Parameter) -> DiffValue:
        """Adopt a Parameter as a leaf; repeated watches return the same leaf."""
        if not isinstance(param, Parameter):
            raise TypeError(f"watch expects a Parameter, got {type(param).__name__}")
        leaf = self._watch_ids.get(id(param))
        if leaf is None:
            leaf = self._record(param.data, None)
            self._watch_ids[id(param)] = leaf
            self._watched.append((param, leaf))
        return leaf

    def watched(self) -> list[tuple[Parameter, DiffValue]]:
        return list(self._watched)

    def merge_param_grads(self) -> None:
        """Fold leaf gradients into Parameter buffers, in first-watch order."""
        for param, leaf in self._watched:
            if leaf.grad is not None:
                param.grad += leaf.grad


def grad_of(value: DiffValue) -> np.ndarray:
    """The accumulated gradient of ``value``, or zeros if none reached it."""
    if value.grad is None:
        return np.zeros_like(value.data)
    return value.grad


def _tape_of(*values: DiffValue) -> Tape:
    tape = values[0].tape
    for v in values[1:]:
        if v.tape is not tape:
            raise ValueError("operands were recorded on different tapes")
    return tape


def _same_shape(a: DiffValue, b: DiffValue, op: str) -> None:
    if a.data.shape != b.data.shape:
        raise ShapeError(f"{op} needs equal shapes, got {a.data.shape} and {b.data.shape}")


def matmul(a: DiffValue, b: DiffValue) -> DiffValue:
    """Matrix product: (m,k) @ (k,n) -> (m,n) or (m,k) @ (k,) -> (m,)."""
    ad, bd = a.data, b.data
    if ad.ndim != 2 or bd.ndim not in (1, 2):
        raise ShapeError(f"matmul expects (m,k) @ (k,n) or (m,k) @ (k,), got {ad.shape} @ {bd.shape}")
    if ad.shape[1] != bd.shape[0]:
        raise ShapeError(f"matmul inner dimensions disagree: {ad.shape} @ {bd.shape}")
    tape = _tape_of(a, b)
    out = ad @ bd

    if bd.ndim == 2:
        def rule(g: np.ndarray) -> None:
            a.ensure_grad()[...] += g @ bd.T
            b.ensure_grad()[...] += ad.T @ g
    else:
        def rule(g: np.ndarray) -> None:
            a.ensure_grad()[...] += np.outer(g, bd)
            b.ensure_grad()[...] += ad.T @ g

    return tape._record(out, rule)


def transpose(x: DiffValue) -> DiffValue:
    if x.data.ndim != 2:
        raise ShapeError(f"transpose expects a matrix, got shape {x.data.shape}")
    out = x.data.T

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g.T

    return x.tape._record(out, rule)


def add(a: DiffValue, b: DiffValue) -> DiffValue:
    _same_shape(a, b, "add")
    tape = _tape_of(a, b)

    def rule(g: np.ndarray) -> None:
        a.ensure_grad()[...] += g
        b.ensure_grad()[...] += g

    return tape._record(a.data + b.data, rule)


def sub(a: DiffValue, b: DiffValue) -> DiffValue:
    _same_shape(a, b, "sub")
    tape = _tape_of(a, b)

    def rule(g: np.ndarray) -> None:
        a.ensure_grad()[...] += g
        b.ensure_grad()[...] -= g

    return tape._record(a.data - b.data, rule)


def mul(a: DiffValue, b: DiffValue) -> DiffValue:
    _same_shape(a, b, "mul")
    tape = _tape_of(a, b)
    ad, bd = a.data, b.data

    def rule(g: np.ndarray) -> None:
        a.ensure_grad()[...] += g * bd
        b.ensure_grad()[...] += g * ad

    return tape._record(ad * bd, rule)


def scale(x: DiffValue, factor: float) -> DiffValue:
    f = float(factor)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g * f

    return x.tape._record(x.data * f, rule)


def const_mul(x: DiffValue, weights) -> DiffValue:
    """Elementwise product with a constant array (no gradient into weights)."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != x.data.shape:
        raise ShapeError(f"const_mul needs equal shapes, got {x.data.shape} and {w.shape}")

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g * w

    return x.tape._record(x.data * w, rule)


def sigmoid(x: DiffValue) -> DiffValue:
    # exp of a non-positive argument on both branches, so no overflow
    e = np.exp(-np.abs(x.data))
    out = np.where(x.data >= 0, 1.0 / (1.0 + e), e / (1.0 + e))

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g * out * (1.0 - out)

    return x.tape._record(out, rule)


def tanh(x: DiffValue) -> DiffValue:
    out = np.tanh(x.data)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g * (1.0 - out * out)

    return x.tape._record(out, rule)


def relu(x: DiffValue) -> DiffValue:
    # subgradient at 0 is taken as 0
    out = np.maximum(x.data, 0.0)
    mask = x.data > 0

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g * mask

    return x.tape._record(out, rule)


def absolute(x: DiffValue) -> DiffValue:
    sign = np.sign(x.data)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g * sign

    return x.tape._record(np.abs(x.data), rule)


def log(x: DiffValue) -> DiffValue:
    if np.any(x.data <= 0.0):
        raise DomainError("log requires strictly positive inputs")
    xd = x.data

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g / xd

    return x.tape._record(np.log(xd), rule)


def exp(x: DiffValue) -> DiffValue:
    out = np.exp(x.data)

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g * out

    return x.tape._record(out, rule)


def softmax(v: DiffValue) -> DiffValue:
    """Stable softmax of a vector; subtracts the max before exponentiating."""
    vd = v.data
    if vd.ndim != 1:
        raise ShapeError(f"softmax expects a vector, got shape {vd.shape}")
    if vd.size == 0:
        raise ShapeError("softmax of an empty vector")
    e = np.exp(vd - vd.max())
    out = e / e.sum()

    def rule(g: np.ndarray) -> None:
        dot = float(g @ out)
        v.ensure_grad()[...] += out * (g - dot)

    return v.tape._record(out, rule)


def concat(parts: Sequence[DiffValue]) -> DiffValue:
    parts = list(parts)
    if not parts:
        raise ShapeError("concat of an empty part list")
    for p in parts:
        if p.data.ndim != 1:
            raise ShapeError(f"concat expects vectors, got shape {p.data.shape}")
    tape = _tape_of(*parts)
    sizes = [p.data.size for p in parts]
    out = np.concatenate([p.data for p in parts])

    def rule(g: np.ndarray) -> None:
        offset = 0
        for p, size in zip(parts, sizes):
            p.ensure_grad()[...] += g[offset:offset + size]
            offset += size

    return tape._record(out, rule)


def vslice(x: DiffValue, start: int, stop: int) -> DiffValue:
    """Contiguous slice of a vector."""
    if x.data.ndim != 1:
        raise ShapeError(f"vslice expects a vector, got shape {x.data.shape}")
    n = x.data.size
    if not (0 <= start < stop <= n):
        raise ShapeError(f"vslice [{start}:{stop}] outside vector of length {n}")

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[start:stop] += g

    return x.tape._record(x.data[start:stop], rule)


def row(x: DiffValue, index: int) -> DiffValue:
    """One row of a matrix, as a vector."""
    if x.data.ndim != 2:
        raise ShapeError(f"row expects a matrix, got shape {x.data.shape}")
    if not 0 <= index < x.data.shape[0]:
        raise ShapeError(f"row {index} outside matrix with {x.data.shape[0]} rows")

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[index] += g

    return x.tape._record(x.data[index], rule)


def take_rows(x: DiffValue, indices) -> DiffValue:
    """Gather matrix rows by index; repeated indices accumulate gradient."""
    if x.data.ndim != 2:
        raise ShapeError(f"take_rows expects a matrix, got shape {x.data.shape}")
    idx = np.asarray(indices, dtype=np.intp)
    if idx.ndim != 1 or idx.size == 0:
        raise ShapeError("take_rows expects a non-empty index vector")
    if idx.min() < 0 or idx.max() >= x.data.shape[0]:
        raise ShapeError(f"row indices outside matrix with {x.data.shape[0]} rows")

    def rule(g: np.ndarray) -> None:
        np.add.at(x.ensure_grad(), idx, g)

    return x.tape._record(x.data[idx], rule)


def total(x: DiffValue) -> DiffValue:
    """Sum of all elements, as a shape-(1,) scalar."""
    out = np.array([x.data.sum()])

    def rule(g: np.ndarray) -> None:
        x.ensure_grad()[...] += g[0]

    return x.tape._record(out, rule)


def detach(x: DiffValue) -> DiffValue:
    """Same value as a fresh leaf: gradient flow stops here."""
    return x.tape._record(x.data, None)


def sum_scalars(parts: Sequence[DiffValue]) -> DiffValue:
    """Sum of shape-(1,) scalars."""
    parts = list(parts)
    if len(parts) == 1:
        return parts[0]
    return total(concat(parts))


def weighted_sum(parts: Sequence[DiffValue], weights) -> DiffValue:
    """Constant-weighted sum of shape-(1,) scalars."""
    return total(const_mul(concat(parts), np.asarray(weights, dtype=np.float64)))


ELEMENTWISE: dict[str, Callable] = {
    "sigmoid": sigmoid,
    "tanh": tanh,
    "relu": relu,
    "abs": absolute,
    "log": log,
    "exp": exp,
    "add": add,
    "sub": sub,
    "mul": mul,
}


def backward(output: DiffValue) -> None:
    """Accumulate d(output)/d(node) into every reachable node of the tape.

    Intended to run once per tape: gradients are additive, so a second call
    over the same records compounds the first.
    """
    if output.data.shape != (1,):
        raise ShapeError(f"backward needs a scalar of shape (1,), got {output.data.shape}")
    tape = output.tape
    output.ensure_grad()[0] += 1.0
    values = tape._values
    rules = tape._rules
    for i in range(output.tape_id, -1, -1):
        value = values[i]
        if value.grad is None:
            continue
        rule = rules[i]
        if rule is not None:
            rule(value.grad)


def finite_difference_check(build, params: Iterable[Parameter], eps: float = 1e-5) -> float:
    """Largest relative disagreement between recorded and numeric gradients.

    ``build(tape)`` must construct a shape-(1,) output, watching whichever of
    ``params`` it depends on. Each coordinate of each parameter is perturbed
    by +/- eps for a central difference, and the per-coordinate error is
    ``|analytic - numeric| / (|analytic| + |numeric| + 1e-12)``. A parameter
    the function never touches counts as having zero gradient on both sides.
    """
    params = list(params)
    tape = Tape()
    out = build(tape)
    backward(out)
    leaf_for = {id(p): leaf for p, leaf in tape.watched()}

    worst = 0.0
    for p in params:
        leaf = leaf_for.get(id(p))
        analytic = grad_of(leaf) if leaf is not None else np.zeros_like(p.data)
        flat = p.data.reshape(-1)
        aflat = analytic.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            plus = float(build(Tape()).data[0])
            flat[i] = orig - eps
            minus = float(build(Tape()).data[0])
            flat[i] = orig
            numeric = (plus - minus) / (2.0 * eps)
            a = float(aflat[i])
            err = abs(a - numeric) / (abs(a) + abs(numeric) + 1e-12)
            if err > worst:
                worst = err
    return worst
