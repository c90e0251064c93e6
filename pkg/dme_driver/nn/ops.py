"""Differentiable primitives over :class:`~dme_driver.nn.tape.Matrix`.

Each primitive pairs a pure forward function with its vector-Jacobian
product. Backward functions receive ``(upstream, output, *inputs)``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..exceptions import ContractError, ShapeError
from .tape import Matrix, apply_op


def _unbroadcast(grad: np.ndarray, shape: tuple[int, int]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    if shape[0] == 1 and grad.shape[0] != 1:
        grad = grad.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] != 1:
        grad = grad.sum(axis=1, keepdims=True)
    return grad


def _check_broadcast(op: str, a: Matrix, b: Matrix) -> None:
    for da, db in zip(a.shape, b.shape):
        if da != db and da != 1 and db != 1:
            raise ShapeError(f"{op}: cannot broadcast {a.shape} with {b.shape}")


def matmul(a: Matrix, b: Matrix) -> Matrix:
    if a.cols != b.rows:
        raise ShapeError(f"matmul: {a.shape} x {b.shape} (inner dimensions {a.cols} != {b.rows})")
    return apply_op(
        "matmul",
        np.matmul,
        lambda g, out, x, y: (g @ y.T, x.T @ g),
        a,
        b,
    )


def add(a: Matrix, b: Matrix) -> Matrix:
    _check_broadcast("add", a, b)
    return apply_op(
        "add",
        np.add,
        lambda g, out, x, y: (_unbroadcast(g, x.shape), _unbroadcast(g, y.shape)),
        a,
        b,
    )


def sub(a: Matrix, b: Matrix) -> Matrix:
    _check_broadcast("sub", a, b)
    return apply_op(
        "sub",
        np.subtract,
        lambda g, out, x, y: (_unbroadcast(g, x.shape), _unbroadcast(-g, y.shape)),
        a,
        b,
    )


def mul(a: Matrix, b: Matrix) -> Matrix:
    _check_broadcast("mul", a, b)
    return apply_op(
        "mul",
        np.multiply,
        lambda g, out, x, y: (_unbroadcast(g * y, x.shape), _unbroadcast(g * x, y.shape)),
        a,
        b,
    )


def scale(a: Matrix, factor: float) -> Matrix:
    factor = float(factor)
    return apply_op("scale", lambda x: x * factor, lambda g, out, x: (g * factor,), a)


def shift(a: Matrix, offset: float) -> Matrix:
    offset = float(offset)
    return apply_op("shift", lambda x: x + offset, lambda g, out, x: (g,), a)


def transpose(a: Matrix) -> Matrix:
    return apply_op("transpose", lambda x: x.T.copy(), lambda g, out, x: (g.T,), a)


def tanh(a: Matrix) -> Matrix:
    return apply_op("tanh", np.tanh, lambda g, out, x: (g * (1.0 - out * out),), a)


def relu(a: Matrix) -> Matrix:
    """max(0, x); the subgradient at the kink is 0."""
    return apply_op(
        "relu",
        lambda x: np.maximum(x, 0.0),
        lambda g, out, x: (g * (x > 0.0),),
        a,
    )


def square(a: Matrix) -> Matrix:
    return apply_op("square", np.square, lambda g, out, x: (2.0 * x * g,), a)


def softmax_rows(m: Matrix) -> Matrix:
    if m.rows == 0 or m.cols == 0:
        raise ContractError(f"softmax_rows needs a nonempty matrix, got {m.shape}")

    def forward(x: np.ndarray) -> np.ndarray:
        shifted = np.exp(x - x.max(axis=1, keepdims=True))
        return shifted / shifted.sum(axis=1, keepdims=True)

    def backward(g, out, x):
        return (out * (g - (g * out).sum(axis=1, keepdims=True)),)

    return apply_op("softmax_rows", forward, backward, m)


def atan2(y: Matrix, x: Matrix) -> Matrix:
    if y.shape != x.shape:
        raise ShapeError(f"atan2: {y.shape} vs {x.shape}")

    def backward(g, out, yv, xv):
        r2 = xv * xv + yv * yv
        safe = np.where(r2 > 0.0, r2, 1.0)
        return (np.where(r2 > 0.0, g * xv / safe, 0.0), np.where(r2 > 0.0, -g * yv / safe, 0.0))

    return apply_op("atan2", np.arctan2, backward, y, x)


def row_norms(a: Matrix) -> Matrix:
    """Euclidean norm of each row as an n×1 column."""

    def backward(g, out, x):
        safe = np.where(out > 0.0, out, 1.0)
        return (np.where(out > 0.0, g * x / safe, 0.0),)

    return apply_op(
        "row_norms",
        lambda x: np.sqrt((x * x).sum(axis=1, keepdims=True)),
        backward,
        a,
    )


def sum_all(a: Matrix) -> Matrix:
    return apply_op(
        "sum_all",
        lambda x: np.array([[x.sum()]]),
        lambda g, out, x: (np.full(x.shape, g[0, 0]),),
        a,
    )


def mean_all(a: Matrix) -> Matrix:
    count = a.rows * a.cols
    if count == 0:
        raise ContractError("mean_all of an empty matrix")
    return scale(sum_all(a), 1.0 / count)


def concat_rows(parts: Sequence[Matrix]) -> Matrix:
    if not parts:
        raise ContractError("concat_rows needs at least one matrix")
    widths = {p.cols for p in parts}
    if len(widths) != 1:
        raise ShapeError(f"concat_rows: column counts differ {[p.shape for p in parts]}")
    splits = np.cumsum([p.rows for p in parts])[:-1]
    return apply_op(
        "concat_rows",
        lambda *xs: np.concatenate(xs, axis=0),
        lambda g, out, *xs: tuple(np.split(g, splits, axis=0)),
        *parts,
    )


def concat_cols(parts: Sequence[Matrix]) -> Matrix:
    if not parts:
        raise ContractError("concat_cols needs at least one matrix")
    heights = {p.rows for p in parts}
    if len(heights) != 1:
        raise ShapeError(f"concat_cols: row counts differ {[p.shape for p in parts]}")
    splits = np.cumsum([p.cols for p in parts])[:-1]
    return apply_op(
        "concat_cols",
        lambda *xs: np.concatenate(xs, axis=1),
        lambda g, out, *xs: tuple(np.split(g, splits, axis=1)),
        *parts,
    )


def slice_rows(a: Matrix, start: int, stop: int) -> Matrix:
    if not 0 <= start <= stop <= a.rows:
        raise ShapeError(f"slice_rows [{start}:{stop}] out of range for {a.shape}")

    def backward(g, out, x):
        grad = np.zeros_like(x)
        grad[start:stop] = g
        return (grad,)

    return apply_op("slice_rows", lambda x: x[start:stop].copy(), backward, a)


def slice_cols(a: Matrix, start: int, stop: int) -> Matrix:
    if not 0 <= start <= stop <= a.cols:
        raise ShapeError(f"slice_cols [{start}:{stop}] out of range for {a.shape}")

    def backward(g, out, x):
        grad = np.zeros_like(x)
        grad[:, start:stop] = g
        return (grad,)

    return apply_op("slice_cols", lambda x: x[:, start:stop].copy(), backward, a)


def gather_rows(table: Matrix, ids: Sequence[int]) -> Matrix:
    index = np.asarray(ids, dtype=np.int64)
    if index.size and (index.min() < 0 or index.max() >= table.rows):
        raise ContractError(f"gather_rows: ids must lie in [0, {table.rows}), got {index.min()}..{index.max()}")

    def backward(g, out, x):
        grad = np.zeros_like(x)
        np.add.at(grad, index, g)
        return (grad,)

    return apply_op("gather_rows", lambda x: x[index], backward, table)


def cumsum_rows(a: Matrix) -> Matrix:
    return apply_op(
        "cumsum_rows",
        lambda x: np.cumsum(x, axis=0),
        lambda g, out, x: (np.cumsum(g[::-1], axis=0)[::-1].copy(),),
        a,
    )


def reshape(a: Matrix, rows: int, cols: int) -> Matrix:
    if rows * cols != a.rows * a.cols:
        raise ShapeError(f"reshape: cannot view {a.shape} as ({rows}, {cols})")
    return apply_op(
        "reshape",
        lambda x: x.reshape(rows, cols).copy(),
        lambda g, out, x: (g.reshape(x.shape),),
        a,
    )


def bilinear_sample(fields: np.ndarray, coords: Matrix, fill: float) -> Matrix:
    """Sample ``fields[k]`` at the continuous index ``coords[k]`` for every row k.

    ``coords`` is K×2 in cell-center index units. Rows outside
    ``[-0.5, size - 0.5)`` on either axis return ``fill`` with zero gradient;
    rows in the outer half-cell are clamped to the border centers.
    """
    fields = np.asarray(fields, dtype=np.float64)
    if fields.ndim != 3 or coords.shape != (fields.shape[0], 2):
        raise ShapeError(f"bilinear_sample: fields {fields.shape} vs coords {coords.shape}")
    _, height, width = fields.shape
    limits = np.array([height, width], dtype=np.float64)

    def locate(c: np.ndarray):
        inside = np.all((c >= -0.5) & (c < limits - 0.5), axis=1)
        clamped = np.clip(c, 0.0, limits - 1.0)
        free = (c > 0.0) & (c < limits - 1.0)
        base = np.minimum(np.floor(clamped).astype(np.int64), (limits - 2).astype(np.int64))
        base = np.maximum(base, 0)
        frac = clamped - base
        return inside, free, base, frac

    def corners(base: np.ndarray):
        k = np.arange(base.shape[0])
        i0, j0 = base[:, 0], base[:, 1]
        i1, j1 = np.minimum(i0 + 1, height - 1), np.minimum(j0 + 1, width - 1)
        return fields[k, i0, j0], fields[k, i0, j1], fields[k, i1, j0], fields[k, i1, j1]

    def forward(c: np.ndarray) -> np.ndarray:
        inside, _, base, frac = locate(c)
        f00, f01, f10, f11 = corners(base)
        wi, wj = frac[:, 0], frac[:, 1]
        value = (1 - wi) * ((1 - wj) * f00 + wj * f01) + wi * ((1 - wj) * f10 + wj * f11)
        return np.where(inside, value, fill).reshape(-1, 1)

    def backward(g, out, c):
        inside, free, base, frac = locate(c)
        f00, f01, f10, f11 = corners(base)
        wi, wj = frac[:, 0], frac[:, 1]
        d_i = (1 - wj) * (f10 - f00) + wj * (f11 - f01)
        d_j = (1 - wi) * (f01 - f00) + wi * (f11 - f10)
        grad = np.stack([d_i, d_j], axis=1) * free * inside[:, None]
        return (grad * g,)

    return apply_op("bilinear_sample", forward, backward, coords)

