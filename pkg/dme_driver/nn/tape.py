"""Rank-2 float64 matrices and the tape that records operations on them.

Every primitive in :mod:`dme_driver.nn.ops` goes through :func:`apply_op`. When a
:class:`GradTape` is open in the current context the call is appended to it
as a Wengert-list record holding the input arrays it saw, so the tape can be
run backwards (reverse-mode accumulation) or replayed forwards.
"""
from __future__ import annotations

import contextvars
import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..exceptions import ContractError, NonFiniteError, ShapeError

logger = logging.getLogger(__name__)

ForwardFn = Callable[..., np.ndarray]
BackwardFn = Callable[..., tuple[np.ndarray | None, ...]]

_active_tape: contextvars.ContextVar["GradTape | None"] = contextvars.ContextVar(
    "dme_driver_active_tape", default=None
)


def check_finite(values: np.ndarray, where: str) -> None:
    if not np.all(np.isfinite(values)):
        raise NonFiniteError(f"{where} produced non-finite values")


class Matrix:
    """A rows × cols block of float64 values stored row-major."""

    __slots__ = ("value", "requires_grad", "name")

    def __init__(self, value, requires_grad: bool = False, name: str | None = None):
        array = np.array(value, dtype=np.float64)
        if array.ndim == 0:
            array = array.reshape(1, 1)
        elif array.ndim == 1:
            array = array.reshape(1, -1)
        elif array.ndim != 2:
            raise ShapeError(f"Matrix needs rank <= 2 data, got shape {array.shape}")
        check_finite(array, name or "Matrix")
        self.value = array
        self.requires_grad = requires_grad
        self.name = name

    @classmethod
    def wrap(cls, array: np.ndarray) -> "Matrix":
        """Adopt an already-validated float64 array without copying."""
        matrix = cls.__new__(cls)
        matrix.value = array
        matrix.requires_grad = False
        matrix.name = None
        return matrix

    @classmethod
    def zeros(cls, rows: int, cols: int, requires_grad: bool = False, name: str | None = None) -> "Matrix":
        return cls(np.zeros((rows, cols)), requires_grad=requires_grad, name=name)

    @property
    def rows(self) -> int:
        return self.value.shape[0]

    @property
    def cols(self) -> int:
        return self.value.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.value.shape

    @property
    def data(self) -> tuple[float, ...]:
        return tuple(self.value.ravel().tolist())

    def item(self) -> float:
        if self.shape != (1, 1):
            raise ContractError(f"item() needs a 1x1 matrix, got {self.shape}")
        return float(self.value[0, 0])

    def numpy(self) -> np.ndarray:
        return self.value.copy()

    def __repr__(self) -> str:
        label = f" {self.name!r}" if self.name else ""
        return f"Matrix{label}({self.rows}x{self.cols})"


@dataclass(frozen=True)
class TapeRecord:
    op: str
    inputs: tuple[Matrix, ...]
    input_values: tuple[np.ndarray, ...]
    output: Matrix
    forward: ForwardFn
    backward: BackwardFn


class GradTape:
    """Records primitive operations for reverse-mode differentiation.

    Use as a context manager; a tape belongs to the thread (context) that
    opened it and tapes do not nest.
    """

    def __init__(self):
        self.records: list[TapeRecord] = []
        self._token: contextvars.Token | None = None

    def __enter__(self) -> "GradTape":
        if _active_tape.get() is not None:
            raise ContractError("a GradTape is already recording in this context")
        self._token = _active_tape.set(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _active_tape.reset(self._token)
        self._token = None

    def __len__(self) -> int:
        return len(self.records)

    def gradient(self, target: Matrix, sources: Sequence[Matrix]) -> list[np.ndarray]:
        """d(target)/d(source) for each source; target must be 1x1."""
        if target.shape != (1, 1):
            raise ContractError(f"gradient target must be a scalar (1x1), got {target.shape}")
        grads: dict[int, np.ndarray] = {id(target): np.ones((1, 1))}
        for record in reversed(self.records):
            upstream = grads.get(id(record.output))
            if upstream is None:
                continue
            input_grads = record.backward(upstream, record.output.value, *record.input_values)
            for matrix, grad in zip(record.inputs, input_grads):
                if grad is None:
                    continue
                key = id(matrix)
                grads[key] = grads[key] + grad if key in grads else grad
        return [grads.get(id(source), np.zeros_like(source.value)) for source in sources]

    def replay(self) -> list[np.ndarray]:
        """Recompute every recorded output from the cached leaf inputs."""
        produced: dict[int, np.ndarray] = {}
        outputs = []
        for record in self.records:
            args = [produced.get(id(m), cached) for m, cached in zip(record.inputs, record.input_values)]
            value = record.forward(*args)
            produced[id(record.output)] = value
            outputs.append(value)
        return outputs

    def replay_matches(self) -> bool:
        return all(
            np.array_equal(replayed, record.output.value)
            for replayed, record in zip(self.replay(), self.records)
        )


def active_tape() -> GradTape | None:
    return _active_tape.get()


def apply_op(op: str, forward: ForwardFn, backward: BackwardFn, *inputs: Matrix) -> Matrix:
    values = tuple(m.value for m in inputs)
    result = forward(*values)
    check_finite(result, op)
    output = Matrix.wrap(result)
    tape = _active_tape.get()
    if tape is not None:
        tape.records.append(TapeRecord(op, inputs, values, output, forward, backward))
    return output
