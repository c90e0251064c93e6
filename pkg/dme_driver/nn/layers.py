from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import ops
from .tape import Matrix


def uniform_init(rng: np.random.Generator, rows: int, cols: int, fan_in: int, name: str | None = None) -> Matrix:
    """Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights."""
    bound = 1.0 / math.sqrt(fan_in)
    return Matrix(rng.uniform(-bound, bound, size=(rows, cols)), requires_grad=True, name=name)


@dataclass
class Linear:
    weight: Matrix
    bias: Matrix

    @classmethod
    def init(cls, rng: np.random.Generator, in_dim: int, out_dim: int) -> "Linear":
        return cls(
            weight=uniform_init(rng, in_dim, out_dim, in_dim),
            bias=Matrix.zeros(1, out_dim, requires_grad=True),
        )

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int) -> "Linear":
        return cls(Matrix.zeros(in_dim, out_dim, requires_grad=True), Matrix.zeros(1, out_dim, requires_grad=True))

    @property
    def in_dim(self) -> int:
        return self.weight.rows

    @property
    def out_dim(self) -> int:
        return self.weight.cols

    def __call__(self, x: Matrix) -> Matrix:
        return ops.add(ops.matmul(x, self.weight), self.bias)

    def parameters(self) -> dict[str, Matrix]:
        return {"weight": self.weight, "bias": self.bias}
