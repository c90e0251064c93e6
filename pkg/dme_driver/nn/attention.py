"""Multi-head scaled dot-product attention on the tape."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..exceptions import ContractError, EmptyContextError, ShapeError
from . import ops
from .layers import uniform_init
from .tape import Matrix

# re-exported for callers that only need the normalizer
softmax_rows = ops.softmax_rows


@dataclass
class AttentionParams:
    """Per-head query/key/value projections (d × d_h each) and a d × d output map."""

    num_heads: int
    dim: int
    query: list[Matrix]
    key: list[Matrix]
    value: list[Matrix]
    output: Matrix

    def __post_init__(self):
        if self.num_heads < 1 or self.dim % self.num_heads:
            raise ContractError(f"model dim {self.dim} must be divisible by num_heads {self.num_heads}")
        expected = (self.dim, self.head_dim)
        for role in ("query", "key", "value"):
            mats = getattr(self, role)
            if len(mats) != self.num_heads or any(m.shape != expected for m in mats):
                raise ShapeError(f"{role} projections must be {self.num_heads} matrices of {expected}")
        if self.output.shape != (self.dim, self.dim):
            raise ShapeError(f"output projection must be {(self.dim, self.dim)}, got {self.output.shape}")

    @property
    def head_dim(self) -> int:
        return self.dim // self.num_heads

    @classmethod
    def init(cls, rng: np.random.Generator, dim: int, num_heads: int) -> "AttentionParams":
        if num_heads < 1 or dim % num_heads:
            raise ContractError(f"model dim {dim} must be divisible by num_heads {num_heads}")
        head_dim = dim // num_heads

        def heads() -> list[Matrix]:
            return [uniform_init(rng, dim, head_dim, dim) for _ in range(num_heads)]

        query, key, value = heads(), heads(), heads()
        return cls(num_heads, dim, query, key, value, uniform_init(rng, dim, dim, dim))

    @classmethod
    def zeros(cls, dim: int, num_heads: int) -> "AttentionParams":
        head_dim = dim // max(num_heads, 1)

        def heads() -> list[Matrix]:
            return [Matrix.zeros(dim, head_dim, requires_grad=True) for _ in range(num_heads)]

        return cls(num_heads, dim, heads(), heads(), heads(), Matrix.zeros(dim, dim, requires_grad=True))

    def parameters(self) -> dict[str, Matrix]:
        params: dict[str, Matrix] = {}
        for role in ("query", "key", "value"):
            for h, matrix in enumerate(getattr(self, role)):
                params[f"{role}.{h}"] = matrix
        params["output"] = self.output
        return params


def multi_head_attention(q: Matrix, k: Matrix, v: Matrix, p: AttentionParams) -> Matrix:
    """Attend from the nq query rows to the nk key/value rows; returns nq × d."""
    if k.rows == 0:
        raise EmptyContextError("attention needs at least one key; encode empty text as the EMPTY token")
    if k.rows != v.rows:
        raise ShapeError(f"keys {k.shape} and values {v.shape} must have the same row count")
    for label, m in (("queries", q), ("keys", k), ("values", v)):
        if m.cols != p.dim:
            raise ShapeError(f"{label} have {m.cols} columns but the attention dim is {p.dim}")

    scale = 1.0 / math.sqrt(p.head_dim)
    heads = []
    for h in range(p.num_heads):
        qh = ops.matmul(q, p.query[h])
        kh = ops.matmul(k, p.key[h])
        vh = ops.matmul(v, p.value[h])
        weights = ops.softmax_rows(ops.scale(ops.matmul(qh, ops.transpose(kh)), scale))
        heads.append(ops.matmul(weights, vh))
    return ops.matmul(ops.concat_cols(heads), p.output)
