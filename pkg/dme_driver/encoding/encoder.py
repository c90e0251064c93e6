"""Trainable token embeddings plus fixed sinusoidal positions.

Stands behind the same interface a pretrained sentence encoder would: text
in, one d-dimensional row per token out.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..exceptions import ContractError
from ..nn import ops
from ..nn.layers import uniform_init
from ..nn.tape import Matrix
from .vocab import Vocabulary

logger = logging.getLogger(__name__)


def sinusoidal_table(max_len: int, dim: int) -> np.ndarray:
    positions = np.arange(max_len, dtype=np.float64)[:, None]
    rates = np.power(10000.0, -(2 * (np.arange(dim) // 2)) / dim)
    angles = positions * rates[None, :]
    table = np.empty((max_len, dim))
    table[:, 0::2] = np.sin(angles[:, 0::2])
    table[:, 1::2] = np.cos(angles[:, 1::2])
    return table


@dataclass
class EncoderParams:
    embedding: Matrix
    positional: np.ndarray

    @classmethod
    def init(cls, rng: np.random.Generator, vocab_size: int, dim: int, max_len: int) -> "EncoderParams":
        return cls(uniform_init(rng, vocab_size, dim, dim), sinusoidal_table(max_len, dim))

    @classmethod
    def zeros(cls, vocab_size: int, dim: int, max_len: int) -> "EncoderParams":
        return cls(Matrix.zeros(vocab_size, dim, requires_grad=True), sinusoidal_table(max_len, dim))

    @property
    def dim(self) -> int:
        return self.embedding.cols

    @property
    def max_len(self) -> int:
        return self.positional.shape[0]

    def parameters(self) -> dict[str, Matrix]:
        return {"embedding": self.embedding}


@dataclass(frozen=True)
class TextEncoding:
    ids: tuple[int, ...]
    matrix: Matrix

    @property
    def n(self) -> int:
        return self.matrix.rows

    @property
    def d(self) -> int:
        return self.matrix.cols


def encode_text(ids: Sequence[int], p: EncoderParams) -> TextEncoding:
    if not ids:
        raise ContractError("encode_text needs at least one token id (use EMPTY for empty text)")
    vocab_size = p.embedding.rows
    bad = [i for i in ids if not 0 <= i < vocab_size]
    if bad:
        raise ContractError(f"token ids {bad} fall outside the embedding table of {vocab_size} rows")
    if len(ids) > p.max_len:
        logger.warning(f"Truncating {len(ids)} tokens to the positional table length {p.max_len}")
        ids = ids[: p.max_len]
    n = len(ids)
    rows = ops.add(ops.gather_rows(p.embedding, ids), Matrix(p.positional[:n]))
    return TextEncoding(tuple(ids), rows)


def encode(text: str, vocab: Vocabulary, p: EncoderParams) -> TextEncoding:
    return encode_text(vocab.tokenize(text), p)


def build_occ_text(gaze: str, description: str, vocab: Vocabulary, p: EncoderParams) -> TextEncoding:
    """Gaze encoding followed by the scene-description encoding."""
    first = encode(gaze, vocab, p)
    second = encode(description, vocab, p)
    return TextEncoding(first.ids + second.ids, ops.concat_rows([first.matrix, second.matrix]))
