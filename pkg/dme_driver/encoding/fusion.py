"""LogicalFusioner: BEV tokens attend to driver-logic text, plus a residual."""
from __future__ import annotations

import numpy as np

from ..exceptions import ShapeError
from ..models.scene import BevGrid, GridSpec
from ..nn import ops
from ..nn.attention import AttentionParams, multi_head_attention
from ..nn.layers import Linear
from ..nn.tape import Matrix
from .encoder import TextEncoding


def bev_tokens(grid: BevGrid) -> np.ndarray:
    """(H, W, C) -> (H·W, C), cells in row-major (i-major) order."""
    h, w, c = grid.features.shape
    return grid.features.reshape(h * w, c)


def tokens_to_grid(tokens: np.ndarray, spec: GridSpec) -> np.ndarray:
    if tokens.shape[0] != spec.size * spec.size:
        raise ShapeError(f"{tokens.shape[0]} tokens do not fill a {spec.size}x{spec.size} grid")
    return tokens.reshape(spec.size, spec.size, tokens.shape[1])


def project_bev_channels(grid: BevGrid, projection: Linear | None = None) -> Matrix:
    """Cell feature vectors as a token matrix, mapped to the model dim when a projection is given."""
    tokens = Matrix(bev_tokens(grid))
    if projection is None:
        return tokens
    if projection.in_dim != grid.channels:
        raise ShapeError(f"projection expects {projection.in_dim} channels, grid has {grid.channels}")
    return projection(tokens)


def logical_fuse(b: Matrix, t: TextEncoding, p: AttentionParams) -> Matrix:
    """MHA(Q=B, K=T, V=T) + B."""
    if b.cols != t.d:
        raise ShapeError(f"BEV tokens have dim {b.cols} but the text encoding has dim {t.d}")
    return ops.add(multi_head_attention(b, t.matrix, t.matrix, p), b)
