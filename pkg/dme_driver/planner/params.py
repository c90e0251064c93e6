"""Planner parameters and their versioned binary checkpoint."""
from __future__ import annotations

import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..encoding.encoder import EncoderParams
from ..exceptions import ContractError, RecordFormatError, ShapeError
from ..models.scene import FEATURE_CHANNELS, WAYPOINT_COUNT
from ..nn.attention import AttentionParams
from ..nn.layers import Linear, uniform_init
from ..nn.tape import Matrix

logger = logging.getLogger(__name__)

MAGIC = b"DMEP"
VERSION = 1
OUTPUT_DIM = WAYPOINT_COUNT * 2


@dataclass
class PlannerParams:
    encoder: EncoderParams
    bev_proj: Linear
    fuse_occ: AttentionParams
    fuse_plan: AttentionParams
    pool_query: Matrix
    ff1: Linear
    ff2: Linear

    def __post_init__(self):
        dim = self.encoder.dim
        if self.bev_proj.out_dim != dim or self.fuse_occ.dim != dim or self.fuse_plan.dim != dim:
            raise ShapeError(f"projection and fusion dims must equal the text dim {dim}")
        if self.pool_query.shape != (1, dim):
            raise ShapeError(f"pooling query must be (1, {dim}), got {self.pool_query.shape}")
        if self.ff1.in_dim != dim or self.ff2.in_dim != self.ff1.out_dim or self.ff2.out_dim != OUTPUT_DIM:
            raise ShapeError(f"feed-forward head must map {dim} -> hidden -> {OUTPUT_DIM}")

    @classmethod
    def init(
        cls,
        seed: int,
        vocab_size: int,
        dim: int = 32,
        num_heads: int = 4,
        hidden: int = 64,
        max_len: int = 64,
        channels: int = FEATURE_CHANNELS,
    ) -> "PlannerParams":
        rng = np.random.default_rng(seed)
        return cls(
            encoder=EncoderParams.init(rng, vocab_size, dim, max_len),
            bev_proj=Linear.init(rng, channels, dim),
            fuse_occ=AttentionParams.init(rng, dim, num_heads),
            fuse_plan=AttentionParams.init(rng, dim, num_heads),
            pool_query=uniform_init(rng, 1, dim, dim),
            ff1=Linear.init(rng, dim, hidden),
            ff2=Linear.init(rng, hidden, OUTPUT_DIM),
        )

    @classmethod
    def zeros(
        cls,
        vocab_size: int,
        dim: int = 32,
        num_heads: int = 4,
        hidden: int = 64,
        max_len: int = 64,
        channels: int = FEATURE_CHANNELS,
    ) -> "PlannerParams":
        return cls(
            encoder=EncoderParams.zeros(vocab_size, dim, max_len),
            bev_proj=Linear.zeros(channels, dim),
            fuse_occ=AttentionParams.zeros(dim, num_heads),
            fuse_plan=AttentionParams.zeros(dim, num_heads),
            pool_query=Matrix.zeros(1, dim, requires_grad=True),
            ff1=Linear.zeros(dim, hidden),
            ff2=Linear.zeros(hidden, OUTPUT_DIM),
        )

    @property
    def dim(self) -> int:
        return self.encoder.dim

    def parameters(self) -> dict[str, Matrix]:
        """Trainable tensors by dotted name, in a fixed order."""
        params: dict[str, Matrix] = {}
        for prefix, part in (
            ("encoder", self.encoder),
            ("bev_proj", self.bev_proj),
            ("fuse_occ", self.fuse_occ),
            ("fuse_plan", self.fuse_plan),
        ):
            for name, matrix in part.parameters().items():
                params[f"{prefix}.{name}"] = matrix
        params["pool_query"] = self.pool_query
        for prefix, part in (("ff1", self.ff1), ("ff2", self.ff2)):
            for name, matrix in part.parameters().items():
                params[f"{prefix}.{name}"] = matrix
        return params

    def tensors(self) -> dict[str, np.ndarray]:
        out = {name: m.value for name, m in self.parameters().items()}
        out["encoder.positional"] = self.encoder.positional
        return out

    @classmethod
    def from_tensors(cls, tensors: dict[str, np.ndarray]) -> "PlannerParams":
        def mat(name: str) -> Matrix:
            if name not in tensors:
                raise RecordFormatError(f"checkpoint lacks tensor {name!r}")
            return Matrix(tensors[name], requires_grad=True)

        def linear(prefix: str) -> Linear:
            return Linear(mat(f"{prefix}.weight"), mat(f"{prefix}.bias"))

        def attention(prefix: str) -> AttentionParams:
            heads = sum(1 for name in tensors if name.startswith(f"{prefix}.query."))
            output = mat(f"{prefix}.output")
            return AttentionParams(
                heads,
                output.rows,
                [mat(f"{prefix}.query.{h}") for h in range(heads)],
                [mat(f"{prefix}.key.{h}") for h in range(heads)],
                [mat(f"{prefix}.value.{h}") for h in range(heads)],
                output,
            )

        if "encoder.positional" not in tensors:
            raise RecordFormatError("checkpoint lacks tensor 'encoder.positional'")
        return cls(
            encoder=EncoderParams(mat("encoder.embedding"), np.array(tensors["encoder.positional"])),
            bev_proj=linear("bev_proj"),
            fuse_occ=attention("fuse_occ"),
            fuse_plan=attention("fuse_plan"),
            pool_query=mat("pool_query"),
            ff1=linear("ff1"),
            ff2=linear("ff2"),
        )

    def copy(self) -> "PlannerParams":
        return PlannerParams.from_tensors({name: value.copy() for name, value in self.tensors().items()})


def save_checkpoint(params: PlannerParams, path: Path) -> None:
    """Layout: magic b"DMEP", u32 version, then until the end of the file one
    record per tensor: u32 name length, UTF-8 name, u32 rows, u32 cols, float64
    payload. All integers and floats are little-endian.
    """
    tensors = params.tensors()
    chunks = [MAGIC, struct.pack("<I", VERSION)]
    for name, value in tensors.items():
        encoded = name.encode("utf-8")
        rows, cols = value.shape
        chunks.append(struct.pack("<I", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<II", rows, cols))
        chunks.append(np.ascontiguousarray(value, dtype="<f8").tobytes())
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(b"".join(chunks))
    logger.info(f"Saved {len(tensors)} tensors to {path}")


def load_checkpoint(path: Path) -> PlannerParams:
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise ContractError(f"cannot read checkpoint {path}: {e}") from e
    if blob[:4] != MAGIC:
        raise RecordFormatError(f"{path} is not a planner checkpoint (bad magic {blob[:4]!r})")
    try:
        (version,) = struct.unpack_from("<I", blob, 4)
        if version != VERSION:
            raise RecordFormatError(f"{path}: unsupported checkpoint version {version}")
        offset = 8
        tensors: dict[str, np.ndarray] = {}
        while offset < len(blob):
            (length,) = struct.unpack_from("<I", blob, offset)
            offset += 4
            name = blob[offset : offset + length].decode("utf-8")
            offset += length
            rows, cols = struct.unpack_from("<II", blob, offset)
            offset += 8
            size = rows * cols * 8
            if offset + size > len(blob):
                raise RecordFormatError(f"{path}: tensor {name!r} runs past the end of the file")
            tensors[name] = np.frombuffer(blob, dtype="<f8", count=rows * cols, offset=offset).reshape(rows, cols).astype(np.float64)
            offset += size
    except (struct.error, UnicodeDecodeError) as e:
        raise RecordFormatError(f"{path}: truncated or corrupt checkpoint: {e}") from e
    logger.info(f"Loaded {len(tensors)} tensors from {path}")
    return PlannerParams.from_tensors(tensors)
