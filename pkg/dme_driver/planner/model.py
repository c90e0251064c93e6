"""Planning head: fused BEV tokens -> six cumulative waypoints."""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..encoding.encoder import TextEncoding, encode_text
from ..encoding.fusion import logical_fuse, project_bev_channels
from ..encoding.vocab import EMPTY, Vocabulary
from ..models.logic import DriverLogicOutput
from ..models.scene import WAYPOINT_COUNT, BevGrid, Trajectory
from ..nn import ops
from ..nn.tape import Matrix
from .params import PlannerParams


@dataclass(frozen=True)
class TextCues:
    """Token ids of the two text streams fed to the planner."""

    occ_ids: tuple[int, ...]
    plan_ids: tuple[int, ...]

    @classmethod
    def empty(cls) -> "TextCues":
        return cls((EMPTY,), (EMPTY,))

    @classmethod
    def from_logic(cls, logic: DriverLogicOutput | None, vocab: Vocabulary) -> "TextCues":
        if logic is None:
            return cls.empty()
        occ = vocab.tokenize(logic.gaze_text) + vocab.tokenize(logic.description_text)
        return cls(tuple(occ), tuple(vocab.tokenize(logic.decision_text)))


def plan_matrix(grid: BevGrid, cues: TextCues, p: PlannerParams) -> Matrix:
    """Differentiable 6×2 waypoints."""
    t_occ: TextEncoding = encode_text(cues.occ_ids, p.encoder)
    t_plan: TextEncoding = encode_text(cues.plan_ids, p.encoder)
    bev = project_bev_channels(grid, p.bev_proj)
    fused = logical_fuse(bev, t_occ, p.fuse_occ)
    fused = logical_fuse(fused, t_plan, p.fuse_plan)

    scores = ops.scale(ops.matmul(p.pool_query, ops.transpose(fused)), 1.0 / math.sqrt(p.dim))
    pooled = ops.matmul(ops.softmax_rows(scores), fused)
    hidden = ops.tanh(p.ff1(pooled))
    steps = ops.reshape(p.ff2(hidden), WAYPOINT_COUNT, 2)
    return ops.cumsum_rows(steps)


def plan(grid: BevGrid, logic: DriverLogicOutput | None, p: PlannerParams, vocab: Vocabulary) -> Trajectory:
    """Planned trajectory; without logic both text streams are the EMPTY token."""
    return Trajectory(plan_matrix(grid, TextCues.from_logic(logic, vocab), p).numpy())
