"""Training objective: imitation, soft collision and decision consistency."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import distance_transform_edt

from ..decision.rules import consistency_penalty
from ..models.logic import DecisionCategory, RuleThresholds
from ..models.scene import WAYPOINT_COUNT, WAYPOINT_DT, Scene
from ..models.training import AblationMode, LossWeights
from ..nn import ops
from ..nn.tape import Matrix
from ..sim.raster import occupancy_at

COLLISION_MARGIN = 1.0  # meters


def clearance_fields(scene: Scene) -> np.ndarray:
    """(6, H, W) distance in meters from each cell center to the nearest occupied cell, one per waypoint time."""
    spec = scene.grid
    far = COLLISION_MARGIN + 2.0 * spec.half_extent
    fields = np.empty((WAYPOINT_COUNT, spec.size, spec.size))
    for k in range(WAYPOINT_COUNT):
        occupied = occupancy_at(scene, WAYPOINT_DT * (k + 1)).astype(bool)
        if not occupied.any():
            fields[k] = far
        else:
            fields[k] = distance_transform_edt(~occupied) * spec.resolution
    return fields


def collision_loss(traj: Matrix, scene: Scene, fields: np.ndarray | None = None) -> Matrix:
    """Σ_k max(0, margin − clearance at waypoint k); off-grid waypoints contribute 0."""
    if fields is None:
        fields = clearance_fields(scene)
    spec = scene.grid
    coords = ops.shift(ops.scale(traj, 1.0 / spec.resolution), -spec.lower / spec.resolution - 0.5)
    clearance = ops.bilinear_sample(fields, coords, fill=COLLISION_MARGIN)
    return ops.sum_all(ops.relu(ops.shift(ops.scale(clearance, -1.0), COLLISION_MARGIN)))


def imitation_loss(pred: Matrix, expert: np.ndarray) -> Matrix:
    """Mean over waypoints of the squared Euclidean error."""
    diff = ops.sub(pred, Matrix(expert))
    return ops.scale(ops.sum_all(ops.square(diff)), 1.0 / WAYPOINT_COUNT)


@dataclass(frozen=True)
class LossTerms:
    imitation: Matrix
    collision: Matrix
    consistency: Matrix
    total: Matrix

    def values(self) -> dict[str, float]:
        return {
            "imitation": self.imitation.item(),
            "collision": self.collision.item(),
            "consistency": self.consistency.item(),
            "total": self.total.item(),
        }


def total_loss(
    pred: Matrix,
    scene: Scene,
    decision: DecisionCategory | None,
    w: LossWeights,
    ablation: AblationMode = AblationMode.DM_TEXT_CL,
    thresholds: RuleThresholds | None = None,
    fields: np.ndarray | None = None,
) -> LossTerms:
    """λ_im·imitation + λ_col·collision + λ_cons·consistency; the consistency weight is 0 outside dm_text_cl."""
    thresholds = thresholds or RuleThresholds()
    imitation = imitation_loss(pred, scene.expert.waypoints)
    collision = collision_loss(pred, scene, fields)
    if decision is None:
        consistency = Matrix.zeros(1, 1)
    else:
        consistency = consistency_penalty(pred, decision, scene.ego, thresholds)

    total = ops.add(ops.scale(imitation, w.imitation), ops.scale(collision, w.collision))
    if ablation is AblationMode.DM_TEXT_CL and decision is not None and w.consistency:
        total = ops.add(total, ops.scale(consistency, w.consistency))
    return LossTerms(imitation, collision, consistency, total)
