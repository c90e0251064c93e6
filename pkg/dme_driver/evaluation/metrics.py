"""Open-loop planning metrics."""
from __future__ import annotations

from typing import Sequence

import numpy as np

from ..decision.rules import classify_trajectory
from ..exceptions import ContractError, ShapeError
from ..models.logic import DriverLogicOutput, RuleThresholds
from ..models.metrics import PlanMetrics
from ..models.scene import HORIZON_INDEX, Scene, Trajectory
from ..sim.raster import occupancy_at

HORIZONS = tuple(HORIZON_INDEX)


def l2_at_horizons(pred: Trajectory, expert: Trajectory) -> tuple[float, float, float, float]:
    """Displacement at 1 s / 2 s / 3 s and their mean."""
    if pred.waypoints.shape != expert.waypoints.shape:
        raise ShapeError(f"trajectory shapes differ: {pred.waypoints.shape} vs {expert.waypoints.shape}")
    errors = np.linalg.norm(pred.waypoints - expert.waypoints, axis=1)
    values = [float(errors[HORIZON_INDEX[h]]) for h in HORIZONS]
    return values[0], values[1], values[2], sum(values) / 3.0


def first_collision_index(traj: Trajectory, scene: Scene) -> int | None:
    """Index of the first waypoint inside an occupied cell at its own time; off-grid waypoints never collide."""
    for k, (x, y) in enumerate(traj.waypoints):
        cell = scene.grid.cell_of(float(x), float(y))
        if cell is not None and occupancy_at(scene, 0.5 * (k + 1))[cell]:
            return k
    return None


def collision_rate(preds: Sequence[tuple[Trajectory, Scene]]) -> tuple[float, float, float, float]:
    """Cumulative collision percentage at each horizon and their mean."""
    if not preds:
        raise ContractError("collision_rate needs at least one trajectory")
    first = [first_collision_index(traj, scene) for traj, scene in preds]
    rates = []
    for h in HORIZONS:
        colliding = sum(1 for k in first if k is not None and k <= HORIZON_INDEX[h])
        rates.append(100.0 * colliding / len(preds))
    return rates[0], rates[1], rates[2], sum(rates) / 3.0


def decision_mismatch_rate(
    preds: Sequence[tuple[Trajectory, Scene]],
    logic_outputs: Sequence[DriverLogicOutput],
    thresholds: RuleThresholds | None = None,
) -> float:
    if len(preds) != len(logic_outputs):
        raise ContractError(f"{len(preds)} trajectories but {len(logic_outputs)} logic outputs")
    if not preds:
        return 0.0
    thresholds = thresholds or RuleThresholds()
    mismatched = sum(
        1
        for (traj, scene), logic in zip(preds, logic_outputs)
        if classify_trajectory(traj, scene.ego, thresholds) is not logic.category
    )
    return 100.0 * mismatched / len(preds)


def plan_metrics(
    preds: Sequence[tuple[Trajectory, Scene]],
    logic_outputs: Sequence[DriverLogicOutput] | None = None,
    thresholds: RuleThresholds | None = None,
) -> PlanMetrics:
    if not preds:
        raise ContractError("plan_metrics needs at least one trajectory")
    l2 = np.array([l2_at_horizons(traj, scene.expert)[:3] for traj, scene in preds]).mean(axis=0)
    col = collision_rate(preds)[:3]
    mismatch = decision_mismatch_rate(preds, logic_outputs, thresholds) if logic_outputs is not None else None
    return PlanMetrics.from_horizons(tuple(float(v) for v in l2), col, mismatch)
