"""Trajectory -> maneuver rules and their differentiable hinge surrogate.

Three discriminants are read off a trajectory in the ego frame:

- heading change: direction of the final segment relative to the ego heading
- lateral offset: y of the final waypoint
- end speed: length of the final segment over the waypoint spacing

Rules apply in precedence order Stop > Turn > LaneChange > Accelerate /
Decelerate > Forward. The classifier and the penalty read the discriminants
from the same tape computation, so their thresholds agree bit for bit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from ..models.logic import DecisionCategory, RuleThresholds
from ..models.scene import WAYPOINT_COUNT, WAYPOINT_DT, EgoStatus, Trajectory
from ..nn import ops
from ..nn.tape import Matrix

# Hinges for the strict (open) side of a threshold vanish only this far inside it.
OPEN_MARGIN = 1e-9


@dataclass(frozen=True)
class ManeuverFeatures:
    heading_change: float
    lateral: float
    end_speed: float


def _discriminants(traj: Matrix, ego: EgoStatus) -> tuple[Matrix, Matrix, Matrix]:
    """(heading change, lateral offset, end speed) as 1x1 matrices."""
    points = traj
    if ego.heading != 0.0:
        c, s = math.cos(ego.heading), math.sin(ego.heading)
        points = ops.matmul(traj, Matrix([[c, -s], [s, c]]))
    last = WAYPOINT_COUNT - 1
    segment = ops.sub(ops.slice_rows(points, last, last + 1), ops.slice_rows(points, last - 1, last))
    heading = ops.atan2(ops.slice_cols(segment, 1, 2), ops.slice_cols(segment, 0, 1))
    lateral = ops.slice_cols(ops.slice_rows(points, last, last + 1), 1, 2)
    speed = ops.scale(ops.row_norms(segment), 1.0 / WAYPOINT_DT)
    return heading, lateral, speed


def maneuver_features(traj: Trajectory, ego: EgoStatus) -> ManeuverFeatures:
    heading, lateral, speed = _discriminants(Matrix(traj.waypoints), ego)
    return ManeuverFeatures(heading.item(), lateral.item(), speed.item())


def classify_trajectory(traj: Trajectory, ego: EgoStatus, th: RuleThresholds) -> DecisionCategory:
    f = maneuver_features(traj, ego)
    if f.end_speed < th.v_stop:
        return DecisionCategory.STOP
    if f.heading_change >= th.turn_rad:
        return DecisionCategory.TURN_LEFT
    if f.heading_change <= -th.turn_rad:
        return DecisionCategory.TURN_RIGHT
    if f.lateral >= th.lateral_lc:
        return DecisionCategory.LANE_CHANGE_LEFT
    if f.lateral <= -th.lateral_lc:
        return DecisionCategory.LANE_CHANGE_RIGHT
    if f.end_speed > th.accel_ratio * ego.speed:
        return DecisionCategory.ACCELERATE
    if f.end_speed < th.decel_ratio * ego.speed:
        return DecisionCategory.DECELERATE
    return DecisionCategory.FORWARD


def _at_least(x: Matrix, limit: float) -> Matrix:
    """Zero iff x >= limit."""
    return ops.relu(ops.shift(ops.scale(x, -1.0), limit))


def _at_most(x: Matrix, limit: float) -> Matrix:
    """Zero iff x <= limit."""
    return ops.relu(ops.shift(x, -limit))


def _above(x: Matrix, limit: float) -> Matrix:
    return _at_least(x, limit + OPEN_MARGIN)


def _below(x: Matrix, limit: float) -> Matrix:
    return _at_most(x, limit - OPEN_MARGIN)


def _inside(x: Matrix, limit: float) -> Matrix:
    """Zero only for |x| < limit."""
    return ops.add(_below(x, limit), _above(x, -limit))


def consistency_penalty(
    traj: Matrix | Trajectory,
    decision: DecisionCategory,
    ego: EgoStatus,
    th: RuleThresholds,
) -> Matrix:
    """Sum of hinges on the rule margins; 1x1, zero exactly when ``classify_trajectory`` returns ``decision``
    away from the strict thresholds."""
    if isinstance(traj, Trajectory):
        traj = Matrix(traj.waypoints)
    heading, lateral, speed = _discriminants(traj, ego)

    theta, lane = th.turn_rad, th.lateral_lc
    if decision is DecisionCategory.STOP:
        return _below(speed, th.v_stop)

    terms = [_at_least(speed, th.v_stop)]
    if decision is DecisionCategory.TURN_LEFT:
        terms.append(_at_least(heading, theta))
    elif decision is DecisionCategory.TURN_RIGHT:
        terms.append(_at_most(heading, -theta))
    else:
        terms.append(_inside(heading, theta))
        if decision is DecisionCategory.LANE_CHANGE_LEFT:
            terms.append(_at_least(lateral, lane))
        elif decision is DecisionCategory.LANE_CHANGE_RIGHT:
            terms.append(_at_most(lateral, -lane))
        else:
            terms.append(_inside(lateral, lane))
            fast = th.accel_ratio * ego.speed
            slow = th.decel_ratio * ego.speed
            if decision is DecisionCategory.ACCELERATE:
                terms.append(_above(speed, fast))
            elif decision is DecisionCategory.DECELERATE:
                terms.append(_below(speed, slow))
            else:
                terms.append(_at_least(speed, slow))
                terms.append(_at_most(speed, fast))

    total = terms[0]
    for term in terms[1:]:
        total = ops.add(total, term)
    return total
