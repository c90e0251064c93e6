import itertools
import math

import numpy as np
import pytest

from dme_driver.decision.rules import classify_trajectory, consistency_penalty, maneuver_features
from dme_driver.models.logic import DecisionCategory as C
from dme_driver.models.logic import RuleThresholds
from dme_driver.models.scene import EgoStatus, Trajectory
from dme_driver.nn.gradcheck import grad_check
from dme_driver.nn.tape import Matrix
from dme_driver.sim.generator import constant, integrate

TH = RuleThresholds()


def straight(speeds):
    """Waypoints along +x whose k-th segment is driven at speeds[k]."""
    xs = np.cumsum([0.5 * v for v in speeds])
    return Trajectory.from_points([(x, 0.0) for x in xs])


def rotate(points, degrees):
    a = math.radians(degrees)
    return np.asarray(points) @ np.array([[math.cos(a), math.sin(a)], [-math.sin(a), math.cos(a)]])


@pytest.mark.parametrize(
    "speeds, ego_speed, expected",
    [
        ([5.0] * 6, 5.0, C.FORWARD),
        ([5.0] * 5 + [0.2], 5.0, C.STOP),
        ([5.0] * 5 + [7.0], 5.0, C.ACCELERATE),
        ([5.0] * 5 + [3.0], 5.0, C.DECELERATE),
        ([5.0] * 5 + [6.0], 5.0, C.FORWARD),
        ([5.0] * 5 + [4.5], 5.0, C.FORWARD),
        ([0.0] * 6, 0.0, C.STOP),
    ],
)
def test_longitudinal_examples(speeds, ego_speed, expected):
    assert classify_trajectory(straight(speeds), EgoStatus(ego_speed), TH) is expected


def test_arc_to_the_left_is_a_turn():
    arc = integrate(constant(5.0), constant(math.radians(30.0) / 3.0))
    assert classify_trajectory(Trajectory(arc), EgoStatus(5.0), TH) is C.TURN_LEFT
    mirrored = arc * np.array([1.0, -1.0])
    assert classify_trajectory(Trajectory(mirrored), EgoStatus(5.0), TH) is C.TURN_RIGHT


def test_parallel_offset_is_a_lane_change():
    points = [(2.5, 0.0), (5.0, 0.5), (7.5, 1.2), (10.0, 1.8), (12.5, 2.0), (15.0, 2.0)]
    assert classify_trajectory(Trajectory.from_points(points), EgoStatus(5.0), TH) is C.LANE_CHANGE_LEFT
    flipped = [(x, -y) for x, y in points]
    assert classify_trajectory(Trajectory.from_points(flipped), EgoStatus(5.0), TH) is C.LANE_CHANGE_RIGHT


def test_stop_takes_precedence_over_turn():
    points = [(1.0, 0.0), (2.0, 0.5), (2.5, 1.0), (2.8, 1.6), (2.9, 2.0), (2.95, 2.1)]
    assert classify_trajectory(Trajectory.from_points(points), EgoStatus(4.0), TH) is C.STOP


def test_heading_threshold_on_the_final_segment():
    base = straight([5.0] * 6).waypoints
    assert classify_trajectory(Trajectory(rotate(base, 16.0)), EgoStatus(5.0), TH) is C.TURN_LEFT
    assert classify_trajectory(Trajectory(rotate(base, -16.0)), EgoStatus(5.0), TH) is C.TURN_RIGHT
    # final y of the 14 degree line is 15·sin(14°) ≈ 3.6, a lane change
    assert classify_trajectory(Trajectory(rotate(base, 14.0)), EgoStatus(5.0), TH) is C.LANE_CHANGE_LEFT


def test_features_are_read_in_the_ego_frame():
    heading = math.radians(40.0)
    world = rotate(straight([5.0] * 6).waypoints, 40.0)
    f = maneuver_features(Trajectory(world), EgoStatus(5.0, heading=heading))
    assert f.heading_change == pytest.approx(0.0, abs=1e-12)
    assert f.lateral == pytest.approx(0.0, abs=1e-12)
    assert f.end_speed == pytest.approx(5.0)
    assert classify_trajectory(Trajectory(world), EgoStatus(5.0, heading=heading), TH) is C.FORWARD


def test_every_trajectory_gets_exactly_one_category():
    rng = np.random.default_rng(0)
    for _ in range(500):
        traj = Trajectory(np.cumsum(rng.normal(scale=2.0, size=(6, 2)), axis=0))
        assert isinstance(classify_trajectory(traj, EgoStatus(float(rng.uniform(0, 10))), TH), C)


def test_penalty_examples():
    forward = straight([5.0] * 6)
    assert consistency_penalty(forward, C.FORWARD, EgoStatus(5.0), TH).item() == 0.0
    assert consistency_penalty(forward, C.TURN_LEFT, EgoStatus(5.0), TH).item() == pytest.approx(math.radians(15.0))
    assert consistency_penalty(forward, C.STOP, EgoStatus(5.0), TH).item() == pytest.approx(4.5)


def test_penalty_gradient():
    rng = np.random.default_rng(1)
    traj = Matrix(straight([5.0] * 6).waypoints + rng.normal(scale=0.3, size=(6, 2)), requires_grad=True)
    for decision in C:
        error = grad_check(lambda m: consistency_penalty(m, decision, EgoStatus(5.0, heading=0.2), TH), [traj])
        assert error < 1e-4


def sampled_trajectories(rng, count):
    """Straight approach ending in a random final segment."""
    for _ in range(count):
        ego_speed = float(rng.uniform(1.0, 10.0))
        x4, y4 = float(rng.uniform(5.0, 15.0)), float(rng.uniform(-3.0, 3.0))
        heading = math.radians(rng.uniform(-40.0, 40.0))
        speed = float(rng.uniform(0.0, 15.0))
        last = (x4 + 0.5 * speed * math.cos(heading), y4 + 0.5 * speed * math.sin(heading))
        points = [(x4 * k / 5.0, y4 * k / 5.0) for k in range(1, 5)] + [(x4, y4), last]
        yield Trajectory.from_points(points), EgoStatus(ego_speed)


def clear_of_boundaries(traj, ego, margin=1e-3):
    f = maneuver_features(traj, ego)
    gaps = (
        f.end_speed - TH.v_stop,
        abs(f.heading_change) - TH.turn_rad,
        abs(f.lateral) - TH.lateral_lc,
        f.end_speed - TH.accel_ratio * ego.speed,
        f.end_speed - TH.decel_ratio * ego.speed,
    )
    return all(abs(g) > margin for g in gaps)


def test_penalty_agrees_with_the_classifier():
    rng = np.random.default_rng(2)
    seen = set()
    checked = 0
    for traj, ego in sampled_trajectories(rng, 3000):
        if not clear_of_boundaries(traj, ego):
            continue
        label = classify_trajectory(traj, ego, TH)
        seen.add(label)
        checked += 1
        for decision in C:
            value = consistency_penalty(traj, decision, ego, TH).item()
            if decision is label:
                assert value == 0.0
            else:
                assert value > 0.0
    assert checked >= 1200
    assert seen == set(C)


def final_segment(ego_speed, speed, heading, lateral):
    """Approach at the ego speed, then a last segment with the given speed, heading and end offset."""
    dx, dy = 0.5 * speed * math.cos(heading), 0.5 * speed * math.sin(heading)
    approach = [(0.5 * ego_speed * k, 0.0) for k in range(1, 5)]
    x4 = 0.5 * ego_speed * 5
    return Trajectory.from_points(approach + [(x4, lateral - dy), (x4 + dx, lateral)])


def test_thresholds_hit_exactly():
    ego = EgoStatus(4.0)
    # 1.25 · 4 = 5.0: not yet accelerating
    at_accel = straight([4.0] * 5 + [5.0])
    assert classify_trajectory(at_accel, ego, TH) is C.FORWARD
    assert consistency_penalty(at_accel, C.FORWARD, ego, TH).item() == 0.0
    assert consistency_penalty(at_accel, C.ACCELERATE, ego, TH).item() > 0.0
    # 0.5 m/s is the stop speed: moving, and slow enough to decelerate
    at_stop = straight([4.0] * 5 + [0.5])
    assert classify_trajectory(at_stop, ego, TH) is C.DECELERATE
    assert consistency_penalty(at_stop, C.DECELERATE, ego, TH).item() == 0.0
    assert consistency_penalty(at_stop, C.STOP, ego, TH).item() > 0.0
    # lateral offset of exactly 1.5 m is a lane change
    at_lane = final_segment(4.0, 4.0, 0.0, 1.5)
    assert classify_trajectory(at_lane, ego, TH) is C.LANE_CHANGE_LEFT
    assert consistency_penalty(at_lane, C.LANE_CHANGE_LEFT, ego, TH).item() == 0.0
    assert consistency_penalty(at_lane, C.FORWARD, ego, TH).item() > 0.0


@pytest.mark.parametrize("ego_speed", [0.0, 2.5, 4.0])
def test_penalty_agrees_with_the_classifier_on_threshold_lattice(ego_speed):
    nudges = (-1e-6, -1e-12, 0.0, 1e-12, 1e-6)
    speeds = {0.0, 3.0}
    for edge in (TH.v_stop, TH.decel_ratio * ego_speed, TH.accel_ratio * ego_speed):
        speeds.update(edge + d for d in nudges if edge + d >= 0.0)
    headings = {0.0} | {s * TH.turn_rad + d for s in (-1.0, 1.0) for d in nudges}
    laterals = {0.0} | {s * TH.lateral_lc + d for s in (-1.0, 1.0) for d in nudges}

    ego = EgoStatus(ego_speed)
    seen = set()
    for speed, heading, lateral in itertools.product(sorted(speeds), sorted(headings), sorted(laterals)):
        traj = final_segment(ego_speed, speed, heading, lateral)
        label = classify_trajectory(traj, ego, TH)
        seen.add(label)
        for decision in C:
            value = consistency_penalty(traj, decision, ego, TH).item()
            if value == 0.0:
                assert decision is label, (speed, heading, lateral, decision, label)
            if decision is not label:
                assert value > 0.0, (speed, heading, lateral, decision, label)
    assert len(seen) >= 6
