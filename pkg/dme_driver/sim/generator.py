"""Seeded synthetic driving scenes with kinematic expert trajectories.

The expert follows a piecewise constant-turn-rate model with a scalar speed
profile; agents move at constant velocity. Scenes are rejection-sampled until
the expert realizes the requested maneuver and stays clear of every agent.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..decision.rules import classify_trajectory
from ..exceptions import ContractError, GenerationError
from ..models.logic import DecisionCategory, RuleThresholds
from ..models.scene import (
    HORIZON_S,
    LATTICE_TIMES,
    WAYPOINT_COUNT,
    WAYPOINT_DT,
    Agent,
    EgoStatus,
    GridSpec,
    Lane,
    Scene,
    Trajectory,
)
from .raster import occupancy_series

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 100
SUBSTEPS = 20  # integration steps per 0.5 s waypoint interval
LANE_WIDTH = 3.5
LANE_CHANGE_DURATION = 2.5
EGO_CLEARANCE = 1.0  # meters kept free around the ego at t = 0

SpeedProfile = Callable[[float], float]
YawRateProfile = Callable[[float], float]


@dataclass(frozen=True)
class SceneConfig:
    scenario: str = "random"
    num_agents: int | None = None
    max_agents: int = 4
    grid: GridSpec = field(default_factory=GridSpec)
    thresholds: RuleThresholds = field(default_factory=RuleThresholds)

    def __post_init__(self):
        if self.scenario != "random" and self.scenario not in {c.value for c in DecisionCategory}:
            raise ContractError(f"unknown scenario {self.scenario!r}; use a decision category or 'random'")
        if self.num_agents is not None and not 0 <= self.num_agents <= 8:
            raise ContractError(f"agent count must lie in 0..8, got {self.num_agents}")
        if not 0 <= self.max_agents <= 8:
            raise ContractError(f"max_agents must lie in 0..8, got {self.max_agents}")


def integrate(speed: SpeedProfile, yaw_rate: YawRateProfile, heading0: float = 0.0) -> np.ndarray:
    """Midpoint-rule rollout; returns the six waypoints at 0.5 s spacing."""
    dt = WAYPOINT_DT / SUBSTEPS
    x = y = 0.0
    heading = heading0
    waypoints = []
    for step in range(WAYPOINT_COUNT * SUBSTEPS):
        t_mid = (step + 0.5) * dt
        heading_mid = heading + yaw_rate(t_mid) * dt / 2.0
        v = speed(t_mid)
        x += v * math.cos(heading_mid) * dt
        y += v * math.sin(heading_mid) * dt
        heading += yaw_rate(t_mid) * dt
        if (step + 1) % SUBSTEPS == 0:
            waypoints.append((x, y))
    return np.asarray(waypoints)


def constant(value: float) -> Callable[[float], float]:
    return lambda t: value


def ramp(v0: float, accel: float) -> SpeedProfile:
    return lambda t: max(0.0, v0 + accel * t)


def yaw_doublet(rate: float, duration: float) -> YawRateProfile:
    """+rate for the first half of the maneuver, -rate for the second, then straight."""
    half = duration / 2.0
    return lambda t: rate if t < half else (-rate if t < duration else 0.0)


def _expert_for(tag: DecisionCategory, rng: np.random.Generator) -> tuple[float, np.ndarray]:
    """Initial speed and expert waypoints realizing the maneuver."""
    if tag is DecisionCategory.FORWARD:
        v0 = rng.uniform(3.0, 9.0)
        return v0, integrate(constant(v0), constant(0.0))
    if tag is DecisionCategory.ACCELERATE:
        v0 = rng.uniform(2.0, 6.0)
        return v0, integrate(ramp(v0, rng.uniform(1.5, 2.5)), constant(0.0))
    if tag is DecisionCategory.DECELERATE:
        v0 = rng.uniform(6.0, 10.0)
        return v0, integrate(ramp(v0, -rng.uniform(1.0, 1.5)), constant(0.0))
    if tag is DecisionCategory.STOP:
        v0 = rng.uniform(2.0, 6.0)
        stop_time = rng.uniform(1.0, 2.0)
        return v0, integrate(ramp(v0, -v0 / stop_time), constant(0.0))
    if tag in (DecisionCategory.TURN_LEFT, DecisionCategory.TURN_RIGHT):
        v0 = rng.uniform(3.0, 7.0)
        sign = 1.0 if tag is DecisionCategory.TURN_LEFT else -1.0
        total = math.radians(rng.uniform(35.0, 70.0))
        return v0, integrate(constant(v0), constant(sign * total / HORIZON_S))
    v0 = rng.uniform(4.0, 8.0)
    sign = 1.0 if tag is DecisionCategory.LANE_CHANGE_LEFT else -1.0
    # small-angle doublet sizing: lateral ≈ v · rate · (duration / 2)²
    rate = LANE_WIDTH / (v0 * (LANE_CHANGE_DURATION / 2.0) ** 2)
    return v0, integrate(constant(v0), yaw_doublet(sign * rate, LANE_CHANGE_DURATION))


def _lane_for(tag: DecisionCategory, expert: np.ndarray, spec: GridSpec) -> Lane:
    behind = (-spec.half_extent - 1.0, 0.0)
    if tag in (DecisionCategory.TURN_LEFT, DecisionCategory.TURN_RIGHT):
        tail = expert[-1] + 10.0 * (expert[-1] - expert[-2]) / max(np.linalg.norm(expert[-1] - expert[-2]), 1e-9)
        points = [behind, (0.0, 0.0)] + [tuple(p) for p in expert] + [tuple(tail)]
        return Lane(tuple((float(x), float(y)) for x, y in points), LANE_WIDTH)
    return Lane((behind, (0.0, 0.0), (spec.half_extent + 40.0, 0.0)), LANE_WIDTH)


def _lead_agent(tag: DecisionCategory, v0: float, expert: np.ndarray, rng: np.random.Generator) -> Agent:
    if tag is DecisionCategory.STOP:
        stop_x = float(expert[-1, 0])
        return Agent(stop_x + 2.25 + rng.uniform(1.0, 3.0), 0.0, 0.0, 0.0)
    return Agent(rng.uniform(6.0, 9.0), 0.0, rng.uniform(0.5, 0.8) * v0, 0.0)


def _background_agent(spec: GridSpec, rng: np.random.Generator) -> Agent:
    lane = rng.choice([-1, 1, 2, -2])
    y = float(lane * LANE_WIDTH + rng.uniform(-0.3, 0.3))
    x = float(rng.uniform(-spec.half_extent, spec.half_extent))
    vx = float(rng.uniform(-8.0, 8.0))
    return Agent(x, y, vx, 0.0, half_length=float(rng.uniform(1.8, 2.5)), half_width=float(rng.uniform(0.8, 1.1)))


def is_collision_free(expert: np.ndarray, occupancy: np.ndarray, spec: GridSpec) -> bool:
    """Waypoint k must sit in a free cell of the grid for t = 0.5·(k+1); off-grid waypoints pass."""
    if occupancy[0][spec.origin_cell - 2 : spec.origin_cell + 2, spec.origin_cell - 2 : spec.origin_cell + 2].any():
        return False
    for k, (x, y) in enumerate(expert):
        cell = spec.cell_of(x, y)
        if cell is not None and occupancy[k + 1][cell]:
            return False
    return True


def generate_scene(seed: int, config: SceneConfig | None = None) -> Scene:
    config = config or SceneConfig()
    rng = np.random.default_rng(seed)
    categories = list(DecisionCategory)
    if config.scenario == "random":
        tag = categories[int(rng.integers(len(categories)))]
    else:
        tag = DecisionCategory(config.scenario)

    for attempt in range(1, MAX_ATTEMPTS + 1):
        v0, expert = _expert_for(tag, rng)
        ego = EgoStatus(speed=float(v0))
        if classify_trajectory(Trajectory(expert), ego, config.thresholds) is not tag:
            logger.debug(f"seed {seed} attempt {attempt}: expert does not realize {tag.value}")
            continue

        count = config.num_agents
        if count is None:
            count = int(rng.integers(config.max_agents + 1))
        agents: list[Agent] = []
        if count and tag in (DecisionCategory.DECELERATE, DecisionCategory.STOP):
            agents.append(_lead_agent(tag, v0, expert, rng))
        while len(agents) < count:
            agents.append(_background_agent(config.grid, rng))

        occupancy = occupancy_series(agents, config.grid)
        if not is_collision_free(expert, occupancy, config.grid):
            logger.debug(f"seed {seed} attempt {attempt}: expert collides, resampling")
            continue

        return Scene(
            seed=seed,
            ego=ego,
            agents=tuple(agents),
            lane=_lane_for(tag, expert, config.grid),
            tag=tag,
            expert=Trajectory(expert),
            occupancy=occupancy,
            grid=config.grid,
        )
    raise GenerationError(f"no feasible {tag.value} scene for seed {seed} after {MAX_ATTEMPTS} attempts")
