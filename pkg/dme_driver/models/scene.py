"""Scene-side domain types: ego status, agents, lanes, trajectories, BEV grids."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ContractError, ShapeError
from .logic import DecisionCategory

WAYPOINT_COUNT = 6
WAYPOINT_DT = 0.5
HORIZON_S = 3.0
V_MAX = 20.0
# waypoint indices of the 1 s / 2 s / 3 s evaluation horizons
HORIZON_INDEX = {1.0: 1, 2.0: 3, 3.0: 5}
LATTICE_TIMES = tuple(WAYPOINT_DT * k for k in range(WAYPOINT_COUNT + 1))

FEATURE_CHANNELS = 16
CH_LANE = 0
CH_CENTERLINE_DIST = 1
CH_AGENT_VX = 2
CH_AGENT_VY = 3
CH_OCC_FIRST = 4  # occupancy at t = 0.0 .. 3.0 s occupies channels 4..10
CH_CELL_X = 11
CH_CELL_Y = 12
CH_TANGENT_COS = 13
CH_TANGENT_SIN = 14
CH_EGO_SPEED = 15


@dataclass(frozen=True)
class GridSpec:
    """Square ego-centred grid; cell (i, j): i along +x (forward), j along +y (left)."""

    size: int = 32
    resolution: float = 0.5

    @property
    def origin_cell(self) -> int:
        return self.size // 2

    @property
    def half_extent(self) -> float:
        return self.origin_cell * self.resolution

    @property
    def lower(self) -> float:
        return -self.half_extent

    def cell_centers(self) -> np.ndarray:
        """Coordinates of the cell centers along one axis."""
        return self.lower + (np.arange(self.size) + 0.5) * self.resolution

    def cell_of(self, x: float, y: float) -> tuple[int, int] | None:
        i = int(np.floor((x - self.lower) / self.resolution))
        j = int(np.floor((y - self.lower) / self.resolution))
        if 0 <= i < self.size and 0 <= j < self.size:
            return i, j
        return None

    def to_index_coords(self, points: np.ndarray) -> np.ndarray:
        """Metric (x, y) -> continuous cell-center index coordinates."""
        return (np.asarray(points) - self.lower) / self.resolution - 0.5


@dataclass(frozen=True)
class EgoStatus:
    speed: float
    heading: float = 0.0

    def __post_init__(self):
        if self.speed < 0:
            raise ContractError(f"ego speed must be >= 0, got {self.speed}")


@dataclass(frozen=True)
class Agent:
    x: float
    y: float
    vx: float
    vy: float
    half_length: float = 2.25
    half_width: float = 1.0

    def __post_init__(self):
        if self.half_length <= 0 or self.half_width <= 0:
            raise ContractError("agent half-extents must be positive")

    def at(self, t: float) -> "Agent":
        """Constant-velocity extrapolation."""
        return Agent(self.x + self.vx * t, self.y + self.vy * t, self.vx, self.vy, self.half_length, self.half_width)


@dataclass(frozen=True)
class Lane:
    centerline: tuple[tuple[float, float], ...]
    width: float = 3.5

    def as_array(self) -> np.ndarray:
        return np.asarray(self.centerline, dtype=np.float64)


@dataclass(frozen=True)
class Trajectory:
    """Six ego-frame waypoints at t = 0.5 .. 3.0 s."""

    waypoints: np.ndarray

    def __post_init__(self):
        points = np.array(self.waypoints, dtype=np.float64)
        if points.shape != (WAYPOINT_COUNT, 2):
            raise ShapeError(f"a trajectory has {WAYPOINT_COUNT} (x, y) waypoints, got shape {points.shape}")
        points.setflags(write=False)
        object.__setattr__(self, "waypoints", points)

    @classmethod
    def from_points(cls, points) -> "Trajectory":
        return cls(np.asarray(points, dtype=np.float64))

    def max_step(self) -> float:
        previous = np.vstack([np.zeros((1, 2)), self.waypoints[:-1]])
        return float(np.linalg.norm(self.waypoints - previous, axis=1).max())

    def is_kinematic(self) -> bool:
        return self.max_step() <= V_MAX * WAYPOINT_DT + 1e-9

    def __eq__(self, other) -> bool:
        return isinstance(other, Trajectory) and np.array_equal(self.waypoints, other.waypoints)

    def __hash__(self) -> int:
        return hash(self.waypoints.tobytes())


@dataclass(frozen=True, eq=False)
class Scene:
    seed: int
    ego: EgoStatus
    agents: tuple[Agent, ...]
    lane: Lane
    tag: DecisionCategory
    expert: Trajectory
    occupancy: np.ndarray  # (7, H, W) uint8, t = 0.0 .. 3.0 s
    grid: GridSpec = field(default_factory=GridSpec)
    scene_id: str = ""

    def __post_init__(self):
        expected = (len(LATTICE_TIMES), self.grid.size, self.grid.size)
        if self.occupancy.shape != expected:
            raise ShapeError(f"occupancy must be {expected}, got {self.occupancy.shape}")
        if not self.scene_id:
            object.__setattr__(self, "scene_id", f"scene-{self.seed}")


@dataclass(frozen=True, eq=False)
class BevGrid:
    """H × W × C features plus one binary occupancy grid per lattice time."""

    features: np.ndarray
    occupancy: np.ndarray
    spec: GridSpec = field(default_factory=GridSpec)

    def __post_init__(self):
        if self.features.ndim != 3 or self.features.shape[:2] != (self.spec.size, self.spec.size):
            raise ShapeError(f"features must be ({self.spec.size}, {self.spec.size}, C), got {self.features.shape}")
        if not np.all(np.isfinite(self.features)):
            raise ContractError("BEV features must be finite")
        if not np.isin(self.occupancy, (0, 1)).all():
            raise ContractError("occupancy entries must be 0 or 1")

    @property
    def channels(self) -> int:
        return self.features.shape[2]
