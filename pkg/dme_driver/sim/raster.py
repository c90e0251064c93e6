"""Rasterize scenes into BEV grids (stand-in for learned map/occupancy heads)."""
from __future__ import annotations

import logging
import math
from typing import Iterable

import numpy as np

from ..exceptions import ContractError
from ..models.scene import (
    CH_AGENT_VX,
    CH_AGENT_VY,
    CH_CELL_X,
    CH_CELL_Y,
    CH_CENTERLINE_DIST,
    CH_EGO_SPEED,
    CH_LANE,
    CH_OCC_FIRST,
    CH_TANGENT_COS,
    CH_TANGENT_SIN,
    FEATURE_CHANNELS,
    LATTICE_TIMES,
    WAYPOINT_DT,
    Agent,
    BevGrid,
    GridSpec,
    Lane,
    Scene,
)

logger = logging.getLogger(__name__)

SPEED_SCALE = 10.0


def footprint_cells(agent: Agent, spec: GridSpec) -> tuple[slice, slice] | None:
    """Cells whose area overlaps the agent's axis-aligned footprint."""
    bounds = []
    for center, half in ((agent.x, agent.half_length), (agent.y, agent.half_width)):
        lo = math.floor((center - half - spec.lower) / spec.resolution)
        hi = math.ceil((center + half - spec.lower) / spec.resolution)
        lo, hi = max(lo, 0), min(hi, spec.size)
        if lo >= hi:
            return None
        bounds.append(slice(lo, hi))
    return bounds[0], bounds[1]


def rasterize_agents(agents: Iterable[Agent], spec: GridSpec) -> np.ndarray:
    grid = np.zeros((spec.size, spec.size), dtype=np.uint8)
    for agent in agents:
        cells = footprint_cells(agent, spec)
        if cells is not None:
            grid[cells] = 1
    return grid


def lattice_index(t: float) -> int:
    steps = t / WAYPOINT_DT
    index = round(steps)
    if abs(steps - index) > 1e-9 or not 0 <= index < len(LATTICE_TIMES):
        raise ContractError(f"t={t} is not on the 0.0, 0.5, ..., 3.0 s lattice")
    return index


def occupancy_at(scene: Scene, t: float) -> np.ndarray:
    """Agents advanced by constant velocity to time t, re-rasterized."""
    lattice_index(t)
    return rasterize_agents((agent.at(t) for agent in scene.agents), scene.grid)


def occupancy_series(agents: Iterable[Agent], spec: GridSpec) -> np.ndarray:
    agents = tuple(agents)
    return np.stack([rasterize_agents((a.at(t) for a in agents), spec) for t in LATTICE_TIMES])


def centerline_geometry(lane: Lane, spec: GridSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell distance to the centerline polyline and the nearest segment's unit tangent."""
    centers = spec.cell_centers()
    points = np.stack(np.meshgrid(centers, centers, indexing="ij"), axis=-1).reshape(-1, 2)
    line = lane.as_array()
    best = np.full(points.shape[0], np.inf)
    tangent = np.zeros((points.shape[0], 2))
    tangent[:, 0] = 1.0
    for a, b in zip(line[:-1], line[1:]):
        seg = b - a
        length_sq = float(seg @ seg)
        if length_sq == 0.0:
            continue
        s = np.clip(((points - a) @ seg) / length_sq, 0.0, 1.0)
        dist = np.linalg.norm(points - (a + s[:, None] * seg), axis=1)
        closer = dist < best
        best = np.where(closer, dist, best)
        tangent[closer] = seg / math.sqrt(length_sq)
    shape = (spec.size, spec.size)
    return best.reshape(shape), tangent[:, 0].reshape(shape), tangent[:, 1].reshape(shape)


def rasterize_bev(scene: Scene) -> BevGrid:
    """Channel layout follows the CH_* constants in :mod:`dme_driver.models.scene`."""
    spec = scene.grid
    features = np.zeros((spec.size, spec.size, FEATURE_CHANNELS))

    dist, tan_cos, tan_sin = centerline_geometry(scene.lane, spec)
    features[..., CH_LANE] = dist <= scene.lane.width / 2.0
    features[..., CH_CENTERLINE_DIST] = np.minimum(dist, spec.half_extent) / spec.half_extent
    features[..., CH_TANGENT_COS] = tan_cos
    features[..., CH_TANGENT_SIN] = tan_sin

    for agent in scene.agents:
        cells = footprint_cells(agent, spec)
        if cells is None:
            continue
        features[cells + (CH_AGENT_VX,)] = agent.vx / SPEED_SCALE
        features[cells + (CH_AGENT_VY,)] = agent.vy / SPEED_SCALE

    occupancy = np.stack([occupancy_at(scene, t) for t in LATTICE_TIMES])
    features[..., CH_OCC_FIRST : CH_OCC_FIRST + len(LATTICE_TIMES)] = np.moveaxis(occupancy, 0, -1)

    centers = spec.cell_centers() / spec.half_extent
    features[..., CH_CELL_X] = centers[:, None]
    features[..., CH_CELL_Y] = centers[None, :]
    features[..., CH_EGO_SPEED] = scene.ego.speed / SPEED_SCALE
    return BevGrid(features=features, occupancy=occupancy, spec=spec)
