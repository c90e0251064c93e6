"""Line-delimited scene records.

One JSON object per line with self-describing field names. Occupancy grids
are run-length encoded bitstrings ``"<first bit>:<run>,<run>,..."`` over the
row-major flattened grid.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from ..exceptions import RecordFormatError
from ..models.logic import DecisionCategory
from ..models.scene import Agent, EgoStatus, GridSpec, Lane, Scene, Trajectory

logger = logging.getLogger(__name__)


def rle_encode(bits: np.ndarray) -> str:
    flat = np.asarray(bits, dtype=np.uint8).ravel()
    if flat.size == 0:
        return "0:"
    change = np.flatnonzero(np.diff(flat)) + 1
    bounds = np.concatenate([[0], change, [flat.size]])
    runs = np.diff(bounds)
    return f"{int(flat[0])}:{','.join(str(int(r)) for r in runs)}"


def rle_decode(text: str, shape: tuple[int, ...]) -> np.ndarray:
    try:
        first, _, body = text.partition(":")
        bit = int(first)
        runs = [int(r) for r in body.split(",")] if body else []
    except ValueError as e:
        raise RecordFormatError(f"bad run-length string {text!r}") from e
    if bit not in (0, 1):
        raise RecordFormatError(f"run-length string must start with 0 or 1, got {text!r}")
    values = []
    for run in runs:
        values.append(np.full(run, bit, dtype=np.uint8))
        bit = 1 - bit
    flat = np.concatenate(values) if values else np.zeros(0, dtype=np.uint8)
    if flat.size != int(np.prod(shape)):
        raise RecordFormatError(f"run lengths cover {flat.size} cells, expected {int(np.prod(shape))}")
    return flat.reshape(shape)


class AgentRecord(BaseModel):
    x: float
    y: float
    vx: float
    vy: float
    half_length: float
    half_width: float


class SceneRecord(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scene_id: str
    seed: int
    ego_speed: float
    ego_heading: float
    agents: list[AgentRecord]
    lane_centerline: list[tuple[float, float]]
    lane_width: float
    tag: DecisionCategory
    expert: list[tuple[float, float]]
    grid_size: int
    grid_resolution: float
    occupancy: list[str]

    @classmethod
    def from_scene(cls, scene: Scene) -> "SceneRecord":
        return cls(
            scene_id=scene.scene_id,
            seed=scene.seed,
            ego_speed=scene.ego.speed,
            ego_heading=scene.ego.heading,
            agents=[AgentRecord(**vars(a)) for a in scene.agents],
            lane_centerline=[tuple(p) for p in scene.lane.centerline],
            lane_width=scene.lane.width,
            tag=scene.tag,
            expert=[(float(x), float(y)) for x, y in scene.expert.waypoints],
            grid_size=scene.grid.size,
            grid_resolution=scene.grid.resolution,
            occupancy=[rle_encode(g) for g in scene.occupancy],
        )

    def to_scene(self) -> Scene:
        spec = GridSpec(self.grid_size, self.grid_resolution)
        occupancy = np.stack([rle_decode(g, (spec.size, spec.size)) for g in self.occupancy])
        return Scene(
            seed=self.seed,
            ego=EgoStatus(self.ego_speed, self.ego_heading),
            agents=tuple(Agent(**a.model_dump()) for a in self.agents),
            lane=Lane(tuple(tuple(p) for p in self.lane_centerline), self.lane_width),
            tag=self.tag,
            expert=Trajectory.from_points(self.expert),
            occupancy=occupancy,
            grid=spec,
            scene_id=self.scene_id,
        )


def scene_to_line(scene: Scene) -> str:
    return SceneRecord.from_scene(scene).model_dump_json()


def write_scenes(path: Path, scenes: Iterable[Scene]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for scene in scenes:
            handle.write(scene_to_line(scene) + "\n")
            count += 1
    logger.info(f"Wrote {count} scenes to {path}")
    return count


def read_scenes(path: Path) -> list[Scene]:
    scenes = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                scenes.append(SceneRecord.model_validate_json(line).to_scene())
            except (ValidationError, RecordFormatError) as e:
                raise RecordFormatError(str(e), line_number) from e
    logger.info(f"Read {len(scenes)} scenes from {path}")
    return scenes
