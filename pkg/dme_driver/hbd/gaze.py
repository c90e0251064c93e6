"""Gaze traces: bounding boxes, synthetic front-camera traces, CSV import."""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..decision.scripted import attended_agent
from ..exceptions import ContractError, RecordFormatError
from ..models.dialogue import GAZE_WINDOW, BBox, GazeTrace
from ..models.scene import Scene

logger = logging.getLogger(__name__)

IMAGE_WIDTH = 1600
IMAGE_HEIGHT = 900
FOCAL_PX = 1266.0
CAMERA_HEIGHT = 1.5  # meters above the road
TARGET_HEIGHT = 0.75  # vehicle centroid height
ROAD_AHEAD = 20.0  # fixation distance when nothing is attended
JITTER_PX = 8.0


def gaze_to_bbox(trace: GazeTrace) -> BBox:
    """Axis-aligned box spanning every gaze point of the window."""
    if not trace.points:
        raise ContractError("gaze_to_bbox needs at least one gaze point")
    points = np.asarray(trace.points, dtype=np.float64)
    x_min, y_min = points.min(axis=0)
    x_max, y_max = points.max(axis=0)
    return BBox(x_min=float(x_min), y_min=float(y_min), x_max=float(x_max), y_max=float(y_max))


def project(x: float, y: float, height: float) -> tuple[float, float] | None:
    """Pinhole projection of an ego-frame point into the front camera; None when behind or off-image."""
    if x <= 1.0:
        return None
    u = IMAGE_WIDTH / 2.0 - FOCAL_PX * y / x
    v = IMAGE_HEIGHT / 2.0 + FOCAL_PX * (CAMERA_HEIGHT - height) / x
    if not (0.0 <= u < IMAGE_WIDTH and 0.0 <= v < IMAGE_HEIGHT):
        return None
    return u, v


def synthesize_gaze_trace(scene: Scene, frames: int = GAZE_WINDOW) -> GazeTrace:
    """Seeded fixation on the attended vehicle, or on the road ahead when none is visible."""
    rng = np.random.default_rng([scene.seed, 0x6A2E])
    agent = attended_agent(scene)
    target = project(agent.x, agent.y, TARGET_HEIGHT) if agent is not None else None
    if target is None:
        target = project(ROAD_AHEAD, 0.0, 0.0)
    jitter = rng.normal(0.0, JITTER_PX, size=(frames, 2))
    points = np.asarray(target) + jitter
    points[:, 0] = np.clip(points[:, 0], 0.0, IMAGE_WIDTH - 1.0)
    points[:, 1] = np.clip(points[:, 1], 0.0, IMAGE_HEIGHT - 1.0)
    points = np.round(points, 1)
    return GazeTrace(frames=tuple(range(frames)), points=tuple((float(u), float(v)) for u, v in points))


def read_gaze_csv(path: Path) -> list[GazeTrace]:
    """Columns frame,x,y; frames are grouped into disjoint 24-frame windows from the first frame."""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RecordFormatError(f"cannot read gaze CSV {path}: {e}") from e
    missing = {"frame", "x", "y"} - set(df.columns)
    if missing:
        raise RecordFormatError(f"gaze CSV {path} lacks columns {sorted(missing)}")
    if df.empty:
        return []

    df = df.dropna(subset=["frame", "x", "y"]).sort_values("frame", kind="stable")
    df["window"] = (df["frame"] - df["frame"].min()) // GAZE_WINDOW
    traces = []
    for window, group in df.groupby("window", sort=True):
        try:
            traces.append(GazeTrace(
                frames=tuple(int(f) for f in group["frame"]),
                points=tuple((float(x), float(y)) for x, y in zip(group["x"], group["y"])),
            ))
        except ValidationError as e:
            raise RecordFormatError(f"window {int(window)} of {path}: {e}") from e
    logger.info(f"Read {len(traces)} gaze windows from {path}")
    return traces
