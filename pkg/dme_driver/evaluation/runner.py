"""Planning over held-out scenes and collection of metrics plus decision traces."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

from ..database import TraceEntry
from ..decision.rules import classify_trajectory
from ..encoding.vocab import Vocabulary
from ..models.logic import DriverLogicOutput, RuleThresholds
from ..models.metrics import PlanMetrics
from ..models.scene import Scene, Trajectory
from ..models.training import AblationMode
from ..planner.model import plan
from ..planner.params import PlannerParams
from ..planner.train import cue_logic
from ..sim.raster import rasterize_bev
from .metrics import l2_at_horizons, plan_metrics

logger = logging.getLogger(__name__)


@dataclass
class EvalResult:
    metrics: PlanMetrics
    trajectories: list[Trajectory]
    entries: list[TraceEntry]


def plan_scenes(
    dataset: Sequence[tuple[Scene, DriverLogicOutput]],
    params: PlannerParams,
    vocab: Vocabulary,
    mode: AblationMode,
    jobs: int = 1,
) -> list[Trajectory]:
    """Plans in dataset order whatever the job count."""

    def run(item: tuple[Scene, DriverLogicOutput]) -> Trajectory:
        scene, staged = item
        return plan(rasterize_bev(scene), cue_logic(mode, scene, staged), params, vocab)

    if jobs <= 1:
        return [run(item) for item in dataset]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(run, dataset))


def evaluate(
    dataset: Sequence[tuple[Scene, DriverLogicOutput]],
    params: PlannerParams | None,
    vocab: Vocabulary,
    mode: AblationMode,
    thresholds: RuleThresholds | None = None,
    jobs: int = 1,
) -> EvalResult:
    """Metrics against the staged decisions; with ``params`` None the expert labels are scored."""
    thresholds = thresholds or RuleThresholds()
    if params is None:
        trajectories = [scene.expert for scene, _ in dataset]
    else:
        trajectories = plan_scenes(dataset, params, vocab, mode, jobs)
    pairs = [(traj, scene) for traj, (scene, _) in zip(trajectories, dataset)]
    logic = [staged for _, staged in dataset]
    metrics = plan_metrics(pairs, logic, thresholds)

    entries = [
        TraceEntry(
            scene_id=scene.scene_id,
            logic=staged,
            trajectory=traj,
            planned_category=classify_trajectory(traj, scene.ego, thresholds),
            l2_avg=l2_at_horizons(traj, scene.expert)[3],
        )
        for traj, (scene, staged) in zip(trajectories, dataset)
    ]
    logger.info(
        f"Evaluated {len(dataset)} scenes ({mode.value}): L2 avg {metrics.l2_avg:.2f} m, "
        f"collision avg {metrics.col_avg:.2f} %, mismatch {metrics.mismatch_rate:.2f} %"
    )
    return EvalResult(metrics, trajectories, entries)
