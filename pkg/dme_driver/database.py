"""SQLite decision-trace store kept in each run directory."""
import json
import logging
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

from sqlalchemy import Engine, create_engine, exists, func, select
from sqlalchemy.orm import Session, sessionmaker

from .models.logic import DecisionCategory, DriverLogicOutput
from .models.scene import Trajectory
from .models.trace import Base, LogicTrace, PlannedTrajectory

logger = logging.getLogger(__name__)

TRACE_FILE = "decision_trace.sqlite"


@dataclass(frozen=True)
class TraceEntry:
    scene_id: str
    logic: DriverLogicOutput | None
    trajectory: Trajectory
    planned_category: DecisionCategory
    l2_avg: float


def make_engine(path: Path) -> Engine:
    path.parent.mkdir(parents=True, exist_ok=True)
    return create_engine(f"sqlite:///{path}")


def init_db(engine: Engine) -> None:
    try:
        Base.metadata.create_all(bind=engine)
        logger.info(f"Initialized trace tables at {engine.url}")
    except Exception as e:
        logger.error(f"Failed to initialize trace database: {str(e)}")
        raise


@contextmanager
def get_db(engine: Engine) -> Iterator[Session]:
    db = sessionmaker(autocommit=False, autoflush=False, bind=engine)()
    try:
        yield db
        db.commit()
    except Exception:
        db.rollback()
        raise
    finally:
        db.close()


def record_traces(
    engine: Engine,
    run_id: str,
    cue_mode: str,
    entries: Sequence[TraceEntry],
) -> int:
    """One logic row and one planned row per entry; plans made without text cues get a logic row with empty texts."""
    with get_db(engine) as db:
        for entry in entries:
            logic = entry.logic
            db.add(LogicTrace(
                run_id=run_id,
                scene_id=entry.scene_id,
                cue_mode=cue_mode,
                gaze=logic.gaze_text if logic else "",
                description=logic.description_text if logic else "",
                reasoning=logic.reasoning_text if logic else "",
                decision=logic.decision_text if logic else "",
                category=logic.category.value if logic else "",
            ))
            db.add(PlannedTrajectory(
                run_id=run_id,
                scene_id=entry.scene_id,
                waypoints=json.dumps(entry.trajectory.waypoints.tolist()),
                planned_category=entry.planned_category.value,
                l2_avg=entry.l2_avg,
            ))
    logger.info(f"Recorded {len(entries)} decision traces for run {run_id}")
    return len(entries)


def trace_join_coverage(engine: Engine, run_id: str | None = None) -> float:
    """Fraction of planned trajectories that join a logic trace on (run_id, scene_id); 1.0 when there are none."""
    joinable = exists().where(
        LogicTrace.run_id == PlannedTrajectory.run_id,
        LogicTrace.scene_id == PlannedTrajectory.scene_id,
    )
    total_query = select(func.count(PlannedTrajectory.id))
    joined_query = select(func.count(PlannedTrajectory.id)).where(joinable)
    if run_id is not None:
        total_query = total_query.where(PlannedTrajectory.run_id == run_id)
        joined_query = joined_query.where(PlannedTrajectory.run_id == run_id)
    with get_db(engine) as db:
        total = db.scalar(total_query) or 0
        joined = db.scalar(joined_query) or 0
    if total == 0:
        return 1.0
    return joined / total
