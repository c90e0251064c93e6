"""Records of the human-driver behavior dataset: gaze traces, boxes, dialogues."""
from __future__ import annotations

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..hbd.first_person import to_first_person

GAZE_WINDOW = 24


class Source(str, Enum):
    LOOK_BOTH_WAYS = "look_both_ways"
    BDD_X = "bdd_x"
    NUSCENES = "nuscenes"
    VIRTUAL_HBD = "virtual_hbd"
    SYNTHETIC = "synthetic"

    @property
    def is_open_source(self) -> bool:
        return self in (Source.LOOK_BOTH_WAYS, Source.BDD_X, Source.NUSCENES)

    @property
    def max_turns(self) -> int:
        return 3 if self.is_open_source else 5


class TurnKind(str, Enum):
    """Canonical dialogue order."""

    GAZE = "gaze"
    DESCRIPTION = "description"
    REASONING = "reasoning"
    DECISION = "decision"
    CONTROL = "control"


# Turn kinds each source's raw data can supply.
SOURCE_TURN_KINDS: dict[Source, tuple[TurnKind, ...]] = {
    Source.LOOK_BOTH_WAYS: (TurnKind.GAZE,),
    Source.BDD_X: (TurnKind.DESCRIPTION, TurnKind.REASONING, TurnKind.DECISION),
    Source.NUSCENES: (TurnKind.DESCRIPTION, TurnKind.CONTROL),
    Source.VIRTUAL_HBD: tuple(TurnKind),
    Source.SYNTHETIC: tuple(TurnKind),
}


class GazeTrace(BaseModel):
    """Up to one window of gaze points in image pixels, indexed by frame."""

    model_config = ConfigDict(frozen=True)

    frames: tuple[int, ...] = ()
    points: tuple[tuple[float, float], ...]

    @field_validator("points")
    @classmethod
    def _window_bounds(cls, points):
        if not 1 <= len(points) <= GAZE_WINDOW:
            raise ValueError(f"a gaze window holds 1..{GAZE_WINDOW} points, got {len(points)}")
        if any(x < 0 or y < 0 for x, y in points):
            raise ValueError("gaze coordinates must be >= 0")
        return points


class BBox(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    @model_validator(mode="after")
    def _ordered(self) -> "BBox":
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"bbox corners out of order: {self}")
        return self

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def render(self) -> str:
        return f"region ({self.x_min:g},{self.y_min:g})–({self.x_max:g},{self.y_max:g})"


class QAItem(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: TurnKind
    question: str
    answer: str


class DialogueRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    scene_id: str
    source: Source
    turns: tuple[QAItem, ...] = Field(default=())
    needs_review: bool = False

    @model_validator(mode="after")
    def _turn_limits(self) -> "DialogueRecord":
        if len(self.turns) > self.source.max_turns:
            raise ValueError(f"{self.source.value} records hold at most {self.source.max_turns} turns, got {len(self.turns)}")
        if self.source.is_open_source and not self.turns:
            raise ValueError("open-source records need at least one turn")
        for turn in self.turns:
            if to_first_person(turn.answer) != turn.answer:
                raise ValueError(f"answer is not in the first person: {turn.answer!r}")
        return self

    def turn(self, kind: TurnKind) -> QAItem | None:
        return next((t for t in self.turns if t.kind == kind), None)
