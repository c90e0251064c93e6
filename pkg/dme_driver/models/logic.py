from __future__ import annotations

import math
from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class DecisionCategory(str, Enum):
    """The eight maneuver classes, in tie-breaking order."""

    FORWARD = "Forward"
    ACCELERATE = "Accelerate"
    DECELERATE = "Decelerate"
    STOP = "Stop"
    TURN_LEFT = "TurnLeft"
    TURN_RIGHT = "TurnRight"
    LANE_CHANGE_LEFT = "LaneChangeLeft"
    LANE_CHANGE_RIGHT = "LaneChangeRight"

    @property
    def rank(self) -> int:
        return list(DecisionCategory).index(self)


class DriverLogicOutput(BaseModel):
    """What the Decision-Maker says about one scene."""

    model_config = ConfigDict(frozen=True)

    scene_id: str = ""
    gaze_text: str = ""
    description_text: str = ""
    reasoning_text: str = ""
    decision_text: str
    category: DecisionCategory
    source: str = "scripted"

    @field_validator("decision_text")
    @classmethod
    def _decision_nonempty(cls, value: str) -> str:
        if not value.strip():
            raise ValueError("decision_text must be nonempty")
        return value


class RuleThresholds(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    turn_deg: float = Field(15.0, gt=0)
    lateral_lc: float = Field(1.5, gt=0)
    accel_ratio: float = Field(1.25, gt=0)
    decel_ratio: float = Field(0.8, gt=0)
    v_stop: float = Field(0.5, gt=0)

    @model_validator(mode="after")
    def _ratios_straddle_one(self) -> "RuleThresholds":
        if not self.accel_ratio > 1.0 > self.decel_ratio:
            raise ValueError("need accel_ratio > 1 > decel_ratio")
        return self

    @property
    def turn_rad(self) -> float:
        return math.radians(self.turn_deg)
