from __future__ import annotations

from enum import Enum
from pathlib import Path

from pydantic import BaseModel, ConfigDict, Field


class AblationMode(str, Enum):
    """Which text cues reach the planner; one per ablation-table row."""

    EXECUTOR_ONLY = "executor_only"
    GT_TEXT = "gt_text"
    DM_TEXT = "dm_text"
    DM_TEXT_CL = "dm_text_cl"

    @property
    def label(self) -> str:
        return {
            AblationMode.EXECUTOR_ONLY: "Executor",
            AblationMode.GT_TEXT: "GT+Executor",
            AblationMode.DM_TEXT: "Decision-Maker + Executor",
            AblationMode.DM_TEXT_CL: "Decision-Maker + Executor + CL",
        }[self]


class LossWeights(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    imitation: float = Field(1.0, ge=0)
    collision: float = Field(0.5, ge=0)
    consistency: float = Field(0.2, ge=0)


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(40, ge=0)
    lr: float = Field(1e-2, gt=0)
    momentum: float = Field(0.9, ge=0, lt=1)
    batch_size: int = Field(8, ge=1)
    grad_clip: float = Field(5.0, ge=0)
    seed: int = 7
    dataset: Path | None = None
    ablation: AblationMode = AblationMode.DM_TEXT_CL
