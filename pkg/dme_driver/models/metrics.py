from __future__ import annotations

from pydantic import BaseModel, ConfigDict, Field, model_validator


class PlanMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    l2_1s: float = Field(ge=0)
    l2_2s: float = Field(ge=0)
    l2_3s: float = Field(ge=0)
    l2_avg: float = Field(ge=0)
    col_1s: float = Field(ge=0)
    col_2s: float = Field(ge=0)
    col_3s: float = Field(ge=0)
    col_avg: float = Field(ge=0)
    mismatch_rate: float | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _averages(self) -> "PlanMetrics":
        for prefix in ("l2", "col"):
            values = [getattr(self, f"{prefix}_{h}s") for h in (1, 2, 3)]
            mean = sum(values) / 3.0
            if abs(getattr(self, f"{prefix}_avg") - mean) > 1e-9 * max(1.0, mean):
                raise ValueError(f"{prefix}_avg must be the mean of the three horizons")
        return self

    @classmethod
    def from_horizons(cls, l2: tuple[float, float, float], col: tuple[float, float, float], mismatch_rate: float | None = None) -> "PlanMetrics":
        return cls(
            l2_1s=l2[0], l2_2s=l2[1], l2_3s=l2[2], l2_avg=sum(l2) / 3.0,
            col_1s=col[0], col_2s=col[1], col_3s=col[2], col_avg=sum(col) / 3.0,
            mismatch_rate=mismatch_rate,
        )


class JudgeScore(BaseModel):
    model_config = ConfigDict(frozen=True)

    gaze: float = Field(ge=0, le=1)
    scene_understanding: float = Field(ge=0, le=1)
    reasoning: float = Field(ge=0, le=1)
    decision: float = Field(ge=0, le=1)
