"""Schemas for fitted piecewise-linear thresholds."""

from typing import Dict, Literal

from pydantic import BaseModel, ConfigDict, Field

from fptpwl.schemas.process import PiecewiseLinearThreshold

FitMethod = Literal["above", "below", "between", "free", "line"]


class FitResult(BaseModel):
    """A piecewise-linear approximation together with its fit quality."""
    threshold: PiecewiseLinearThreshold = Field(..., description="Fitted two-piece threshold")
    objective: float = Field(..., ge=0, description="Achieved squared-distance area")
    method: FitMethod = Field(..., description="Fitting method")
    knots: Dict[str, float] = Field(
        default_factory=dict,
        description="Method-specific parameters (t1 for above; tt1, tt2 for below)",
    )

    model_config = ConfigDict(frozen=True)
