"""Schemas for first-passage-time statistics."""

from pydantic import BaseModel, ConfigDict, Field


class FptMoments(BaseModel):
    """First two moments of an FPT law (or of a sample)."""
    mean: float = Field(..., description="E[T]")
    second_moment: float = Field(..., description="E[T^2]")
    variance: float = Field(..., ge=0, description="Var[T]")
    cv: float = Field(..., ge=0, description="Coefficient of variation sqrt(Var)/E")
    total_mass: float = Field(1.0, gt=0, le=1.0 + 1e-6, description="Probability of crossing")

    model_config = ConfigDict(frozen=True)
