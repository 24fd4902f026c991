"""Schemas for Monte Carlo simulation of first-passage times."""

import math
from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from fptpwl.core.config import settings


class SimConfig(BaseModel):
    """Euler-Maruyama settings shared by every stream of a sample."""
    dt: float = Field(settings.DEFAULT_DT, gt=0, description="Time step")
    n_paths: int = Field(..., ge=1, description="Number of simulated paths")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Global 64-bit seed")
    t_max: Optional[float] = Field(
        None, description="Censoring time; derived from the fit window when omitted"
    )

    model_config = ConfigDict(frozen=True)


class FptSample(BaseModel):
    """Observed first-passage times in stream order.

    ``times`` holds the uncensored values; censored streams are listed by
    index and never silently dropped.
    """
    times: List[float] = Field(..., description="Uncensored first-passage times")
    censored_streams: List[int] = Field(default_factory=list, description="Stream indices censored at t_max")
    config: Optional[SimConfig] = Field(None, description="Configuration echo when simulated")

    model_config = ConfigDict(frozen=True)

    @field_validator("times")
    @classmethod
    def _finite(cls, times: List[float]) -> List[float]:
        if not all(math.isfinite(t) for t in times):
            raise ValueError("first-passage times must be finite")
        return times

    @model_validator(mode="after")
    def _check_streams(self) -> "FptSample":
        total = self.n_total
        if any(not 0 <= i < total for i in self.censored_streams):
            raise ValueError("censored stream index outside the sample")
        if len(set(self.censored_streams)) != len(self.censored_streams):
            raise ValueError("censored stream indices must be unique")
        return self

    @property
    def censored_count(self) -> int:
        return len(self.censored_streams)

    @property
    def n_total(self) -> int:
        return len(self.times) + len(self.censored_streams)

    def stream_indices(self) -> List[int]:
        """Stream index of every entry of ``times``."""
        censored = set(self.censored_streams)
        return [i for i in range(self.n_total) if i not in censored]
