"""Request/response schemas for the HTTP API."""

from typing import List, Optional

from pydantic import BaseModel, ConfigDict, Field

from fptpwl.core.config import settings
from fptpwl.schemas.fit import FitMethod


class ModelRequest(BaseModel):
    """Process and curved threshold, as accepted by every endpoint."""
    mu: float = Field(..., gt=0, description="Drift")
    sigma2: float = Field(..., gt=0, description="Diffusion coefficient")
    b0: float = Field(..., description="Asymptotic threshold level")
    eps: float = Field(..., ge=0, description="Amplitude of the decaying term")
    lam: float = Field(..., ge=0, alias="lambda", description="Decay rate")
    x0: float = Field(0.0, description="Initial level")
    t0: float = Field(0.0, description="Start time")

    model_config = ConfigDict(populate_by_name=True)


class FitRequest(ModelRequest):
    """Threshold fit request."""
    method: FitMethod = Field("free", description="Fit method")


class FitResponse(BaseModel):
    """Fitted two-piece threshold and its window."""
    alpha1: float
    beta1: float
    beta2: float
    t1: float
    alpha2: float
    tau0: float
    tau_star: float
    objective: float
    method: FitMethod


class MomentsResponse(BaseModel):
    """Moments of the FPT under the fitted threshold."""
    mean: float
    variance: float
    cv: float
    total_mass: float
    small_eps_mean: float = Field(..., description="Small-amplitude mean formula")
    small_eps_var: float = Field(..., description="Small-amplitude variance formula")


class DensityRequest(FitRequest):
    """Density table request."""
    t_min: float = Field(..., description="First time of the table")
    t_max: float = Field(..., description="Last time of the table")
    t_steps: int = Field(101, ge=2, le=10_001, description="Number of table rows")


class DensityResponse(BaseModel):
    """Pdf and cdf columns on a time grid."""
    t: List[float]
    pdf: List[float]
    cdf: List[float]


class SimulateRequest(ModelRequest):
    """Simulation request."""
    n: int = Field(..., ge=1, description="Number of paths")
    dt: float = Field(settings.DEFAULT_DT, gt=0, description="Time step")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Global seed")
    t_max: Optional[float] = Field(None, description="Censoring time")


class SimulateResponse(BaseModel):
    """One entry per stream; null marks a censored path."""
    fpt: List[Optional[float]]
    censored_count: int
    t_max: float
