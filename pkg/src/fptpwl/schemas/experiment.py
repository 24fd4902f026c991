"""Schemas for simulation-study configuration files."""

from itertools import product
from typing import List, Literal, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator

from fptpwl.core.config import settings
from fptpwl.schemas.fit import FitMethod
from fptpwl.schemas.inference import EstimatorMethod

GridName = Literal["statistics", "estimation", "riae"]


class ModelBlock(BaseModel):
    """Process parameters; one cell per sigma2 value."""
    mu: float = Field(1.0, gt=0, description="Drift")
    sigma2: List[float] = Field(..., min_length=1, description="Diffusion coefficients")
    x0: float = Field(0.0, description="Initial level")
    t0: float = Field(0.0, description="Start time")

    @field_validator("sigma2")
    @classmethod
    def _positive(cls, values: List[float]) -> List[float]:
        if any(v <= 0 for v in values):
            raise ValueError("sigma2 values must be positive")
        return values


class ThresholdBlock(BaseModel):
    """Curved threshold parameters; one cell per (eps, lambda) pair."""
    b0: float = Field(1.0, description="Asymptotic level")
    eps: List[float] = Field(..., min_length=1, description="Amplitudes")
    lam: List[float] = Field(..., min_length=1, alias="lambda", description="Decay rates")

    model_config = ConfigDict(populate_by_name=True)

    @field_validator("eps", "lam")
    @classmethod
    def _nonnegative(cls, values: List[float]) -> List[float]:
        if any(v < 0 for v in values):
            raise ValueError("amplitudes and decay rates must be nonnegative")
        return values


class SimBlock(BaseModel):
    """Monte Carlo sizes and the global seed."""
    dt: float = Field(settings.DEFAULT_DT, gt=0, description="Euler step")
    n_paths: int = Field(100_000, ge=2, description="Paths per cell for statistics and R_IAE")
    n_obs: int = Field(100, ge=2, description="Observations per estimation data set")
    repetitions: int = Field(200, ge=1, description="Data sets per estimation cell")
    seed: int = Field(0, ge=0, lt=2 ** 64, description="Global seed")


class FitBlock(BaseModel):
    """Threshold fit used for theoretical statistics and estimation."""
    method: FitMethod = Field("free", description="Fit method")
    lower_prob: float = Field(settings.WINDOW_LOWER_PROB, gt=0, lt=1, description="Window lower probability")
    upper_prob: float = Field(settings.WINDOW_UPPER_PROB, gt=0, lt=1, description="Window upper probability")


class ExperimentConfig(BaseModel):
    """A full simulation study."""
    model: ModelBlock
    threshold: ThresholdBlock
    sim: SimBlock = Field(default_factory=SimBlock)
    fit: FitBlock = Field(default_factory=FitBlock)
    estimators: List[EstimatorMethod] = Field(["mle", "me", "me_eps"], min_length=1)
    grids: List[GridName] = Field(["statistics", "estimation", "riae"], min_length=1)
    workers: int = Field(settings.WORKERS, ge=1, description="Cells evaluated in parallel")
    output_dir: str = Field("results", description="Directory receiving the CSV tables")

    def cells(self) -> List[Tuple[int, float, float, float]]:
        """(index, sigma2, eps, lambda) in grid order."""
        grid = product(self.model.sigma2, self.threshold.eps, self.threshold.lam)
        return [(i, s2, eps, lam) for i, (s2, eps, lam) in enumerate(grid)]
