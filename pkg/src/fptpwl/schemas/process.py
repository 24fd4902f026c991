"""Schemas for the diffusion, its thresholds and the fit window."""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class WienerParams(BaseModel):
    """Drifted Brownian motion dX = mu dt + sigma dW started at (t0, x0)."""
    mu: float = Field(..., gt=0, description="Drift per unit time")
    sigma2: float = Field(..., gt=0, description="Diffusion coefficient (variance per unit time)")
    x0: float = Field(0.0, description="Initial level")
    t0: float = Field(0.0, description="Start time")

    model_config = ConfigDict(frozen=True)

    @property
    def sigma(self) -> float:
        return self.sigma2 ** 0.5


class CurvedThreshold(BaseModel):
    """Exponentially decaying threshold b(t) = b0 + eps * exp(-lambda (t - t0))."""
    b0: float = Field(..., description="Asymptotic level")
    eps: float = Field(..., ge=0, description="Amplitude of the decaying term")
    lam: float = Field(..., ge=0, alias="lambda", description="Decay rate (0 gives a flat threshold)")
    t0: float = Field(0.0, description="Start time")

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    @property
    def is_flat(self) -> bool:
        return self.eps == 0.0 or self.lam == 0.0


class PiecewiseLinearThreshold(BaseModel):
    """Continuous two-piece linear threshold with its knot at t1.

    The second intercept is derived, never stored, so the threshold is
    continuous at t1 by construction.
    """
    alpha1: float = Field(..., description="Level at t0")
    beta1: float = Field(..., description="Slope on [t0, t1]")
    beta2: float = Field(..., description="Slope after t1")
    t1: float = Field(..., description="Knot time")
    t0: float = Field(0.0, description="Start time")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_knot(self) -> "PiecewiseLinearThreshold":
        if not self.t1 > self.t0:
            raise ValueError(f"knot t1={self.t1} must lie after t0={self.t0}")
        return self

    @property
    def alpha2(self) -> float:
        """Level at the knot."""
        return self.alpha1 + self.beta1 * (self.t1 - self.t0)


class FitWindow(BaseModel):
    """Interval [tau0, tau_star] holding at least 99% of the FPT mass."""
    tau0: float = Field(..., description="Lower end of the window")
    tau_star: float = Field(..., description="Upper end of the window")
    t0: float = Field(0.0, description="Start time of the process")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_order(self) -> "FitWindow":
        if not self.t0 < self.tau0 < self.tau_star:
            raise ValueError(
                f"fit window requires t0 < tau0 < tau_star, got "
                f"{self.t0}, {self.tau0}, {self.tau_star}"
            )
        return self

    @property
    def width(self) -> float:
        return self.tau_star - self.tau0
