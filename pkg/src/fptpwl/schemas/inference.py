"""Schemas for parameter estimates and their error metrics."""

from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field

EstimatorMethod = Literal["mle", "me", "me_eps"]


class PhiEstimate(BaseModel):
    """Estimate of (mu, sigma2) with the threshold parameters held known."""
    mu_hat: float = Field(..., gt=0, description="Estimated drift")
    sigma2_hat: float = Field(..., gt=0, description="Estimated diffusion coefficient")
    method: EstimatorMethod = Field(..., description="Estimator")
    objective_at_optimum: float = Field(0.0, description="Objective value at the returned point")
    converged: bool = Field(True, description="Whether the optimizer met its tolerance")

    model_config = ConfigDict(frozen=True)


class ErrorReport(BaseModel):
    """Relative errors of a set of estimates against the truth."""
    r_me_mu: float = Field(..., description="Mean relative error of mu_hat")
    r_mse_mu: float = Field(..., ge=0, description="Mean squared relative error of mu_hat")
    r_me_sigma2: float = Field(..., description="Mean relative error of sigma2_hat")
    r_mse_sigma2: float = Field(..., ge=0, description="Mean squared relative error of sigma2_hat")
    r_iae: Optional[float] = Field(None, ge=0, description="Relative integrated absolute cdf error")

    model_config = ConfigDict(frozen=True)


class EstimateReport(BaseModel):
    """An estimate plus, when the truth is known, its errors."""
    estimate: PhiEstimate
    errors: Optional[ErrorReport] = None

    def to_record(self) -> Dict[str, Any]:
        """Flat JSON object: mu_hat, sigma2_hat, method, converged, objective and error fields."""
        record: Dict[str, Any] = {
            "mu_hat": self.estimate.mu_hat,
            "sigma2_hat": self.estimate.sigma2_hat,
            "method": self.estimate.method,
            "converged": self.estimate.converged,
            "objective": self.estimate.objective_at_optimum,
        }
        if self.errors is not None:
            record.update(self.errors.model_dump())
        return record
