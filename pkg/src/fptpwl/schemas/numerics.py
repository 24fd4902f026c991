"""Tolerance and bracket schemas for the numerical kernels."""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class Tolerance(BaseModel):
    """Stopping rule shared by quadrature, root finding and the simplex search."""
    abs_tol: float = Field(..., gt=0, description="Absolute tolerance")
    rel_tol: float = Field(..., gt=0, description="Relative tolerance")
    max_iter: int = Field(..., ge=1, description="Iteration / subdivision cap")

    model_config = ConfigDict(frozen=True)


class Bracket(BaseModel):
    """Closed interval [lo, hi] expected to contain a root."""
    lo: float = Field(..., description="Lower end")
    hi: float = Field(..., description="Upper end")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_order(self) -> "Bracket":
        if not self.lo < self.hi:
            raise ValueError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")
        return self


QUAD_TOL = Tolerance(abs_tol=1e-9, rel_tol=1e-7, max_iter=200)
ROOT_TOL = Tolerance(abs_tol=1e-10, rel_tol=1e-12, max_iter=200)
SIMPLEX_TOL = Tolerance(abs_tol=1e-8, rel_tol=1e-8, max_iter=2000)
