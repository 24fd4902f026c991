"""Simulation-study grids: firing statistics, estimator errors and cdf errors.

Every grid walks the (sigma2, eps, lambda) cells of an ExperimentConfig.
Cells are independent and seeded from (global seed, cell, repetition), so a
grid produces the same table whatever the number of workers. A failing cell
yields a row with its ``error`` column set and the run continues.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import ValidationError

from fptpwl.core.exceptions import FptError
from fptpwl.schemas.experiment import ExperimentConfig, FitBlock
from fptpwl.schemas.inference import EstimatorMethod, PhiEstimate
from fptpwl.schemas.process import CurvedThreshold, FitWindow, WienerParams
from fptpwl.schemas.simulation import FptSample, SimConfig
from fptpwl.services.fpt_law import (
    cdf_table,
    fpt_moments,
    small_eps_mean,
    small_eps_var,
    truncation_time,
)
from fptpwl.services.inference import estimate_phi, r_iae, relative_errors
from fptpwl.services.simulator import derive_seed, empirical_stats, simulate_sample
from fptpwl.services.threshold_fit import fit_above_below, fit_between, fit_free, fit_threshold
from fptpwl.services.thresholds import fit_window
from fptpwl.utils.io import write_table

logger = logging.getLogger(__name__)

Estimator = Callable[[FptSample, CurvedThreshold, EstimatorMethod, float], PhiEstimate]
Cell = Tuple[int, float, float, float]


def _cell_params(cfg: ExperimentConfig, cell: Cell) -> Dict[str, Any]:
    index, sigma2, eps, lam = cell
    return {
        "cell": index,
        "mu": cfg.model.mu,
        "sigma2": sigma2,
        "x0": cfg.model.x0,
        "t0": cfg.model.t0,
        "b0": cfg.threshold.b0,
        "eps": eps,
        "lambda": lam,
    }


def _cell_objects(cfg: ExperimentConfig, cell: Cell) -> Tuple[WienerParams, CurvedThreshold]:
    _, sigma2, eps, lam = cell
    w = WienerParams(mu=cfg.model.mu, sigma2=sigma2, x0=cfg.model.x0, t0=cfg.model.t0)
    th = CurvedThreshold(b0=cfg.threshold.b0, eps=eps, lam=lam, t0=cfg.model.t0)
    return w, th


def _window(cfg: ExperimentConfig, w: WienerParams, th: CurvedThreshold) -> FitWindow:
    return fit_window(w, th, cfg.fit.lower_prob, cfg.fit.upper_prob)


RowsFor = Callable[[ExperimentConfig, Cell], List[Dict[str, Any]]]


def _guarded(rows_for: RowsFor, cfg: ExperimentConfig, cell: Cell) -> List[Dict[str, Any]]:
    try:
        return rows_for(cfg, cell)
    except (FptError, ValidationError, ValueError) as exc:
        logger.error(f"Cell {cell[0]} failed: {exc}")
        return [{**_cell_params(cfg, cell), "error": f"{type(exc).__name__}: {exc}"}]


def _run_cells(
    cfg: ExperimentConfig,
    rows_for: RowsFor,
    name: str,
    parallel: bool = True,
) -> pd.DataFrame:
    cells = cfg.cells()
    job = partial(_guarded, rows_for, cfg)
    if parallel and cfg.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            per_cell = list(pool.map(job, cells))
    else:
        per_cell = [job(cell) for cell in cells]

    rows = [row for cell_rows in per_cell for row in cell_rows]
    failed = sum(1 for cell_rows in per_cell if any(row.get("error") for row in cell_rows))
    logger.info(f"{name} grid: {failed}/{len(cells)} cells failed")
    frame = pd.DataFrame(rows)
    if "error" not in frame.columns:
        frame["error"] = None
    return frame


def _statistics_rows(cfg: ExperimentConfig, cell: Cell) -> List[Dict[str, Any]]:
    w, th = _cell_objects(cfg, cell)
    fit = fit_threshold(th, _window(cfg, w, th), cfg.fit.method)
    theory = fpt_moments(w, fit.threshold)
    sim = SimConfig(dt=cfg.sim.dt, n_paths=cfg.sim.n_paths, seed=derive_seed(cfg.sim.seed, cell[0], 0))
    sample = simulate_sample(w, th, sim, workers=1)
    empirical, _ = empirical_stats(sample, w.t0)
    return [
        {
            **_cell_params(cfg, cell),
            "fit_method": cfg.fit.method,
            "theo_mean": theory.mean,
            "theo_var": theory.variance,
            "theo_cv": theory.cv,
            "small_eps_mean": small_eps_mean(w, th),
            "small_eps_var": small_eps_var(w, th),
            "emp_mean": empirical.mean,
            "emp_var": empirical.variance,
            "emp_cv": empirical.cv,
            "censored": sample.censored_count,
            "error": None,
        }
    ]


def run_statistics_grid(cfg: ExperimentConfig) -> pd.DataFrame:
    """Theoretical, small-amplitude and simulated mean/variance/CV per cell."""
    return _run_cells(cfg, _statistics_rows, "statistics")


def _default_estimator(
    fit: FitBlock, sample: FptSample, th: CurvedThreshold, method: EstimatorMethod, x0: float
) -> PhiEstimate:
    return estimate_phi(
        sample, th, method, x0, fit_method=fit.method, lower_prob=fit.lower_prob, upper_prob=fit.upper_prob
    )


def _estimation_rows(cfg: ExperimentConfig, cell: Cell, estimator: Estimator) -> List[Dict[str, Any]]:
    w, th = _cell_objects(cfg, cell)
    estimates: Dict[str, List[PhiEstimate]] = {m: [] for m in cfg.estimators}
    for rep in range(cfg.sim.repetitions):
        sim = SimConfig(dt=cfg.sim.dt, n_paths=cfg.sim.n_obs, seed=derive_seed(cfg.sim.seed, cell[0], rep))
        sample = simulate_sample(w, th, sim, workers=1)
        for method in cfg.estimators:
            estimates[method].append(estimator(sample, th, method, w.x0))

    rows = []
    for method in cfg.estimators:
        report = relative_errors(estimates[method], w)
        rows.append(
            {
                **_cell_params(cfg, cell),
                "method": method,
                "repetitions": cfg.sim.repetitions,
                "n_obs": cfg.sim.n_obs,
                "r_me_mu": report.r_me_mu,
                "r_mse_mu": report.r_mse_mu,
                "r_me_sigma2": report.r_me_sigma2,
                "r_mse_sigma2": report.r_mse_sigma2,
                "not_converged": sum(not e.converged for e in estimates[method]),
                "error": None,
            }
        )
    return rows


def run_estimation_grid(cfg: ExperimentConfig, estimator: Optional[Estimator] = None) -> pd.DataFrame:
    """R_ME and R_MSE of each estimator per cell.

    An injected ``estimator`` runs in-process, since it need not be picklable.
    """
    rows_for = partial(_estimation_rows_with, estimator or partial(_default_estimator, cfg.fit))
    return _run_cells(cfg, rows_for, "estimation", parallel=estimator is None)


def _estimation_rows_with(estimator: Estimator, cfg: ExperimentConfig, cell: Cell) -> List[Dict[str, Any]]:
    return _estimation_rows(cfg, cell, estimator)


def _riae_rows(cfg: ExperimentConfig, cell: Cell) -> List[Dict[str, Any]]:
    w, th = _cell_objects(cfg, cell)
    window = _window(cfg, w, th)
    above, below = fit_above_below(th, window)
    between = fit_between(above, below, window)
    free = fit_free(th, window, seed=between)

    sim = SimConfig(dt=cfg.sim.dt, n_paths=cfg.sim.n_paths, seed=derive_seed(cfg.sim.seed, cell[0], 0))
    sample = simulate_sample(w, th, sim, workers=1)
    latest = max(sample.times)

    row = {**_cell_params(cfg, cell), "censored": sample.censored_count}
    for name, fit in (("free", free), ("above", above), ("below", below), ("between", between)):
        t_end = max(latest, truncation_time(w, fit.threshold))
        row[f"riae_{name}"] = r_iae(cdf_table(w, fit.threshold, t_end), sample, w.t0)
    row["error"] = None
    return [row]


def run_riae_grid(cfg: ExperimentConfig) -> pd.DataFrame:
    """R_IAE of the four fitted thresholds against simulated data per cell."""
    return _run_cells(cfg, _riae_rows, "riae")


GRIDS: Dict[str, Callable[[ExperimentConfig], pd.DataFrame]] = {
    "statistics": run_statistics_grid,
    "estimation": run_estimation_grid,
    "riae": run_riae_grid,
}


def run_experiment(cfg: ExperimentConfig, output_dir: Optional[str] = None) -> Dict[str, Path]:
    """Run the configured grids and write ``<grid>.csv`` files."""
    out = Path(output_dir or cfg.output_dir)
    written: Dict[str, Path] = {}
    for name in cfg.grids:
        logger.info(f"Running {name} grid over {len(cfg.cells())} cells")
        written[name] = write_table(GRIDS[name](cfg), out / f"{name}.csv")
        logger.info(f"Wrote {written[name]}")
    return written
