"""Command-line interface: fit, density, moments, simulate, estimate, experiment.

Exit codes: 0 success, 2 invalid flags or config, 3 numerical failure.
"""

import argparse
import json
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from pydantic import ValidationError

from fptpwl.core.config import settings
from fptpwl.core.exceptions import ConvergenceError, InvalidParameterError
from fptpwl.schemas.fit import FitResult
from fptpwl.schemas.process import CurvedThreshold, FitWindow, WienerParams
from fptpwl.schemas.simulation import SimConfig
from fptpwl.services.experiments import run_experiment
from fptpwl.services.fpt_law import fpt_moments, piecewise_fpt_cdf, piecewise_fpt_pdf
from fptpwl.services.inference import build_report, estimate_phi
from fptpwl.services.simulator import simulate_sample
from fptpwl.services.threshold_fit import FIT_METHODS, fit_threshold
from fptpwl.services.thresholds import fit_window
from fptpwl.utils.helpers import setup_logging, to_jsonable
from fptpwl.utils.io import load_experiment_config, read_sample_csv, sample_frame, write_sample_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3

ESTIMATORS = {"mle": "mle", "me": "me", "me-eps": "me_eps"}


def _add_threshold_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--b0", type=float, required=True, help="Asymptotic threshold level")
    parser.add_argument("--eps", type=float, required=True, help="Amplitude of the decaying term")
    parser.add_argument("--lambda", dest="lam", type=float, required=True, help="Decay rate")
    parser.add_argument("--x0", type=float, default=0.0, help="Initial level (default: 0)")
    parser.add_argument("--t0", type=float, default=0.0, help="Start time (default: 0)")


def _add_model_flags(parser: argparse.ArgumentParser) -> None:
    _add_threshold_flags(parser)
    parser.add_argument("--mu", type=float, required=True, help="Drift")
    parser.add_argument("--sigma2", type=float, required=True, help="Diffusion coefficient")


def _add_fit_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=list(FIT_METHODS), default="free", help="Threshold fit (default: free)")
    parser.add_argument("--lower-prob", type=float, default=settings.WINDOW_LOWER_PROB, help="Window lower probability")
    parser.add_argument("--upper-prob", type=float, default=settings.WINDOW_UPPER_PROB, help="Window upper probability")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fptpwl",
        description="First-passage times through an exponentially decaying threshold "
        "via two-piece linear approximations.",
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level (default: %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="Fit a two-piece linear threshold; prints JSON")
    _add_model_flags(fit)
    _add_fit_flags(fit)

    density = sub.add_parser("density", help="Tabulate pdf and cdf under the fitted threshold; prints CSV")
    _add_model_flags(density)
    _add_fit_flags(density)
    density.add_argument("--t-min", type=float, required=True, help="First time of the table")
    density.add_argument("--t-max", type=float, required=True, help="Last time of the table")
    density.add_argument("--t-steps", type=int, default=101, help="Number of table rows (default: 101)")

    moments = sub.add_parser("moments", help="Mean, variance and CV under the fitted threshold; prints JSON")
    _add_model_flags(moments)
    _add_fit_flags(moments)

    simulate = sub.add_parser("simulate", help="Simulate first-passage times; writes CSV")
    _add_model_flags(simulate)
    simulate.add_argument("--n", type=int, required=True, help="Number of paths")
    simulate.add_argument("--dt", type=float, default=settings.DEFAULT_DT, help="Time step (default: %(default)s)")
    simulate.add_argument("--seed", type=int, default=0, help="Global seed (default: 0)")
    simulate.add_argument("--t-max", type=float, default=None, help="Censoring time (default: derived)")
    simulate.add_argument("--workers", type=int, default=settings.WORKERS, help="Worker processes")
    simulate.add_argument("--out", default=None, help="Output CSV (default: stdout)")

    estimate = sub.add_parser("estimate", help="Estimate (mu, sigma2) from a sample CSV; prints JSON")
    estimate.add_argument("--input", required=True, help="Sample CSV with stream_index,fpt")
    estimate.add_argument("--method", choices=list(ESTIMATORS), default="mle", help="Estimator (default: mle)")
    _add_threshold_flags(estimate)
    estimate.add_argument("--truth-mu", type=float, default=None, help="True drift, for error metrics")
    estimate.add_argument("--truth-sigma2", type=float, default=None, help="True diffusion, for error metrics")

    experiment = sub.add_parser("experiment", help="Run a simulation study from a TOML/JSON config")
    experiment.add_argument("--config", required=True, help="Config file (.toml or .json)")
    experiment.add_argument("--out", default=None, help="Output directory (overrides the config)")
    experiment.add_argument("--workers", type=int, default=None, help="Worker processes (overrides the config)")
    return parser


def _process(args: argparse.Namespace) -> Tuple[WienerParams, CurvedThreshold]:
    w = WienerParams(mu=args.mu, sigma2=args.sigma2, x0=args.x0, t0=args.t0)
    th = CurvedThreshold(b0=args.b0, eps=args.eps, lam=args.lam, t0=args.t0)
    return w, th


def _fitted(args: argparse.Namespace) -> Tuple[WienerParams, FitWindow, FitResult]:
    w, th = _process(args)
    window = fit_window(w, th, args.lower_prob, args.upper_prob)
    return w, window, fit_threshold(th, window, args.method)


def _print_json(payload: Dict[str, Any]) -> None:
    print(json.dumps(to_jsonable(payload), indent=2))


def cmd_fit(args: argparse.Namespace) -> int:
    _, window, fit = _fitted(args)
    thr = fit.threshold
    _print_json(
        {
            "alpha1": thr.alpha1,
            "beta1": thr.beta1,
            "beta2": thr.beta2,
            "t1": thr.t1,
            "alpha2": thr.alpha2,
            "tau0": window.tau0,
            "tau_star": window.tau_star,
            "objective": fit.objective,
        }
    )
    return EXIT_OK


def cmd_density(args: argparse.Namespace) -> int:
    if not args.t_min < args.t_max or args.t_steps < 2:
        raise InvalidParameterError("density needs t-min < t-max and at least two steps")
    w, _, fit = _fitted(args)
    t = np.linspace(args.t_min, args.t_max, args.t_steps)
    table = pd.DataFrame(
        {"t": t, "pdf": piecewise_fpt_pdf(w, fit.threshold, t), "cdf": piecewise_fpt_cdf(w, fit.threshold, t)}
    )
    table.to_csv(sys.stdout, index=False)
    return EXIT_OK


def cmd_moments(args: argparse.Namespace) -> int:
    w, _, fit = _fitted(args)
    moments = fpt_moments(w, fit.threshold)
    _print_json(moments.model_dump(include={"mean", "variance", "cv", "total_mass"}))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    w, th = _process(args)
    cfg = SimConfig(dt=args.dt, n_paths=args.n, seed=args.seed, t_max=args.t_max)
    sample = simulate_sample(w, th, cfg, workers=args.workers)
    if args.out:
        write_sample_csv(sample, args.out)
    else:
        sample_frame(sample).to_csv(sys.stdout, index=False)
    return EXIT_OK


def cmd_estimate(args: argparse.Namespace) -> int:
    sample = read_sample_csv(args.input)
    th = CurvedThreshold(b0=args.b0, eps=args.eps, lam=args.lam, t0=args.t0)
    estimate = estimate_phi(sample, th, ESTIMATORS[args.method], args.x0)
    truth = None
    if args.truth_mu is not None and args.truth_sigma2 is not None:
        truth = WienerParams(mu=args.truth_mu, sigma2=args.truth_sigma2, x0=args.x0, t0=args.t0)
    _print_json(build_report(estimate, truth).to_record())
    return EXIT_OK


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = load_experiment_config(args.config)
    if args.workers is not None:
        cfg = cfg.model_copy(update={"workers": args.workers})
    written = run_experiment(cfg, args.out)
    _print_json({name: str(path) for name, path in written.items()})
    return EXIT_OK


COMMANDS: Dict[str, Callable[[argparse.Namespace], int]] = {
    "fit": cmd_fit,
    "density": cmd_density,
    "moments": cmd_moments,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "experiment": cmd_experiment,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    try:
        return COMMANDS[args.command](args)
    except (InvalidParameterError, ValidationError, FileNotFoundError, ValueError) as exc:
        logger.error(f"Invalid input: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ConvergenceError as exc:
        logger.error(f"Numerical failure: {exc}")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def run() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    run()
