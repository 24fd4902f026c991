"""File formats: FPT sample CSVs, result tables and experiment configs."""

import json
import logging
import sys
from pathlib import Path
from typing import Union

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import numpy as np
import pandas as pd

from fptpwl.core.exceptions import InvalidParameterError
from fptpwl.schemas.experiment import ExperimentConfig
from fptpwl.schemas.simulation import FptSample

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SAMPLE_COLUMNS = ["stream_index", "fpt"]


def sample_frame(sample: FptSample) -> pd.DataFrame:
    """One row per stream; censored streams carry NaN."""
    fpt = np.full(sample.n_total, np.nan)
    fpt[sample.stream_indices()] = sample.times
    return pd.DataFrame({"stream_index": np.arange(sample.n_total), "fpt": fpt})


def write_sample_csv(sample: FptSample, path: PathLike) -> Path:
    """Write ``stream_index,fpt``; censored paths get an empty fpt field."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    sample_frame(sample).to_csv(path, index=False)
    logger.info(f"Wrote {sample.n_total} paths to {path}")
    return path


def read_sample_csv(path: PathLike) -> FptSample:
    """Read a sample CSV written by write_sample_csv."""
    frame = pd.read_csv(path)
    if list(frame.columns) != SAMPLE_COLUMNS:
        raise InvalidParameterError(f"sample file {path} must have header {','.join(SAMPLE_COLUMNS)}")
    frame = frame.sort_values("stream_index", kind="stable")
    if not np.array_equal(frame["stream_index"].to_numpy(), np.arange(len(frame))):
        raise InvalidParameterError(f"stream indices in {path} must run 0..n-1")
    censored = frame["fpt"].isna().to_numpy()
    return FptSample(
        times=frame.loc[~censored, "fpt"].astype(float).tolist(),
        censored_streams=frame.loc[censored, "stream_index"].astype(int).tolist(),
    )


def write_table(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False)
    return path


def load_experiment_config(path: PathLike) -> ExperimentConfig:
    """Load a TOML or JSON experiment config, chosen by file extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".toml":
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    elif suffix == ".json":
        with path.open("r", encoding="utf-8") as handle:
            raw = json.load(handle)
    else:
        raise InvalidParameterError(f"config must be .toml or .json, got '{path.name}'")
    return ExperimentConfig.model_validate(raw)
