"""Interest-rate partitioning, Vasicek/CIR calibration and rolling forecasts."""

import json

from ._core import (
    CalibrationResult,
    DomainError,
    GofResult,
    KeyError,
    LoadError,
    ModelKind,
    ModelParams,
    Ncx2Params,
    PartitionKind,
    RatecastError,
    ShiftError,
    UsageError,
    WindowSelection,
    backward_window,
    calibrate,
    ewma_forecast,
    fit_ncx2,
    forecast_expected,
    ks_ncx2_test,
    lilliefors_test,
    load_rates,
    ncx2_cdf,
    sample_ncx2,
    series,
    simulate,
)
from . import _core


def forward_partition(series, kind, level=0.05, seed=20161118):
    """Partition report as a dict (kind, groups, leftover)."""
    return json.loads(_core.partition_json(list(series), kind, level, seed))


def fit_sample(series, kind, model, level=0.05, seed=20161118):
    """In-sample fit report as a dict; NaN fitted values appear as None."""
    return json.loads(_core.fit_json(list(series), kind, model, level, seed))


def forecast_rolling(series, kind, model, window=52, lambda_=0.94, partition=True, level=0.05, seed=20161118):
    """Rolling one-step forecast report as a dict."""
    return json.loads(
        _core.forecast_json(list(series), kind, model, window, lambda_, partition, level, seed)
    )


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
