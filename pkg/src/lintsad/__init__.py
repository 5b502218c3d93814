"""Closed-form linear autoregressive anomaly detection for time series."""

from .detector import DetectorConfig, ScoreSeries, fit_detect, score
from .lagmatrix import LagDataset, build_lag_dataset
from .metrics import EvalResult, best_f1_sweep, event_f1_delay, events_from_labels, f1_point, point_adjust
from .solver import LinearModel, ridge_fit, rrr_fit, truncated_projection
from .timeseries import PreprocessSpec, Schema, TimeSeries, load_csv, preprocess, train_test_split

__version__ = "0.1.0"

__all__ = [
    "DetectorConfig", "ScoreSeries", "fit_detect", "score",
    "LagDataset", "build_lag_dataset",
    "EvalResult", "best_f1_sweep", "event_f1_delay", "events_from_labels", "f1_point", "point_adjust",
    "LinearModel", "ridge_fit", "rrr_fit", "truncated_projection",
    "PreprocessSpec", "Schema", "TimeSeries", "load_csv", "preprocess", "train_test_split",
]
