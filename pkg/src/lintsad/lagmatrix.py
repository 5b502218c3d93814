"""Lagged design and response matrices for autoregressive fitting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .timeseries import DataError, TimeSeries


@dataclass(frozen=True, eq=False)
class LagDataset:
    """``X`` rows are ``(1, y[t-1], ..., y[t-p])``, ``Y`` rows are ``y[t]``.

    Lags are most-recent first; within a lag the ``d`` channels are contiguous.
    ``t0`` is the 0-based source index of ``Y[0]`` (always ``p``).
    """

    X: np.ndarray
    Y: np.ndarray
    p: int
    d: int
    t0: int


def lag_features(values: np.ndarray, p: int) -> np.ndarray:
    """Design rows for every target index ``t = p .. T-1`` of ``values`` (T x d)."""
    values = np.asarray(values, dtype=float)
    T, d = values.shape
    if p < 1:
        raise ValueError(f"lag order must be >= 1, got {p}")
    if T <= p:
        raise DataError(f"series length {T} must exceed lag order {p}")
    # windows[i] = values[i : i+p] as (d, p); target row i+p
    windows = sliding_window_view(values[:-1], p, axis=0)
    lags = windows[:, :, ::-1].transpose(0, 2, 1).reshape(T - p, p * d)
    X = np.empty((T - p, 1 + p * d))
    X[:, 0] = 1.0
    X[:, 1:] = lags
    return X


def build_lag_dataset(ts: TimeSeries, p: int) -> LagDataset:
    if int(p) != p or p < 1:
        raise ValueError(f"lag order must be a positive integer, got {p}")
    p = int(p)
    if ts.T <= p:
        raise DataError(f"series length {ts.T} must exceed lag order {p}")
    X = lag_features(ts.values, p)
    Y = np.array(ts.values[p:])
    X.setflags(write=False)
    Y.setflags(write=False)
    return LagDataset(X, Y, p, ts.d, p)
