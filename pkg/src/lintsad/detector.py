"""Residual scoring and the fit/score pipeline."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .lagmatrix import build_lag_dataset, lag_features
from .solver import LinearModel, fit
from .timeseries import DataError, PreprocessSpec, TimeSeries, preprocess

UNSCORED = np.nan


@dataclass(frozen=True, eq=False)
class ScoreSeries:
    """Per-timestep squared prediction errors.

    Entries before ``valid_from`` hold ``NaN`` (no full lag window).
    """

    scores: np.ndarray
    valid_from: int

    def __post_init__(self):
        s = np.array(self.scores, dtype=float)
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    def __len__(self) -> int:
        return len(self.scores)

    @property
    def valid(self) -> np.ndarray:
        return self.scores[self.valid_from:]


@dataclass(frozen=True)
class DetectorConfig:
    """``rank=None`` fits full-rank ridge/OLS; ``lam=None`` uses the relative default.

    ``contiguous`` marks test as the direct continuation of train, so the
    last train points provide context for the first test windows.
    """

    p: int
    lam: Optional[float] = None
    rank: Optional[int] = None
    preprocess: PreprocessSpec = field(default_factory=PreprocessSpec)
    contiguous: bool = False

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p}")
        if self.rank is not None and self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        if self.lam is not None and self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")


def score(ts: TimeSeries, model: LinearModel) -> ScoreSeries:
    """``s[t] = ||y[t] - W' x[t]||^2`` for ``t >= p``."""
    if ts.d != model.d:
        raise DataError(f"channel mismatch: series d={ts.d}, model d={model.d}")
    if ts.T <= model.p:
        raise DataError(f"series length {ts.T} must exceed lag order {model.p}")
    X = lag_features(ts.values, model.p)
    R = ts.values[model.p:] - X @ model.W
    out = np.full(ts.T, UNSCORED)
    out[model.p:] = np.einsum("ij,ij->i", R, R)
    return ScoreSeries(out, model.p)


def fit_model(train: TimeSeries, config: DetectorConfig) -> LinearModel:
    """Fit on an already preprocessed series."""
    if config.rank is not None and config.rank > train.d:
        raise ValueError(f"rank {config.rank} exceeds channel count {train.d}")
    return fit(build_lag_dataset(train, config.p), config.lam, config.rank)


def fit_detect(train: TimeSeries, test: TimeSeries, config: DetectorConfig) -> tuple[LinearModel, ScoreSeries]:
    """Preprocess with train statistics, fit on train, score test.

    The returned scores are aligned index-for-index with ``test``.
    """
    if train.d != test.d:
        raise DataError(f"channel mismatch: train d={train.d}, test d={test.d}")
    spec = config.preprocess
    k = spec.difference_order
    train_p = preprocess(train, spec)
    model = fit_model(train_p, config)

    if config.contiguous:
        ctx = config.p + k
        if train.T < ctx:
            raise DataError(f"train too short to supply {ctx} context points")
        head = train.values[train.T - ctx:]
        joined = TimeSeries(np.vstack([head, test.values]), name=test.name)
        s = score(preprocess(joined, spec, stats_from=train), model)
        return model, ScoreSeries(s.scores[config.p:], 0)

    test_p = preprocess(test, spec, stats_from=train)
    s = score(test_p, model)
    out = np.concatenate([np.full(k, UNSCORED), s.scores])
    return model, ScoreSeries(out, s.valid_from + k)


def write_scores_csv(scores: ScoreSeries, path: Union[str, Path], labels: Optional[np.ndarray] = None) -> None:
    """Columns ``index,score[,label]``; unscored rows leave ``score`` empty."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "score"] + (["label"] if labels is not None else []))
        for i, s in enumerate(scores.scores):
            row = [i, "" if np.isnan(s) else format(float(s), ".17g")]
            if labels is not None:
                row.append(int(labels[i]))
            w.writerow(row)


def read_scores_csv(path: Union[str, Path]) -> tuple[ScoreSeries, Optional[np.ndarray]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise DataError(f"no rows in {path}")
    s = np.array([float(r["score"]) if r["score"].strip() else np.nan for r in rows])
    labels = np.array([int(r["label"]) for r in rows]) if "label" in rows[0] else None
    scored = np.flatnonzero(~np.isnan(s))
    valid_from = int(scored[0]) if len(scored) else len(s)
    if np.isnan(s[valid_from:]).any():
        raise DataError(f"{path}: gap in scores after warm-up")
    return ScoreSeries(s, valid_from), labels
