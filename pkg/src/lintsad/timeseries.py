"""Series container, CSV/JSON ingestion, preprocessing and splitting."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

SCALINGS = ("none", "min-max", "standard")


class DataError(ValueError):
    """Raised for malformed series input."""


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Uniformly sampled ``T x d`` series with optional 0/1 point labels."""

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    name: str = "series"

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1 or v.shape[1] < 1:
            raise DataError(f"values must be a non-empty T x d matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise DataError("values contain NaN or Inf")
        object.__setattr__(self, "values", _freeze(v))
        if self.labels is not None:
            lab = np.asarray(self.labels)
            if lab.shape != (v.shape[0],):
                raise DataError(f"labels must have length {v.shape[0]}, got shape {lab.shape}")
            if not np.all((lab == 0) | (lab == 1)):
                raise DataError("labels must be 0 or 1")
            object.__setattr__(self, "labels", _freeze(lab.astype(np.int8)))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __len__(self) -> int:
        return self.T

    def slice(self, start: int, stop: int) -> "TimeSeries":
        labels = None if self.labels is None else self.labels[start:stop]
        return TimeSeries(self.values[start:stop], labels, self.name)

    def with_values(self, values: np.ndarray, labels=None) -> "TimeSeries":
        return TimeSeries(values, self.labels if labels is None else labels, self.name)


@dataclass(frozen=True)
class PreprocessSpec:
    """Scaling mode and difference order; differencing is applied first."""

    scaling: str = "none"
    difference_order: int = 0

    def __post_init__(self):
        if self.scaling not in SCALINGS:
            raise ValueError(f"scaling must be one of {SCALINGS}, got {self.scaling!r}")
        if int(self.difference_order) != self.difference_order or self.difference_order < 0:
            raise ValueError("difference_order must be a non-negative integer")


@dataclass(frozen=True)
class Schema:
    """Column mapping for CSV ingestion.

    ``values=None`` takes every column except the label column.
    """

    values: Optional[Sequence[str]] = None
    label: Optional[str] = "label"
    extra_ignored: Sequence[str] = field(default_factory=lambda: ("timestamp", "index"))


def _impute(v: np.ndarray, impute: str) -> np.ndarray:
    bad = ~np.isfinite(v)
    if not bad.any():
        return v
    if impute == "reject":
        r, c = np.argwhere(bad)[0]
        raise DataError(f"missing or non-finite value at row {r}, column {c}")
    if impute != "ffill":
        raise ValueError(f"unknown impute policy {impute!r}")
    out = v.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        ok = np.isfinite(col)
        if not ok[0]:
            raise DataError(f"column {j} has no valid value to forward-fill from")
        idx = np.where(ok, np.arange(len(col)), 0)
        np.maximum.accumulate(idx, out=idx)
        out[:, j] = col[idx]
    return out


def _parse_float(cell: str, row: int, col: str) -> float:
    s = cell.strip()
    if s == "" or s.lower() in ("nan", "na", "null"):
        return math.nan
    try:
        return float(s)
    except ValueError:
        raise DataError(f"non-numeric cell {cell!r} at row {row}, column {col!r}") from None


def _parse_label(cell: str, row: int) -> int:
    try:
        x = float(cell.strip())
    except ValueError:
        raise DataError(f"non-numeric cell {cell!r} at row {row} in label column") from None
    if x not in (0.0, 1.0):
        raise DataError(f"label {cell!r} at row {row} outside {{0,1}}")
    return int(x)


def load_csv(path: Union[str, Path], schema: Optional[Schema] = None, impute: str = "reject",
             name: Optional[str] = None) -> TimeSeries:
    """Read a header-row CSV into a :class:`TimeSeries`.

    Empty and ``nan`` cells count as missing; ``impute="ffill"`` repairs them
    with the last valid value, the default rejects them.
    """
    schema = schema or Schema()
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"empty file: {path}") from None
        rows = list(reader)

    label_col = schema.label if schema.label in header else None
    if schema.values is None:
        value_cols = [h for h in header if h != label_col and h not in schema.extra_ignored]
    else:
        value_cols = list(schema.values)
        missing = [c for c in value_cols if c not in header]
        if missing:
            raise DataError(f"columns not found in {path}: {missing}")
    if not value_cols:
        raise DataError(f"no value columns in {path}")
    vidx = [header.index(c) for c in value_cols]
    lidx = header.index(label_col) if label_col else None

    rows = [r for r in rows if any(c.strip() for c in r)]
    if not rows:
        raise DataError(f"no data rows in {path}")
    values = np.empty((len(rows), len(vidx)))
    labels = np.empty(len(rows), dtype=np.int8) if lidx is not None else None
    for i, r in enumerate(rows):
        if len(r) != len(header):
            raise DataError(f"ragged row {i + 2}: expected {len(header)} cells, got {len(r)}")
        for j, k in enumerate(vidx):
            values[i, j] = _parse_float(r[k], i + 2, header[k])
        if lidx is not None:
            labels[i] = _parse_label(r[lidx], i + 2)
    return TimeSeries(_impute(values, impute), labels, name or path.stem)


def load_json(path: Union[str, Path], impute: str = "reject", name: Optional[str] = None) -> TimeSeries:
    """Read ``{"values": [[...], ...], "labels": [...]}``."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    obj = json.loads(path.read_text(encoding="utf-8"))
    if "values" not in obj:
        raise DataError(f"{path}: missing 'values'")
    rows = [row if isinstance(row, list) else [row] for row in obj["values"]]
    if len({len(r) for r in rows}) > 1:
        raise DataError(f"{path}: ragged rows")
    try:
        values = np.array([[math.nan if x is None else float(x) for x in r] for r in rows])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: non-numeric cell ({exc})") from None
    return TimeSeries(_impute(values, impute), obj.get("labels"), name or path.stem)


def load_series(path: Union[str, Path], schema: Optional[Schema] = None, impute: str = "reject") -> TimeSeries:
    if Path(path).suffix.lower() == ".json":
        return load_json(path, impute)
    return load_csv(path, schema, impute)


def write_csv(ts: TimeSeries, path: Union[str, Path]) -> None:
    """Write in the same layout :func:`load_csv` reads (v1..vd[,label])."""
    cols = ["v"] if ts.d == 1 else [f"v{j + 1}" for j in range(ts.d)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(cols + (["label"] if ts.labels is not None else []))
        for i in range(ts.T):
            row = [repr(float(x)) for x in ts.values[i]]
            if ts.labels is not None:
                row.append(int(ts.labels[i]))
            w.writerow(row)


def difference(values: np.ndarray, order: int) -> np.ndarray:
    out = np.asarray(values, dtype=float)
    for _ in range(order):
        out = np.diff(out, axis=0)
    return out


def undifference(diffed: np.ndarray, anchors: Sequence[np.ndarray]) -> np.ndarray:
    """Invert :func:`difference`.

    ``anchors[j]`` is the first row of the series after ``j`` differences,
    i.e. what was lost at each differencing step.
    """
    out = np.asarray(diffed, dtype=float)
    for a in reversed(list(anchors)):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        out = np.vstack([a[None, :], a[None, :] + np.cumsum(out, axis=0)])
    return out


def scaling_stats(values: np.ndarray, scaling: str) -> tuple[np.ndarray, np.ndarray]:
    """Return per-channel ``(shift, scale)`` so that ``(x - shift) / scale``."""
    d = values.shape[1]
    if scaling == "none":
        return np.zeros(d), np.ones(d)
    if scaling == "min-max":
        lo, hi = values.min(axis=0), values.max(axis=0)
        rng = hi - lo
        return lo, np.where(rng > 0, rng, 1.0)
    if scaling == "standard":
        mu = values.mean(axis=0)
        sd = values.std(axis=0)  # population (1/T)
        return mu, np.where(sd > 0, sd, 1.0)
    raise ValueError(f"unknown scaling {scaling!r}")


def fit_scaler(ts: TimeSeries, spec: PreprocessSpec) -> tuple[np.ndarray, np.ndarray]:
    """Scaling statistics of ``ts`` after ``spec``'s differencing."""
    if spec.difference_order >= ts.T:
        raise DataError(f"difference_order {spec.difference_order} must be < stats series length {ts.T}")
    return scaling_stats(difference(ts.values, spec.difference_order), spec.scaling)


def transform(ts: TimeSeries, spec: PreprocessSpec, shift: np.ndarray, scale: np.ndarray) -> TimeSeries:
    """Difference then apply ``(x - shift) / scale``; drops the first ``difference_order`` labels."""
    k = spec.difference_order
    if k >= ts.T:
        raise DataError(f"difference_order {k} must be < series length {ts.T}")
    if len(shift) != ts.d:
        raise DataError(f"channel-count mismatch: series has d={ts.d}, statistics have d={len(shift)}")
    labels = None if ts.labels is None else ts.labels[k:]
    return TimeSeries((difference(ts.values, k) - shift) / scale, labels, ts.name)


def preprocess(ts: TimeSeries, spec: PreprocessSpec, stats_from: Optional[TimeSeries] = None) -> TimeSeries:
    """Difference, then scale per channel.

    Scaling statistics are taken from ``stats_from`` after applying the same
    differencing to it, so train and test end up in the same space. The first
    ``difference_order`` labels are dropped along with their rows.
    """
    if spec.difference_order >= ts.T:
        raise DataError(f"difference_order {spec.difference_order} must be < series length {ts.T}")
    ref = ts if stats_from is None else stats_from
    if ref.d != ts.d:
        raise DataError(f"channel-count mismatch: series has d={ts.d}, stats_from has d={ref.d}")
    shift, scale = fit_scaler(ref, spec)
    return transform(ts, spec, shift, scale)


def train_test_split(ts: TimeSeries, boundary: Union[int, float]) -> tuple[TimeSeries, TimeSeries]:
    """Contiguous split; an ``int`` is a row index, a ``float`` a fraction of T."""
    if isinstance(boundary, bool):
        raise TypeError("boundary must be an int index or float fraction")
    if isinstance(boundary, (int, np.integer)):
        idx = int(boundary)
    else:
        frac = float(boundary)
        if not 0.0 < frac < 1.0:
            raise DataError(f"boundary out of range: fraction {frac}")
        idx = int(math.floor(frac * ts.T))
    if not 0 < idx < ts.T:
        raise DataError(f"boundary out of range: index {idx} for T={ts.T}")
    return ts.slice(0, idx), ts.slice(idx, ts.T)


def concat(a: TimeSeries, b: TimeSeries) -> TimeSeries:
    if a.d != b.d:
        raise DataError("channel-count mismatch")
    if (a.labels is None) != (b.labels is None):
        labels = None
    else:
        labels = None if a.labels is None else np.concatenate([a.labels, b.labels])
    return TimeSeries(np.vstack([a.values, b.values]), labels, a.name)
