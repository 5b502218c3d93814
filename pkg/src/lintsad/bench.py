"""Benchmark configuration, per-cell runs, rank aggregation and timing.

Config grammar (INI, paths relative to the config file)::

    [bench]
    output = results            ; report directory
    workers = 1                 ; parallel (dataset, method) cells
    metrics = F1, B-F-5, E-F-5
    late_alarm_policy = clear   ; or fp

    [dataset:NAME]
    train = a_train.csv         ; either a train/test pair ...
    test = a_test.csv
    path = series.csv           ; ... or one file split at `split`
    collection = yahoo/*.csv    ; ... or a glob, one model per file
    split = 0.5                 ; fraction (float) or row index (int)
    values = v1, v2             ; optional value columns
    label = label
    contiguous = true           ; default: true for split data, else false
    impute = reject             ; or ffill

    [method:NAME]
    window = 64
    rank = 16                   ; omit for full-rank OLS
    lambda = 1e-6               ; omit for the relative default
    scaling = min-max           ; none | min-max | standard
    difference = 1
"""

from __future__ import annotations

import configparser
import glob
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from .detector import DetectorConfig, fit_detect
from .metrics import EvalResult, best_f1_sweep, parse_metric
from .solver import LinearModel
from .timeseries import PreprocessSpec, Schema, TimeSeries, load_series, train_test_split

DEFAULT_METRICS = ("F1", "B-F-5", "E-F-5")


class ConfigError(ValueError):
    """Invalid benchmark configuration (fatal)."""


@dataclass(frozen=True)
class DatasetEntry:
    name: str
    train: Optional[Path] = None
    test: Optional[Path] = None
    path: Optional[Path] = None
    collection: Optional[str] = None
    split: Optional[float] = None
    schema: Schema = field(default_factory=Schema)
    contiguous: bool = False
    impute: str = "reject"

    def files(self) -> list[Path]:
        if self.collection is not None:
            return sorted(Path(p) for p in glob.glob(self.collection))
        if self.path is not None:
            return [self.path]
        return [self.train, self.test]


@dataclass(frozen=True)
class MethodEntry:
    name: str
    config: DetectorConfig


@dataclass(frozen=True)
class BenchConfig:
    datasets: tuple[DatasetEntry, ...]
    methods: tuple[MethodEntry, ...]
    metrics: tuple[str, ...] = DEFAULT_METRICS
    output: Path = Path("results")
    workers: int = 1
    late_alarm_policy: str = "clear"

    def __post_init__(self):
        if not self.datasets:
            raise ConfigError("config needs at least one [dataset:...] section")
        if not self.methods:
            raise ConfigError("config needs at least one [method:...] section")
        for m in self.metrics:
            try:
                parse_metric(m)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None


def _split_value(text: str):
    text = text.strip()
    return int(text) if text.lstrip("-").isdigit() else float(text)


def _csv_list(text: Optional[str]) -> Optional[list[str]]:
    if text is None or not text.strip():
        return None
    return [t.strip() for t in text.split(",") if t.strip()]


def load_config(path) -> BenchConfig:
    """Parse and validate a benchmark config; raises :class:`ConfigError`."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    root = path.resolve().parent

    def rel(p: str) -> Path:
        q = Path(p.strip())
        return q if q.is_absolute() else root / q

    bench = cp["bench"] if cp.has_section("bench") else {}
    datasets, methods = [], []
    for sec in cp.sections():
        body = cp[sec]
        if sec.startswith("dataset:"):
            name = sec.split(":", 1)[1].strip()
            kw = {}
            if "collection" in body:
                kw["collection"] = str(rel(body["collection"]))
            elif "path" in body:
                kw["path"] = rel(body["path"])
            elif "train" in body and "test" in body:
                kw["train"], kw["test"] = rel(body["train"]), rel(body["test"])
            else:
                raise ConfigError(f"[{sec}] needs train+test, path, or collection")
            split_needed = "train" not in kw
            if split_needed:
                if "split" not in body:
                    raise ConfigError(f"[{sec}] needs split= for single-file data")
                try:
                    kw["split"] = _split_value(body["split"])
                except ValueError:
                    raise ConfigError(f"[{sec}] bad split {body['split']!r}") from None
            schema = Schema(values=_csv_list(body.get("values")), label=body.get("label", "label"))
            try:
                contiguous = cp.getboolean(sec, "contiguous", fallback=split_needed)
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {exc}") from None
            entry = DatasetEntry(name=name, schema=schema, contiguous=contiguous,
                                 impute=body.get("impute", "reject"), **kw)
            if entry.impute not in ("reject", "ffill"):
                raise ConfigError(f"[{sec}] impute must be reject or ffill")
            files = entry.files()
            if not files:
                raise ConfigError(f"[{sec}] collection matches no files: {entry.collection}")
            for f in files:
                if not Path(f).exists():
                    raise ConfigError(f"[{sec}] path not found: {f}")
            datasets.append(entry)
        elif sec.startswith("method:"):
            name = sec.split(":", 1)[1].strip()
            try:
                pre = PreprocessSpec(body.get("scaling", "none"), int(body.get("difference", "0")))
                rank = body.get("rank", "").strip()
                lam = body.get("lambda", "").strip()
                cfg = DetectorConfig(p=int(body["window"]), lam=float(lam) if lam else None,
                                     rank=int(rank) if rank else None, preprocess=pre)
            except KeyError:
                raise ConfigError(f"[{sec}] needs window=") from None
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {exc}") from None
            methods.append(MethodEntry(name, cfg))
        elif sec != "bench":
            raise ConfigError(f"unknown section [{sec}]")
    try:
        workers = int(bench.get("workers", "1"))
    except ValueError:
        raise ConfigError("workers must be an integer") from None
    policy = bench.get("late_alarm_policy", "clear").strip()
    if policy not in ("clear", "fp"):
        raise ConfigError("late_alarm_policy must be clear or fp")
    return BenchConfig(
        datasets=tuple(datasets),
        methods=tuple(methods),
        metrics=tuple(_csv_list(bench.get("metrics")) or DEFAULT_METRICS),
        output=rel(bench.get("output", "results")),
        workers=max(1, workers),
        late_alarm_policy=policy,
    )


def measure_efficiency(run: Callable[[], object]) -> tuple[float, int, object]:
    """Time ``run()`` (a fit+score) and size its model.

    ``run`` returns a :class:`LinearModel` or a tuple starting with one.
    Returns ``(wall seconds, serialized model bytes, run's return value)``.
    """
    t0 = time.perf_counter()
    out = run()
    seconds = time.perf_counter() - t0
    model = out[0] if isinstance(out, tuple) else out
    if not isinstance(model, LinearModel):
        raise TypeError("run must return a LinearModel or (LinearModel, ...)")
    return seconds, len(model.to_json().encode("utf-8")), out


@dataclass
class CellResult:
    dataset: str
    method: str
    metrics: dict[str, EvalResult] = field(default_factory=dict)
    seconds: float = math.nan
    model_bytes: int = 0
    n_series: int = 0
    error: Optional[str] = None


def _series_pairs(entry: DatasetEntry) -> list[tuple[TimeSeries, TimeSeries]]:
    if entry.train is not None:
        return [(load_series(entry.train, entry.schema, entry.impute),
                 load_series(entry.test, entry.schema, entry.impute))]
    return [train_test_split(load_series(f, entry.schema, entry.impute), entry.split) for f in entry.files()]


def _mean_result(results: Sequence[EvalResult]) -> EvalResult:
    if len(results) == 1:
        return results[0]
    r0 = results[0]
    return EvalResult(float(np.mean([r.precision for r in results])), float(np.mean([r.recall for r in results])),
                      float(np.mean([r.f1 for r in results])), math.nan, r0.metric, r0.k)


def run_cell(entry: DatasetEntry, method: MethodEntry, metrics: Sequence[str],
             late_alarm_policy: str = "clear") -> CellResult:
    """Fit/score/evaluate one (dataset, method); failures are captured in ``error``."""
    cell = CellResult(entry.name, method.name)
    try:
        pairs = _series_pairs(entry)
        cfg = method.config
        if cfg.contiguous != entry.contiguous:
            cfg = DetectorConfig(cfg.p, cfg.lam, cfg.rank, cfg.preprocess, entry.contiguous)
        per_metric: dict[str, list[EvalResult]] = {m: [] for m in metrics}
        secs, sizes = 0.0, []
        for train, test in pairs:
            if test.labels is None:
                raise ValueError(f"test series {test.name!r} has no labels")
            dt, nbytes, (_, scores) = measure_efficiency(lambda: fit_detect(train, test, cfg))
            secs += dt
            sizes.append(nbytes)
            for m in metrics:
                kind, k = parse_metric(m)
                per_metric[m].append(best_f1_sweep(scores, test.labels, kind, k, late_alarm_policy))
        cell.metrics = {m: _mean_result(v) for m, v in per_metric.items()}
        cell.seconds = secs
        cell.model_bytes = int(round(float(np.mean(sizes))))
        cell.n_series = len(pairs)
    except Exception as exc:  # recorded per cell; the run continues
        cell.error = f"{type(exc).__name__}: {exc}"
    return cell


def _run_cell_args(args):
    return run_cell(*args)


@dataclass
class BenchReport:
    """Per-(dataset, method) metric results plus timing and model size."""

    datasets: list[str]
    methods: list[str]
    metrics: list[str]
    cells: list[CellResult]

    def cell(self, dataset: str, method: str) -> CellResult:
        for c in self.cells:
            if c.dataset == dataset and c.method == method:
                return c
        raise KeyError((dataset, method))

    def value(self, dataset: str, method: str, metric: str) -> float:
        c = self.cell(dataset, method)
        if c.error or metric not in c.metrics:
            raise KeyError(f"missing cell ({dataset}, {method}, {metric})")
        return c.metrics[metric].f1

    @property
    def failures(self) -> list[CellResult]:
        return [c for c in self.cells if c.error]

    def to_dict(self, include_timing: bool = False) -> dict:
        cells = []
        for c in self.cells:
            d = {"dataset": c.dataset, "method": c.method, "n_series": c.n_series,
                 "model_bytes": c.model_bytes, "error": c.error,
                 "metrics": {m: r.to_dict() for m, r in c.metrics.items()}}
            if include_timing:
                d["seconds"] = c.seconds
            cells.append(d)
        ranks = {}
        for m in self.metrics:
            try:
                ranks[m] = dict(average_rank(self, m))
            except KeyError:
                ranks[m] = None
        return {"datasets": self.datasets, "methods": self.methods, "metrics": self.metrics,
                "cells": cells, "average_rank": ranks}

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=False)

    @classmethod
    def from_dict(cls, obj: dict) -> "BenchReport":
        cells = []
        for d in obj["cells"]:
            metrics = {m: EvalResult(r["precision"], r["recall"], r["f1"],
                                     math.inf if r["threshold"] is None else r["threshold"], r["metric"], r["k"])
                       for m, r in d["metrics"].items()}
            cells.append(CellResult(d["dataset"], d["method"], metrics, d.get("seconds", math.nan),
                                    d["model_bytes"], d["n_series"], d["error"]))
        return cls(list(obj["datasets"]), list(obj["methods"]), list(obj["metrics"]), cells)


def run_benchmark(config: BenchConfig) -> BenchReport:
    jobs = [(d, m, config.metrics, config.late_alarm_policy) for d in config.datasets for m in config.methods]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            cells = list(pool.map(_run_cell_args, jobs))
    else:
        cells = [run_cell(*j) for j in jobs]
    return BenchReport([d.name for d in config.datasets], [m.name for m in config.methods],
                       list(config.metrics), cells)


def average_rank(report: BenchReport, metric: str) -> list[tuple[str, float]]:
    """Mean per-dataset rank of each method (1 = best F1, ties share the average rank).

    Raises ``KeyError`` when any (dataset, method) value is missing.
    """
    per_method = {m: [] for m in report.methods}
    for ds in report.datasets:
        vals = np.array([report.value(ds, m, metric) for m in report.methods])
        for m, r in zip(report.methods, rankdata(-vals, method="average")):
            per_method[m].append(float(r))
    out = [(m, float(np.mean(r))) for m, r in per_method.items()]
    return sorted(out, key=lambda t: (t[1], report.methods.index(t[0])))


def write_outputs(report: BenchReport, out_dir) -> dict[str, Path]:
    """``report.json`` (deterministic: no wall times) and ``efficiency.csv``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {"report": out_dir / "report.json", "efficiency": out_dir / "efficiency.csv"}
    paths["report"].write_text(report.to_json() + "\n", encoding="utf-8")
    lines = ["dataset,method,seconds,model_bytes,n_series"]
    for c in report.cells:
        lines.append(f"{c.dataset},{c.method},{c.seconds:.6f},{c.model_bytes},{c.n_series}")
    paths["efficiency"].write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths
