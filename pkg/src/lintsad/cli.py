"""Command line entry point: synth, fit, score, eval, bench, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, plotting, report
from .detector import DetectorConfig, ScoreSeries, fit_model, read_scores_csv, score, write_scores_csv
from .metrics import best_f1_sweep, parse_metric
from .solver import LinearModel
from .synthgen import KINDS, Sinusoid, SynthSpec, make_dataset
from .timeseries import (DataError, PreprocessSpec, Schema, TimeSeries, fit_scaler, load_series, transform,
                         write_csv)

log = logging.getLogger("lintsad")

EXIT_OK, EXIT_FATAL, EXIT_PARTIAL = 0, 1, 2


def _schema(args) -> Schema:
    values = [c.strip() for c in args.values.split(",")] if args.values else None
    return Schema(values=values, label=args.label)


def _add_io(p):
    p.add_argument("--values", help="comma-separated value columns (default: all but the label)")
    p.add_argument("--label", default="label", help="label column name (default: label)")
    p.add_argument("--impute", choices=("reject", "ffill"), default="reject")


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for seed in args.seeds:
        spec = SynthSpec(length=args.length, channels=args.channels,
                         components=(Sinusoid(args.amplitude, args.period),), trend=args.trend,
                         noise=args.noise, seed=seed)
        train, test = make_dataset(spec, args.kind, n_anomalies=args.n_anomalies, magnitude=args.magnitude,
                                   duration=args.duration, train_fraction=args.train_fraction)
        stem = f"{args.kind}-{seed}"
        write_csv(train, out / f"{stem}_train.csv")
        write_csv(test, out / f"{stem}_test.csv")
        print(out / f"{stem}_train.csv")
        print(out / f"{stem}_test.csv")
    return EXIT_OK


def cmd_fit(args) -> int:
    train = load_series(args.train, _schema(args), args.impute)
    pre = PreprocessSpec(args.scaling, args.difference)
    cfg = DetectorConfig(args.window, args.lam, args.rank, pre)
    shift, scale = fit_scaler(train, pre)
    model = fit_model(transform(train, pre, shift, scale), cfg)
    tail = train.values[max(0, train.T - cfg.p - pre.difference_order):]
    extra = {"preprocess": {"scaling": pre.scaling, "difference_order": pre.difference_order,
                            "shift": shift.tolist(), "scale": scale.tolist(), "train_tail": tail.tolist()}}
    Path(args.out).write_text(model.to_json(**extra) + "\n", encoding="utf-8")
    print(f"wrote {args.out}: p={model.p} d={model.d} rank={model.rank} lambda={model.lam:.3g}")
    return EXIT_OK


def cmd_score(args) -> int:
    obj = json.loads(Path(args.model).read_text(encoding="utf-8"))
    model = LinearModel.from_dict(obj)
    pp = obj.get("preprocess", {"scaling": "none", "difference_order": 0,
                                "shift": [0.0] * model.d, "scale": [1.0] * model.d, "train_tail": []})
    pre = PreprocessSpec(pp["scaling"], int(pp["difference_order"]))
    shift, scale = np.array(pp["shift"]), np.array(pp["scale"])
    ts = load_series(args.input, _schema(args), args.impute)
    k = pre.difference_order
    if args.contiguous:
        tail = np.array(pp["train_tail"], dtype=float).reshape(-1, model.d)
        if len(tail) < model.p + k:
            raise DataError("model file carries too little train context for --contiguous")
        joined = TimeSeries(np.vstack([tail[len(tail) - model.p - k:], ts.values]))
        s = score(transform(joined, pre, shift, scale), model)
        scores = ScoreSeries(s.scores[model.p:], 0)
    else:
        s = score(transform(ts, pre, shift, scale), model)
        scores = ScoreSeries(np.concatenate([np.full(k, np.nan), s.scores]), s.valid_from + k)
    write_scores_csv(scores, args.out, ts.labels)
    if args.plot:
        plotting.plot_scores(ts.values, scores.scores, args.plot, ts.labels, title=ts.name)
    print(f"wrote {args.out}" + (f" and {args.plot}" if args.plot else ""))
    return EXIT_OK


def cmd_eval(args) -> int:
    scores, labels = read_scores_csv(args.scores)
    if args.labels:
        labels = load_series(args.labels, Schema(label=args.label_column)).labels
    if labels is None:
        raise DataError("no labels: the scores file has no label column and --labels was not given")
    results = []
    for name in args.metrics:
        kind, k = parse_metric(name)
        r = best_f1_sweep(scores, labels, kind, k, args.late_alarm_policy)
        results.append(r.to_dict())
        print(r.to_json())
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_bench(args) -> int:
    try:
        cfg = bench.load_config(args.config)
    except bench.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    if args.workers:
        cfg = bench.BenchConfig(cfg.datasets, cfg.methods, cfg.metrics, cfg.output, args.workers,
                                cfg.late_alarm_policy)
    out = Path(args.out) if args.out else cfg.output
    rep = bench.run_benchmark(cfg)
    paths = bench.write_outputs(rep, out)
    print(report.render_markdown(rep), end="")
    if not args.no_report:
        report.write_report(rep, out, figures=not args.no_figures)
    print(f"wrote {paths['report']}")
    for c in rep.failures:
        print(f"failed: {c.dataset} / {c.method}: {c.error}", file=sys.stderr)
    return EXIT_PARTIAL if rep.failures else EXIT_OK


def cmd_report(args) -> int:
    rep = report.load_report(args.report)
    out = Path(args.out) if args.out else Path(args.report).parent
    written = report.write_report(rep, out, formats=args.format, figures=not args.no_figures,
                                  figure_format=args.figure_format)
    for p in written:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lintsad", description="Closed-form linear autoregressive anomaly detection.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write labeled synthetic train/test CSVs")
    p.add_argument("--out", required=True)
    p.add_argument("--kind", choices=KINDS, default="point-global")
    p.add_argument("--seeds", type=int, nargs="+", default=[0])
    p.add_argument("--length", type=int, default=4000)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--period", type=float, default=50.0)
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--trend", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--n-anomalies", type=int, default=5)
    p.add_argument("--magnitude", type=float, default=8.0)
    p.add_argument("--duration", type=int)
    p.add_argument("--train-fraction", type=float, default=0.5)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("fit", help="fit OLS/ridge or RRR on a train series")
    p.add_argument("train")
    p.add_argument("--out", required=True, help="model JSON path")
    p.add_argument("--window", "-p", type=int, required=True)
    p.add_argument("--rank", type=int)
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--scaling", choices=("none", "min-max", "standard"), default="none")
    p.add_argument("--difference", type=int, default=0)
    _add_io(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("score", help="score a series with a fitted model")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--out", required=True, help="scores CSV (index,score[,label])")
    p.add_argument("--plot", help="also render a score trace (.svg/.png/.pdf)")
    p.add_argument("--contiguous", action="store_true",
                   help="input directly follows the train series; score from its first point")
    _add_io(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("eval", help="best-threshold F1 metrics for a scores CSV")
    p.add_argument("scores")
    p.add_argument("--metrics", nargs="+", default=list(bench.DEFAULT_METRICS))
    p.add_argument("--labels", help="series file supplying labels")
    p.add_argument("--label-column", default="label")
    p.add_argument("--late-alarm-policy", choices=("clear", "fp"), default="clear")
    p.add_argument("--out", help="write results as a JSON list")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="run a benchmark config")
    p.add_argument("config")
    p.add_argument("--out", help="override the config's output directory")
    p.add_argument("--workers", type=int)
    p.add_argument("--no-report", action="store_true", help="skip table/figure rendering")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="render tables and figures from report.json")
    p.add_argument("report")
    p.add_argument("--out")
    p.add_argument("--format", nargs="+", choices=("md", "csv"), default=["md", "csv"])
    p.add_argument("--figure-format", choices=("svg", "png", "pdf"), default="svg")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (DataError, ValueError, np.linalg.LinAlgError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
