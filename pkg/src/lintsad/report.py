"""Markdown/CSV tables in the dataset-triplet layout, plus figures."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

from .bench import BenchReport, average_rank
from . import plotting


def load_report(path) -> BenchReport:
    """Read ``report.json``; wall times are merged from a sibling ``efficiency.csv``."""
    path = Path(path)
    report = BenchReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
    eff = path.parent / "efficiency.csv"
    if eff.exists():
        with eff.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                try:
                    report.cell(row["dataset"], row["method"]).seconds = float(row["seconds"])
                except KeyError:
                    pass
    return report


def _ranks(report: BenchReport) -> dict[str, dict[str, float]]:
    out = {}
    for m in report.metrics:
        try:
            out[m] = dict(average_rank(report, m))
        except KeyError:
            out[m] = {}
    return out


def _cell_text(report: BenchReport, ds: str, method: str, metric: str) -> str:
    c = report.cell(ds, method)
    if c.error or metric not in c.metrics:
        return "-"
    return f"{c.metrics[metric].f1:.4f}"


def table_rows(report: BenchReport) -> tuple[list[str], list[list[str]]]:
    header = ["Method"] + [f"{d} {m}" for d in report.datasets for m in report.metrics] \
        + [f"Avg rank {m}" for m in report.metrics]
    ranks = _ranks(report)
    rows = []
    for method in report.methods:
        row = [method] + [_cell_text(report, d, method, m) for d in report.datasets for m in report.metrics]
        row += [f"{ranks[m][method]:.2f}" if method in ranks[m] else "-" for m in report.metrics]
        rows.append(row)
    return header, rows


def render_markdown(report: BenchReport) -> str:
    header, rows = table_rows(report)
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    fails = report.failures
    if fails:
        lines += ["", "Failed cells:", ""]
        lines += [f"- {c.dataset} / {c.method}: {c.error}" for c in fails]
    eff = ["", "| Method | Dataset | Seconds | Model bytes |", "|---|---|---|---|"]
    for c in report.cells:
        secs = "-" if math.isnan(c.seconds) else f"{c.seconds:.4f}"
        eff.append(f"| {c.method} | {c.dataset} | {secs} | {c.model_bytes} |")
    return "\n".join(lines + eff) + "\n"


def render_csv(report: BenchReport) -> str:
    header, rows = table_rows(report)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def write_report(report: BenchReport, out_dir, formats=("md", "csv"), figures: bool = True,
                 figure_format: str = "svg") -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "md" in formats:
        p = out_dir / "table.md"
        p.write_text(render_markdown(report), encoding="utf-8")
        written.append(p)
    if "csv" in formats:
        p = out_dir / "table.csv"
        p.write_text(render_csv(report), encoding="utf-8")
        written.append(p)
    if figures and any(not c.error for c in report.cells):
        written.append(plotting.plot_metric_bars(report, out_dir / f"metrics.{figure_format}"))
        written.append(plotting.plot_efficiency(report, out_dir / f"efficiency.{figure_format}"))
    return written
