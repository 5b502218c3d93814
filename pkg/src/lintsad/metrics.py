"""Point-adjusted, k-delay and event-level F1 with best-threshold sweeps.

Delay convention: an interval starting at ``s`` is detected within ``k``
steps when its first alarm sits at an offset ``0 .. k-1`` from ``s``.
Binarisation is ``score >= threshold``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .detector import ScoreSeries

LATE_ALARM_POLICIES = ("clear", "fp")


@dataclass(frozen=True)
class EventList:
    """Half-open ``[start, end)`` runs of ones, sorted and disjoint."""

    intervals: tuple[tuple[int, int], ...]
    length: int

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def to_labels(self) -> np.ndarray:
        out = np.zeros(self.length, dtype=np.int8)
        for s, e in self.intervals:
            out[s:e] = 1
        return out


@dataclass(frozen=True)
class EvalResult:
    precision: float
    recall: float
    f1: float
    threshold: float = math.nan
    metric: str = "F1"
    k: Optional[int] = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["threshold"] = None if not math.isfinite(self.threshold) else self.threshold
        return {key: d[key] for key in ("metric", "k", "precision", "recall", "f1", "threshold")}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _binary(x, what: str) -> np.ndarray:
    a = np.asarray(x)
    if a.ndim != 1:
        raise ValueError(f"{what} must be 1-D")
    if not np.all((a == 0) | (a == 1)):
        raise ValueError(f"{what} must be binary (0/1)")
    return a.astype(np.int8)


def _pair(preds, labels) -> tuple[np.ndarray, np.ndarray]:
    p, y = _binary(preds, "preds"), _binary(labels, "labels")
    if p.shape != y.shape:
        raise ValueError(f"length mismatch: preds {p.shape[0]}, labels {y.shape[0]}")
    return p, y


def prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """Precision, recall, F1 with every 0/0 taken as 0."""
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def events_from_labels(labels) -> EventList:
    y = _binary(labels, "labels")
    edges = np.diff(np.concatenate([[0], y, [0]]).astype(np.int8))
    starts = np.flatnonzero(edges == 1)
    ends = np.flatnonzero(edges == -1)
    return EventList(tuple(zip(starts.tolist(), ends.tolist())), len(y))


def _first_alarm(preds: np.ndarray, s: int, e: int) -> Optional[int]:
    hit = np.flatnonzero(preds[s:e])
    return int(hit[0]) if hit.size else None


def point_adjust(preds, labels, k: Optional[int] = None, late_alarm_policy: str = "clear") -> np.ndarray:
    """Credit whole label intervals that contain an alarm.

    With ``k`` only intervals whose first alarm has offset ``< k`` are
    credited; raw alarms in the other intervals are cleared (``"clear"``) or
    left in place (``"fp"``).
    """
    p, y = _pair(preds, labels)
    if k is not None and k < 1:
        raise ValueError("k must be a positive integer")
    if late_alarm_policy not in LATE_ALARM_POLICIES:
        raise ValueError(f"late_alarm_policy must be one of {LATE_ALARM_POLICIES}")
    out = p.copy()
    for s, e in events_from_labels(y):
        first = _first_alarm(p, s, e)
        if first is None:
            continue
        if k is None or first < k:
            out[s:e] = 1
        elif late_alarm_policy == "clear":
            out[s:e] = 0
    return out


def f1_point(preds, labels) -> EvalResult:
    p, y = _pair(preds, labels)
    tp = int(np.sum(p & y))
    fp = int(np.sum(p & (1 - y)))
    fn = int(np.sum((1 - p) & y))
    return EvalResult(*prf(tp, fp, fn), metric="point")


def event_f1_delay(preds, labels, k: Optional[int] = None) -> EvalResult:
    """Event-level F1; ``k=None`` drops the delay constraint.

    Recall counts label events detected within ``k`` steps; precision counts
    predicted runs overlapping at least one such detected event.
    """
    p, y = _pair(preds, labels)
    if k is not None and k < 1:
        raise ValueError("k must be a positive integer")
    truth = events_from_labels(y)
    detected = np.zeros(len(p), dtype=bool)
    n_det = 0
    for s, e in truth:
        first = _first_alarm(p, s, e)
        if first is not None and (k is None or first < k):
            detected[s:e] = True
            n_det += 1
    runs = events_from_labels(p)
    good = sum(1 for s, e in runs if detected[s:e].any())
    prec = good / len(runs) if len(runs) else 0.0
    rec = n_det / len(truth) if len(truth) else 0.0
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return EvalResult(prec, rec, f1, metric="E-F" if k is None else f"E-F-{k}", k=k)


_METRIC_RE = re.compile(r"^(F1|B-F|E-F)(?:-(\d+))?$")


def parse_metric(name: str) -> tuple[str, Optional[int]]:
    """``"B-F-5" -> ("B-F", 5)``; ``"F1" -> ("F1", None)``; ``"E-F" -> ("E-F", None)``."""
    m = _METRIC_RE.match(name.strip())
    if not m or (m.group(1) == "F1" and m.group(2)) or (m.group(1) == "B-F" and not m.group(2)):
        raise ValueError(f"unknown metric {name!r}; use F1, B-F-<k>, E-F-<k> or E-F")
    k = int(m.group(2)) if m.group(2) else None
    if k is not None and k < 1:
        raise ValueError("k must be a positive integer")
    return m.group(1), k


def metric_name(kind: str, k: Optional[int]) -> str:
    return kind if k is None else f"{kind}-{k}"


def _valid_region(scores, labels) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(scores, ScoreSeries):
        s, start = scores.scores, scores.valid_from
    else:
        s = np.asarray(scores, dtype=float)
        scored = np.flatnonzero(~np.isnan(s))
        start = int(scored[0]) if scored.size else len(s)
    y = _binary(labels, "labels")
    if len(y) != len(s):
        raise ValueError(f"length mismatch: scores {len(s)}, labels {len(y)}")
    s, y = s[start:], y[start:]
    if s.size == 0:
        raise ValueError("empty valid region")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite after the warm-up region")
    return s, y


def _detection_scores(s: np.ndarray, events: EventList, k: Optional[int]) -> np.ndarray:
    """Per event, the highest threshold at which it still counts as detected."""
    return np.array([s[a:(b if k is None else min(b, a + k))].max() for a, b in events])


def _pick(f1: np.ndarray, thresholds: np.ndarray) -> int:
    # thresholds ascending; ties -> lowest threshold; all-zero -> +inf (last)
    if f1.max() <= 0:
        return len(f1) - 1
    return int(np.flatnonzero(f1 == f1.max())[0])


def _sweep_point_adjusted(s, y, k, policy):
    u = np.unique(s)
    m = len(u)
    thresholds = np.append(u, np.inf)
    rank = np.searchsorted(u, s)  # s >= u[j]  <=>  rank >= j
    events = events_from_labels(y)
    n_pos = int(y.sum())

    def at_least(idx, weights=None):
        # c[j] = sum of weights over items with idx >= j, for j = 0..m
        c = np.bincount(idx, weights=weights, minlength=m + 1)[: m + 1]
        return np.cumsum(c[::-1])[::-1]

    fp = at_least(rank[y == 0]).astype(np.int64)
    if len(events):
        det = np.searchsorted(u, _detection_scores(s, events, k))
        lens = np.array([b - a for a, b in events])
        tp = at_least(det, lens.astype(float)).astype(np.int64)
        if policy == "fp" and k is not None:
            diff = np.zeros(m + 2, dtype=np.int64)
            for (a, b), dj in zip(events, det):
                r = rank[a:b]
                late = r[r > dj]
                np.add.at(diff, dj + 1, len(late))
                np.add.at(diff, late + 1, -1)
            fp = fp + np.cumsum(diff)[: m + 1]
    else:
        tp = np.zeros(m + 1, dtype=np.int64)
    fn = n_pos - tp
    with np.errstate(invalid="ignore", divide="ignore"):
        prec = np.where(tp + fp > 0, tp / np.maximum(tp + fp, 1), 0.0)
        rec = np.where(n_pos > 0, tp / max(n_pos, 1), 0.0)
        f1 = np.where(prec + rec > 0, 2 * prec * rec / np.where(prec + rec > 0, prec + rec, 1), 0.0)
    j = _pick(f1, thresholds)
    # recompute the winner with the scalar formula for bit-exact agreement
    P, R, F = prf(int(tp[j]), int(fp[j]), int(fn[j]))
    return P, R, F, float(thresholds[j]), f1, thresholds


def _sweep_events(s, y, k):
    """Descending threshold sweep; predicted runs tracked with union-find."""
    n = len(s)
    events = events_from_labels(y)
    n_true = len(events)
    det = _detection_scores(s, events, k) if n_true else np.empty(0)
    event_of = np.full(n, -1)
    for i, (a, b) in enumerate(events):
        event_of[a:b] = i
    is_det = np.zeros(n_true, dtype=bool)

    parent = np.arange(n)
    good = np.zeros(n, dtype=np.int64)
    active = np.zeros(n, dtype=bool)

    def find(i):
        root = i
        while parent[root] != root:
            root = parent[root]
        while parent[i] != root:
            parent[i], i = root, parent[i]
        return root

    runs = good_runs = n_det = 0
    u = np.unique(s)[::-1]
    order = np.argsort(-s, kind="stable")
    det_order = np.argsort(-det, kind="stable")
    pi = di = 0
    best = None  # (f1, threshold, P, R)
    results = []
    for theta in u:
        while pi < n and s[order[pi]] >= theta:
            i = int(order[pi])
            pi += 1
            active[i] = True
            runs += 1
            g = int(event_of[i] >= 0 and is_det[event_of[i]])
            good[i] = g
            good_runs += g
            for j in (i - 1, i + 1):
                if 0 <= j < n and active[j]:
                    ri, rj = find(i), find(j)
                    if ri != rj:
                        runs -= 1
                        good_runs -= good[ri] + good[rj]
                        parent[rj] = ri
                        good[ri] = good[ri] | good[rj]
                        good_runs += good[ri]
        while di < n_true and det[det_order[di]] >= theta:
            e = int(det_order[di])
            di += 1
            is_det[e] = True
            n_det += 1
            a, b = events.intervals[e]
            for i in range(a, b):
                if active[i]:
                    r = find(i)
                    if not good[r]:
                        good[r] = 1
                        good_runs += 1
        prec = int(good_runs) / runs if runs else 0.0
        rec = n_det / n_true if n_true else 0.0
        f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
        results.append(f1)
        if best is None or f1 >= best[0]:
            best = (f1, float(theta), prec, rec)
    thresholds = np.append(u[::-1], np.inf)
    f1s = np.append(np.array(results[::-1]), 0.0)
    if best is None or best[0] <= 0:
        return 0.0, 0.0, 0.0, math.inf, f1s, thresholds
    return best[2], best[3], best[0], best[1], f1s, thresholds


def best_f1_sweep(scores: Union[ScoreSeries, Sequence[float]], labels, kind: str = "F1",
                  k: Optional[int] = None, late_alarm_policy: str = "clear") -> EvalResult:
    """Maximise F1 over every distinct score value (and ``+inf``) as threshold.

    ``kind`` is ``"F1"`` (point-adjusted), ``"B-F"`` (point-adjusted with
    k-delay) or ``"E-F"`` (event level with k-delay); names like ``"B-F-5"``
    are accepted too. Unscored warm-up entries are dropped from scores and
    labels alike. Ties go to the lowest threshold; when every threshold gives
    F1 = 0 the result reports ``+inf`` (no alarms).
    """
    if k is None and kind not in ("F1", "B-F", "E-F"):
        kind, k = parse_metric(kind)
    if kind not in ("F1", "B-F", "E-F"):
        raise ValueError(f"unknown metric kind {kind!r}")
    if kind == "F1" and k is not None:
        raise ValueError("F1 takes no delay; use B-F")
    if kind == "B-F" and k is None:
        raise ValueError("B-F needs a delay k")
    if late_alarm_policy not in LATE_ALARM_POLICIES:
        raise ValueError(f"late_alarm_policy must be one of {LATE_ALARM_POLICIES}")
    s, y = _valid_region(scores, labels)
    if kind == "E-F":
        P, R, F, th, _, _ = _sweep_events(s, y, k)
    else:
        P, R, F, th, _, _ = _sweep_point_adjusted(s, y, k, late_alarm_policy)
    return EvalResult(P, R, F, th, metric_name(kind, k), k)


def threshold_curve(scores, labels, kind: str = "F1", k: Optional[int] = None,
                    late_alarm_policy: str = "clear") -> tuple[np.ndarray, np.ndarray]:
    """``(thresholds ascending incl. +inf, F1 at each)`` for plotting."""
    if k is None and kind not in ("F1", "B-F", "E-F"):
        kind, k = parse_metric(kind)
    s, y = _valid_region(scores, labels)
    if kind == "E-F":
        *_, f1, th = _sweep_events(s, y, k)
    else:
        *_, f1, th = _sweep_point_adjusted(s, y, k, late_alarm_policy)
    return th, f1
