"""Labeled synthetic series: seasonal base signal plus five anomaly kinds."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .timeseries import DataError, TimeSeries

POINT_KINDS = ("point-global", "point-context")
PATTERN_KINDS = ("pattern-shape", "pattern-seasonal", "pattern-trend")
KINDS = POINT_KINDS + PATTERN_KINDS


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float
    period: float
    phase: float = 0.0


@dataclass(frozen=True)
class SynthSpec:
    """Base signal recipe: sum of sinusoids + linear trend + Gaussian noise.

    Channel ``c`` of a multichannel series has every phase advanced by
    ``c * channel_phase_step``.
    """

    length: int = 2000
    channels: int = 1
    components: Sequence[Sinusoid] = field(default_factory=lambda: (Sinusoid(1.0, 50.0),))
    trend: float = 0.0
    noise: float = 0.1
    seed: int = 0
    channel_phase_step: float = 0.5

    def __post_init__(self):
        if self.length < 64:
            raise ValueError("length must be >= 64")
        if self.channels < 1:
            raise ValueError("channels must be >= 1")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        if any(c.period <= 1 for c in self.components):
            raise ValueError("sinusoid periods must be > 1")
        object.__setattr__(self, "components", tuple(self.components))

    @property
    def dominant_period(self) -> float:
        if not self.components:
            return float(self.length)
        return max(self.components, key=lambda c: abs(c.amplitude)).period


@dataclass(frozen=True)
class AnomalySpec:
    kind: str
    start: int
    duration: int = 1
    magnitude: float = 1.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown anomaly kind {self.kind!r}")
        if self.start < 0 or self.duration < 1:
            raise ValueError("start must be >= 0 and duration >= 1")
        if self.kind in POINT_KINDS and self.duration > 3:
            raise ValueError("point anomalies last at most 3 steps")
        if self.kind in PATTERN_KINDS and self.duration < 10:
            raise ValueError("pattern anomalies last at least 10 steps")

    @property
    def stop(self) -> int:
        return self.start + self.duration


def generate_base(spec: SynthSpec) -> TimeSeries:
    rng = np.random.default_rng(spec.seed)
    t = np.arange(spec.length, dtype=float)
    values = np.zeros((spec.length, spec.channels))
    for c in range(spec.channels):
        shift = c * spec.channel_phase_step
        for comp in spec.components:
            values[:, c] += comp.amplitude * np.sin(2 * np.pi * t / comp.period + comp.phase + shift)
    values += spec.trend * t[:, None]
    if spec.noise > 0:
        values += spec.noise * rng.standard_normal(values.shape)
    return TimeSeries(values, np.zeros(spec.length, dtype=np.int8), f"synth-{spec.seed}")


def local_window(T: int, start: int, stop: int, period: float) -> np.ndarray:
    """Indices of the context window (4 periods wide, centred on the anomaly), anomaly excluded."""
    half = int(round(2 * period))
    lo, hi = max(0, start - half), min(T, stop + half)
    idx = np.arange(lo, hi)
    return idx[(idx < start) | (idx >= stop)]


def estimate_period(x: np.ndarray) -> float:
    """Dominant period of ``x`` from the peak of its detrended periodogram."""
    x = np.asarray(x, dtype=float)
    t = np.arange(len(x), dtype=float)
    resid = x - np.polyval(np.polyfit(t, x, 1), t)
    power = np.abs(np.fft.rfft(resid)) ** 2
    power[0] = 0.0
    k = int(np.argmax(power))
    return len(x) / k if k > 0 else float(len(x))


def _point_global(x, a, m, rng):
    sign = rng.choice((-1.0, 1.0))
    x[a.start:a.stop] += sign * m * x.std()


def _point_context(x, a, m, rng, period):
    ctx = local_window(len(x), a.start, a.stop, period)
    mu, sd = x[ctx].mean(), x[ctx].std()
    lo, hi = x.min(), x.max()
    for i in range(a.start, a.stop):
        pref = 1.0 if x[i] >= mu else -1.0
        for sign in (pref, -pref):
            v = x[i] + sign * m * sd
            if lo <= v <= hi:
                x[i] = v
                break
        else:
            x[i] = np.clip(x[i] + pref * m * sd, lo, hi)


def _pattern_shape(x, a, m, rng):
    seg = x[a.start:a.stop].copy()
    if rng.random() < 0.5:
        w = min(m, 1.0)
        x[a.start:a.stop] = seg + w * (seg[::-1] - seg)
    else:
        u = np.linspace(0.0, 1.0, a.duration)
        mu = seg.mean()
        x[a.start:a.stop] = mu + (seg - mu) * (1.0 + m * np.sin(np.pi * u))


def _pattern_seasonal(x, a, m, rng):
    # resample detrended signal at (1+m)x speed, restore trend at original positions
    t = np.arange(len(x), dtype=float)
    slope, icpt = np.polyfit(t, x, 1)
    base = x - (slope * t + icpt)
    pos = a.start + np.arange(a.duration) * (1.0 + m)
    span = len(x) - 1
    pos = np.abs((pos + span) % (2 * span) - span)  # reflect at the ends
    x[a.start:a.stop] = np.interp(pos, t, base) + slope * t[a.start:a.stop] + icpt


def _pattern_trend(x, a, m, rng):
    x[a.start:a.stop] += m * np.arange(1, a.duration + 1)
    x[a.stop:] += m * a.duration


def inject_anomaly(ts: TimeSeries, spec: AnomalySpec, seed: int = 0, period: Optional[float] = None,
                   channels: Optional[Sequence[int]] = None) -> TimeSeries:
    """Return a copy of ``ts`` with one anomaly injected and labelled.

    ``period`` sets the context window for point-context anomalies (estimated
    from the first channel's periodogram when omitted). The anomaly is
    applied to each of ``channels`` (all by default); ``magnitude=0`` leaves
    values untouched. Pattern-seasonal plays the segment back ``1 + magnitude``
    times faster, dividing its period by that factor.
    """
    if spec.stop > ts.T:
        raise DataError(f"anomaly window [{spec.start}, {spec.stop}) outside series of length {ts.T}")
    rng = np.random.default_rng(seed)
    values = np.array(ts.values)
    m = float(spec.magnitude)
    if m != 0:
        for c in (range(ts.d) if channels is None else channels):
            x = values[:, c].copy()
            if spec.kind == "point-global":
                _point_global(x, spec, m, rng)
            elif spec.kind == "point-context":
                _point_context(x, spec, m, rng, period or estimate_period(ts.values[:, 0]))
            elif spec.kind == "pattern-shape":
                _pattern_shape(x, spec, m, rng)
            elif spec.kind == "pattern-seasonal":
                _pattern_seasonal(x, spec, m, rng)
            else:
                _pattern_trend(x, spec, m, rng)
            values[:, c] = x
    labels = np.zeros(ts.T, dtype=np.int8) if ts.labels is None else np.array(ts.labels)
    labels[spec.start:spec.stop] = 1
    return TimeSeries(values, labels, ts.name)


def make_dataset(spec: SynthSpec, kind: str, n_anomalies: int = 5, magnitude: float = 8.0,
                 duration: Optional[int] = None, train_fraction: float = 0.5,
                 seed: Optional[int] = None) -> tuple[TimeSeries, TimeSeries]:
    """Clean train prefix and a test suffix with ``n_anomalies`` evenly spread injections.

    The two halves come from one base signal, so they are contiguous.
    """
    seed = spec.seed if seed is None else seed
    base = generate_base(spec)
    cut = int(spec.length * train_fraction)
    train = base.slice(0, cut)
    test = base.slice(cut, spec.length)
    if duration is None:
        duration = 1 if kind in POINT_KINDS else max(10, int(spec.dominant_period))
    n_test = test.T
    slot = n_test // max(n_anomalies, 1)
    if slot < duration + 2:
        raise ValueError("too many anomalies for the test length")
    rng = np.random.default_rng(seed + 7919)
    for j in range(n_anomalies):
        lo = j * slot + 1
        start = int(rng.integers(lo, lo + slot - duration - 1))
        test = inject_anomaly(test, AnomalySpec(kind, start, duration, magnitude), seed=seed * 1000 + j,
                              period=spec.dominant_period)
    return train, test
