import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lintsad.synthgen import (
    KINDS, POINT_KINDS, AnomalySpec, Sinusoid, SynthSpec, estimate_period, generate_base, inject_anomaly,
    local_window, make_dataset,
)
from lintsad.timeseries import DataError


def test_all_zero_base():
    ts = generate_base(SynthSpec(length=100, components=[Sinusoid(0.0, 10.0)], trend=0.0, noise=0.0))
    np.testing.assert_array_equal(ts.values, 0.0)
    np.testing.assert_array_equal(ts.labels, 0)


def test_amplitude_bound():
    spec = SynthSpec(length=500, components=[Sinusoid(2.5, 37.0, 0.3)], trend=0.01, noise=0.0)
    assert np.abs(generate_base(spec).values).max() <= 2.5 + 0.01 * 500


def test_determinism():
    spec = SynthSpec(length=300, channels=3, seed=11)
    assert generate_base(spec).values.tobytes() == generate_base(spec).values.tobytes()
    a = inject_anomaly(generate_base(spec), AnomalySpec("pattern-shape", 40, 20, 1.0), seed=5)
    b = inject_anomaly(generate_base(spec), AnomalySpec("pattern-shape", 40, 20, 1.0), seed=5)
    assert a.values.tobytes() == b.values.tobytes()


def spec_for(kind, start=100, magnitude=2.0):
    return AnomalySpec(kind, start, 2 if kind in POINT_KINDS else 25, magnitude)


@pytest.mark.parametrize("kind", KINDS)
def test_null_injection(kind):
    base = generate_base(SynthSpec(length=400, channels=2))
    out = inject_anomaly(base, spec_for(kind, magnitude=0.0))
    assert out.values.tobytes() == base.values.tobytes()
    s = spec_for(kind)
    np.testing.assert_array_equal(np.flatnonzero(out.labels), np.arange(s.start, s.stop))


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("seed", range(3))
def test_locality_and_labels(kind, seed):
    base = generate_base(SynthSpec(length=600, seed=seed, trend=0.002))
    s = spec_for(kind, start=200 + 17 * seed)
    out = inject_anomaly(base, s, seed=seed)
    np.testing.assert_array_equal(np.flatnonzero(out.labels), np.arange(s.start, s.stop))
    assert out.values[:s.start].tobytes() == base.values[:s.start].tobytes()
    inside = out.values[s.start:s.stop] - base.values[s.start:s.stop]
    assert np.abs(inside).max() > 0
    tail_out, tail_base = out.values[s.stop:], base.values[s.stop:]
    if kind == "pattern-trend":
        np.testing.assert_allclose(tail_out - tail_base, s.magnitude * s.duration, rtol=1e-12)
    else:
        assert tail_out.tobytes() == tail_base.tobytes()


def test_existing_labels_kept():
    base = generate_base(SynthSpec(length=200))
    once = inject_anomaly(base, AnomalySpec("point-global", 10, 1, 5.0))
    twice = inject_anomaly(once, AnomalySpec("point-global", 150, 2, 5.0))
    np.testing.assert_array_equal(np.flatnonzero(twice.labels), [10, 150, 151])


@pytest.mark.parametrize("seed", range(5))
def test_point_global_is_argmax(seed):
    base = generate_base(SynthSpec(length=1000, components=[Sinusoid(np.sqrt(2), 40.0)], noise=0.0, seed=seed))
    out = inject_anomaly(base, AnomalySpec("point-global", 333, 1, 10.0), seed=seed)
    assert np.argmax(np.abs(out.values[:, 0])) == 333
    assert not base.values.min() <= out.values[333, 0] <= base.values.max()


@pytest.mark.parametrize("seed", range(5))
def test_point_context_envelope(seed):
    spec = SynthSpec(length=1200, components=[Sinusoid(1.0, 40.0)], trend=0.01, noise=0.05, seed=seed)
    base = generate_base(spec)
    a = AnomalySpec("point-context", 500 + seed * 31, 1, 3.0)
    out = inject_anomaly(base, a, seed=seed, period=40.0)
    x = out.values[:, 0]
    v = x[a.start]
    assert base.values.min() <= v <= base.values.max()
    ctx = local_window(len(x), a.start, a.stop, 40.0)
    assert abs(v - x[ctx].mean()) > 3 * x[ctx].std()


def test_pattern_seasonal_changes_period():
    spec = SynthSpec(length=2000, components=[Sinusoid(1.0, 50.0)], noise=0.0)
    out = inject_anomaly(generate_base(spec), AnomalySpec("pattern-seasonal", 500, 400, 1.0))
    assert estimate_period(out.values[500:900, 0]) == pytest.approx(25.0, rel=0.05)


def test_estimate_period():
    spec = SynthSpec(length=1000, components=[Sinusoid(1.0, 50.0)], trend=0.05, noise=0.1)
    assert estimate_period(generate_base(spec).values[:, 0]) == pytest.approx(50.0, rel=0.02)


def test_validation():
    with pytest.raises(ValueError):
        SynthSpec(length=10)
    with pytest.raises(ValueError):
        SynthSpec(components=[Sinusoid(1.0, 1.0)])
    with pytest.raises(ValueError):
        SynthSpec(noise=-1.0)
    with pytest.raises(ValueError):
        AnomalySpec("point-global", 0, 4)
    with pytest.raises(ValueError):
        AnomalySpec("pattern-trend", 0, 9)
    with pytest.raises(ValueError):
        AnomalySpec("spike", 0)
    with pytest.raises(DataError, match="outside"):
        inject_anomaly(generate_base(SynthSpec(length=100)), AnomalySpec("point-global", 99, 2))


def test_make_dataset_shapes():
    train, test = make_dataset(SynthSpec(length=1000, seed=3), "pattern-trend", n_anomalies=3, magnitude=0.05)
    assert train.T == 500 and test.T == 500
    assert train.labels.sum() == 0
    lab = test.labels.astype(int)
    assert np.sum(np.diff(np.concatenate([[0], lab])) == 1) == 3


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(KINDS), st.integers(0, 10_000), st.floats(0.1, 5.0))
def test_injection_properties(kind, seed, mag):
    base = generate_base(SynthSpec(length=300, channels=2, seed=seed % 97))
    rng = np.random.default_rng(seed)
    dur = int(rng.integers(1, 4)) if kind in POINT_KINDS else int(rng.integers(10, 40))
    start = int(rng.integers(0, 300 - dur + 1))
    out = inject_anomaly(base, AnomalySpec(kind, start, dur, mag), seed=seed)
    assert int(out.labels.sum()) == dur
    assert out.values[:start].tobytes() == base.values[:start].tobytes()
    assert np.all(np.isfinite(out.values))
