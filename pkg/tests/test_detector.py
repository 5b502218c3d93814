import numpy as np
import pytest

from lintsad.detector import DetectorConfig, ScoreSeries, fit_detect, read_scores_csv, score, write_scores_csv
from lintsad.solver import LinearModel
from lintsad.timeseries import DataError, PreprocessSpec, TimeSeries
from oracles import score_loop


def test_persistence_model_example():
    m = LinearModel(np.array([[0.0], [1.0]]), p=1, d=1, lam=0.0, rank=1)
    s = score(TimeSeries([0.0, 0.0, 5.0, 0.0]), m)
    assert np.isnan(s.scores[0])
    np.testing.assert_array_equal(s.scores[1:], [0, 25, 25])
    assert s.valid_from == 1


def test_zero_model_scores_squared_norm(rng):
    v = rng.standard_normal((30, 3))
    m = LinearModel(np.zeros((1 + 3 * 2, 3)), p=2, d=3, lam=0.0, rank=3)
    s = score(TimeSeries(v), m)
    np.testing.assert_allclose(s.valid, (v[2:] ** 2).sum(axis=1), rtol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_scores_match_loop(seed):
    rng = np.random.default_rng(seed)
    d, p = int(rng.integers(1, 4)), int(rng.integers(1, 5))
    v = rng.standard_normal((40, d))
    W = rng.standard_normal((1 + d * p, d))
    fast = score(TimeSeries(v), LinearModel(W, p, d, 0.0, d)).scores
    slow = score_loop(v, W, p)
    np.testing.assert_array_equal(np.isnan(fast), np.isnan(slow))
    ok = ~np.isnan(slow)
    assert np.abs(fast[ok] - slow[ok]).max() <= 1e-12 * max(1.0, np.abs(slow[ok]).max())


def test_score_errors():
    m = LinearModel(np.zeros((3, 1)), 2, 1, 0.0, 1)
    with pytest.raises(DataError, match="exceed"):
        score(TimeSeries([1.0, 2.0]), m)
    with pytest.raises(DataError, match="channel"):
        score(TimeSeries(np.ones((5, 2))), m)


def sine(T, period=25, phase=0.0):
    t = np.arange(T)
    return np.sin(2 * np.pi * t / period + phase)


def test_spike_is_argmax():
    rng = np.random.default_rng(1)
    v = sine(600) + 0.01 * rng.standard_normal(600)
    train, test = TimeSeries(v[:400]), v[400:].copy()
    test[100] += 3.0
    _, s = fit_detect(train, TimeSeries(test), DetectorConfig(p=10))
    assert np.nanargmax(s.scores) == 100


def test_full_rank_equals_unrestricted(rng):
    v = rng.standard_normal((300, 3))
    cfg = dict(p=4, lam=1e-3)
    _, a = fit_detect(TimeSeries(v[:200]), TimeSeries(v[200:]), DetectorConfig(**cfg))
    _, b = fit_detect(TimeSeries(v[:200]), TimeSeries(v[200:]), DetectorConfig(**cfg, rank=3))
    np.testing.assert_allclose(a.scores, b.scores, rtol=1e-10, atol=1e-12)


def test_large_pipeline_runs():
    rng = np.random.default_rng(2)
    d = 25
    v = np.cumsum(rng.standard_normal((1500, d)), axis=0)
    cfg = DetectorConfig(p=64, rank=16, preprocess=PreprocessSpec("min-max", 1))
    model, s = fit_detect(TimeSeries(v[:1000]), TimeSeries(v[1000:]), cfg)
    assert model.rank == 16
    assert len(s) == 500 and s.valid_from == 65
    assert np.all(np.isfinite(s.valid)) and np.all(s.valid >= 0)


def test_offset_invariance_under_standard_scaling(rng):
    v = rng.standard_normal((400, 2)) + sine(400)[:, None]
    cfg = DetectorConfig(p=5, preprocess=PreprocessSpec("standard"))
    _, a = fit_detect(TimeSeries(v[:250]), TimeSeries(v[250:]), cfg)
    _, b = fit_detect(TimeSeries(v[:250] + 1000.0), TimeSeries(v[250:] + 1000.0), cfg)
    ok = ~np.isnan(a.scores)
    assert np.abs(a.scores[ok] - b.scores[ok]).max() <= 1e-9


def test_exact_recovery_noise_free():
    th = 0.3
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    v = np.empty((300, 2))
    v[0] = [1.0, 0.0]
    for t in range(1, 300):
        v[t] = R @ v[t - 1]
    model, s = fit_detect(TimeSeries(v[:200]), TimeSeries(v[200:]), DetectorConfig(p=1, lam=0.0))
    np.testing.assert_allclose(model.lag_coefficients(1), R.T, atol=1e-8)
    assert np.nanmax(s.scores) <= 1e-10


def test_alignment_and_context():
    v = sine(200)
    train, test = TimeSeries(v[:120]), TimeSeries(v[120:])
    spec = PreprocessSpec("none", 1)
    _, gap = fit_detect(train, test, DetectorConfig(p=3, preprocess=spec))
    assert len(gap) == test.T and gap.valid_from == 4
    assert np.isnan(gap.scores[:4]).all() and not np.isnan(gap.scores[4:]).any()
    _, cont = fit_detect(train, test, DetectorConfig(p=3, preprocess=spec, contiguous=True))
    assert len(cont) == test.T and cont.valid_from == 0
    # both views agree wherever both are defined
    np.testing.assert_allclose(cont.scores[4:], gap.scores[4:], rtol=1e-12, atol=1e-15)


def test_scores_csv_roundtrip(tmp_path):
    s = ScoreSeries([np.nan, np.nan, 0.1, 1 / 3, 2e-300], 2)
    labels = np.array([0, 0, 1, 0, 1])
    write_scores_csv(s, tmp_path / "s.csv", labels)
    back, lab = read_scores_csv(tmp_path / "s.csv")
    assert back.valid_from == 2
    assert back.valid.tobytes() == s.valid.tobytes()
    np.testing.assert_array_equal(lab, labels)


def test_config_validation():
    for bad in (dict(p=0), dict(p=2, rank=0), dict(p=2, lam=-1.0)):
        with pytest.raises(ValueError):
            DetectorConfig(**bad)
    with pytest.raises(ValueError, match="exceeds"):
        fit_detect(TimeSeries(np.ones((50, 2))), TimeSeries(np.ones((20, 2))), DetectorConfig(p=2, rank=3))
