import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lintsad.lagmatrix import build_lag_dataset
from lintsad.timeseries import DataError, TimeSeries
from oracles import lag_rows_loop


def test_univariate_example():
    ds = build_lag_dataset(TimeSeries([1.0, 2.0, 3.0, 4.0]), 2)
    np.testing.assert_array_equal(ds.X, [[1, 2, 1], [1, 3, 2]])
    np.testing.assert_array_equal(ds.Y, [[3], [4]])
    assert ds.t0 == 2


def test_bivariate_example():
    ds = build_lag_dataset(TimeSeries([[1, 10], [2, 20], [3, 30]]), 1)
    np.testing.assert_array_equal(ds.X, [[1, 1, 10], [1, 2, 20]])
    np.testing.assert_array_equal(ds.Y, [[2, 20], [3, 30]])


def test_shape_example():
    ds = build_lag_dataset(TimeSeries(np.zeros((5, 3))), 2)
    assert ds.X.shape == (3, 7) and ds.Y.shape == (3, 3)


def test_too_short():
    with pytest.raises(DataError):
        build_lag_dataset(TimeSeries([1.0, 2.0]), 2)
    with pytest.raises(ValueError):
        build_lag_dataset(TimeSeries([1.0, 2.0]), 0)


@given(st.integers(1, 6), st.integers(1, 4), st.integers(1, 30), st.integers(0, 2**31))
def test_shape_law_and_reconstruction(p, d, extra, seed):
    T = p + extra
    v = np.random.default_rng(seed).standard_normal((T, d))
    ds = build_lag_dataset(TimeSeries(v), p)
    assert ds.X.shape == (T - p, 1 + d * p)
    assert np.all(ds.X[:, 0] == 1)
    X, Y = lag_rows_loop(v, p)
    np.testing.assert_array_equal(ds.X, X)
    np.testing.assert_array_equal(ds.Y, Y)
    for i in range(T - p):
        np.testing.assert_array_equal(ds.Y[i], v[ds.t0 + i])


def test_shift_consistency(rng):
    v = rng.standard_normal((40, 2))
    a = build_lag_dataset(TimeSeries(v[:-1]), 3)
    b = build_lag_dataset(TimeSeries(v[1:]), 3)
    # dropping the first sample shifts every window by one row
    np.testing.assert_array_equal(a.X[1:], b.X[:-1])
    np.testing.assert_array_equal(a.Y[1:], b.Y[:-1])
