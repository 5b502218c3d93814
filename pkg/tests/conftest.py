import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_lag_problem(rng, T=None, d=None, p=None):
    from lintsad.lagmatrix import build_lag_dataset
    from lintsad.timeseries import TimeSeries

    T = T or int(rng.integers(50, 501))
    d = d or int(rng.integers(1, 6))
    p = p or int(rng.integers(1, 17))
    return build_lag_dataset(TimeSeries(rng.standard_normal((T, d))), p)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = [mod.RESULTS[n] for n in sorted(mod.RESULTS)] if mod else []
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
