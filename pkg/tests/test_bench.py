import json
import math

import numpy as np
import pytest

from lintsad.bench import (
    BenchReport, CellResult, ConfigError, average_rank, load_config, measure_efficiency, run_benchmark, run_cell,
    write_outputs,
)
from lintsad.detector import DetectorConfig, fit_detect
from lintsad.metrics import EvalResult
from lintsad.synthgen import Sinusoid, SynthSpec, make_dataset
from lintsad.timeseries import TimeSeries, concat, write_csv


def make_data(tmp_path, name, seed, channels=1):
    spec = SynthSpec(length=1200, channels=channels, components=[Sinusoid(1.0, 40.0)], noise=0.05, seed=seed)
    train, test = make_dataset(spec, "point-global", n_anomalies=4, magnitude=6.0)
    write_csv(train, tmp_path / f"{name}_train.csv")
    write_csv(test, tmp_path / f"{name}_test.csv")
    write_csv(concat(train, test), tmp_path / f"{name}_full.csv")


def write_config(tmp_path, body, name="bench.ini"):
    p = tmp_path / name
    p.write_text(body)
    return p


BASIC = """
[bench]
output = out
metrics = F1, B-F-5, E-F-5

[dataset:alpha]
train = alpha_train.csv
test = alpha_test.csv

[method:ols]
window = 8
"""


def test_one_dataset_one_method(tmp_path):
    make_data(tmp_path, "alpha", 0)
    cfg = load_config(write_config(tmp_path, BASIC))
    assert cfg.output == tmp_path / "out"
    report = run_benchmark(cfg)
    assert not report.failures
    cell = report.cell("alpha", "ols")
    assert list(cell.metrics) == ["F1", "B-F-5", "E-F-5"]
    assert cell.n_series == 1 and cell.seconds > 0
    assert average_rank(report, "F1") == [("ols", 1.0)]


def test_full_rank_rrr_matches_ols(tmp_path):
    make_data(tmp_path, "a", 1, channels=2)
    make_data(tmp_path, "b", 2, channels=2)
    cfg = load_config(write_config(tmp_path, """
[dataset:a]
path = a_full.csv
split = 600
[dataset:b]
train = b_train.csv
test = b_test.csv
[method:ols]
window = 6
scaling = standard
[method:rrr]
window = 6
rank = 2
scaling = standard
"""))
    assert cfg.datasets[0].contiguous and not cfg.datasets[1].contiguous
    report = run_benchmark(cfg)
    assert not report.failures
    for ds in ("a", "b"):
        for m in cfg.metrics:
            assert abs(report.value(ds, "ols", m) - report.value(ds, "rrr", m)) <= 1e-9


def test_report_is_byte_identical(tmp_path):
    make_data(tmp_path, "alpha", 3)
    cfg = load_config(write_config(tmp_path, BASIC + "\n[method:rrr]\nwindow = 8\nrank = 1\n"))
    a = write_outputs(run_benchmark(cfg), tmp_path / "r1")["report"].read_bytes()
    b = write_outputs(run_benchmark(cfg), tmp_path / "r2")["report"].read_bytes()
    assert a == b
    eff = (tmp_path / "r1" / "efficiency.csv").read_text().splitlines()
    assert eff[0] == "dataset,method,seconds,model_bytes,n_series" and len(eff) == 3


def test_parallel_matches_serial(tmp_path):
    make_data(tmp_path, "alpha", 4)
    body = BASIC + "\n[method:small]\nwindow = 3\n"
    serial = run_benchmark(load_config(write_config(tmp_path, body)))
    par = run_benchmark(load_config(write_config(tmp_path, body.replace("[bench]", "[bench]\nworkers = 2"))))
    assert serial.to_json() == par.to_json()


def test_collection_averages_series(tmp_path):
    (tmp_path / "coll").mkdir()
    for i in range(3):
        make_data(tmp_path / "coll", f"s{i}", 10 + i)
    cfg = load_config(write_config(tmp_path, """
[dataset:c]
collection = coll/*_full.csv
split = 0.5
[method:ols]
window = 5
"""))
    report = run_benchmark(cfg)
    cell = report.cell("c", "ols")
    assert cell.error is None and cell.n_series == 3
    assert math.isnan(cell.metrics["F1"].threshold)


def test_unreadable_dataset_is_recorded(tmp_path):
    make_data(tmp_path, "alpha", 5)
    (tmp_path / "bad_train.csv").write_text("v,label\n1,0\n2,0\n")
    (tmp_path / "bad_test.csv").write_text("v,label\n1,0\nx,0\n")
    cfg = load_config(write_config(tmp_path, BASIC + "\n[dataset:bad]\ntrain = bad_train.csv\ntest = bad_test.csv\n"))
    report = run_benchmark(cfg)
    assert [c.dataset for c in report.failures] == ["bad"]
    assert "non-numeric" in report.cell("bad", "ols").error
    assert report.cell("alpha", "ols").error is None
    assert report.to_dict()["average_rank"]["F1"] is None


@pytest.mark.parametrize("body, msg", [
    ("[method:x]\nwindow = 4\n", "dataset"),
    ("[dataset:a]\ntrain = alpha_train.csv\ntest = alpha_test.csv\n", "method"),
    ("[dataset:a]\npath = alpha_full.csv\n[method:x]\nwindow = 4\n", "split"),
    ("[dataset:a]\ntrain = nope.csv\ntest = alpha_test.csv\n[method:x]\nwindow = 4\n", "not found"),
    ("[dataset:a]\ntrain = alpha_train.csv\ntest = alpha_test.csv\n[method:x]\nrank = 1\n", "window"),
    ("[dataset:a]\ntrain = alpha_train.csv\ntest = alpha_test.csv\n[method:x]\nwindow = 0\n", "p must"),
    ("[bench]\nmetrics = F2\n[dataset:a]\ntrain = alpha_train.csv\ntest = alpha_test.csv\n[method:x]\nwindow = 4\n",
     "unknown metric"),
    ("[oops]\n", "unknown section"),
    ("not an ini", "cannot parse"),
])
def test_config_errors(tmp_path, body, msg):
    make_data(tmp_path, "alpha", 0)
    with pytest.raises(ConfigError, match=msg):
        load_config(write_config(tmp_path, body))


def test_missing_config(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "none.ini")


def fake_report(table):
    """``table[dataset][method] = f1``."""
    datasets = list(table)
    methods = list(next(iter(table.values())))
    cells = [CellResult(ds, m, {"F1": EvalResult(0.0, 0.0, f, 0.5, "F1")}) for ds in datasets
             for m, f in table[ds].items()]
    return BenchReport(datasets, methods, ["F1"], cells)


def test_average_rank_examples():
    assert average_rank(fake_report({"d": {"only": 0.3}}), "F1") == [("only", 1.0)]
    two = fake_report({"d1": {"A": 0.9, "B": 0.5}, "d2": {"A": 0.8, "B": 0.7}})
    assert average_rank(two, "F1") == [("A", 1.0), ("B", 2.0)]
    tie = dict(average_rank(fake_report({"d": {"A": 0.9, "B": 0.9, "C": 0.1}}), "F1"))
    assert tie == {"A": 1.5, "B": 1.5, "C": 3.0}


def test_average_rank_missing_cell():
    r = fake_report({"d": {"A": 0.9, "B": 0.5}})
    r.cells[1].error = "boom"
    with pytest.raises(KeyError):
        average_rank(r, "F1")


def test_rank_sum_and_monotone_invariance():
    rng = np.random.default_rng(0)
    table = {f"d{i}": {f"m{j}": float(np.round(rng.random(), 1)) for j in range(5)} for i in range(6)}
    ranks = dict(average_rank(fake_report(table), "F1"))
    assert sum(ranks.values()) * 6 == pytest.approx(6 * 5 * 6 / 2)
    assert all(1 <= v <= 5 for v in ranks.values())
    squashed = {d: {m: math.atan(5 * v) for m, v in row.items()} for d, row in table.items()}
    assert dict(average_rank(fake_report(squashed), "F1")) == ranks


def test_report_json_roundtrip():
    r = fake_report({"d1": {"A": 0.9, "B": 0.5}})
    back = BenchReport.from_dict(json.loads(r.to_json()))
    assert back.to_json() == r.to_json()


def test_efficiency_measurement():
    rng = np.random.default_rng(1)
    v = rng.standard_normal((2000, 1))
    secs, nbytes, _ = measure_efficiency(lambda: fit_detect(TimeSeries(v[:1500]), TimeSeries(v[1500:]),
                                                            DetectorConfig(p=128)))
    assert secs > 0
    assert 1_000 <= nbytes <= 10_000
    with pytest.raises(TypeError):
        measure_efficiency(lambda: 3)


def test_run_cell_requires_labels(tmp_path):
    v = np.random.default_rng(0).standard_normal((200, 1))
    write_csv(TimeSeries(v[:100]), tmp_path / "t.csv")
    write_csv(TimeSeries(v[100:]), tmp_path / "u.csv")
    cfg = load_config(write_config(tmp_path, "[dataset:x]\ntrain = t.csv\ntest = u.csv\n[method:m]\nwindow = 2\n"))
    cell = run_cell(cfg.datasets[0], cfg.methods[0], cfg.metrics)
    assert "no labels" in cell.error
