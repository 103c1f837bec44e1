import math

import numpy as np
import pytest

from projann.experiments import (
    CSV_HEADER,
    ExperimentRecord,
    exp_time_dataset,
    fit_power_law,
    read_records,
    run_exp_k,
    upper_half,
    write_records,
)
from projann.datasets import PlantedSpec, gen_planted


def test_fit_exact_power_law():
    pts = [(n, 4.0 * n**0.5) for n in (100, 400, 1600, 6400)]
    a, b = fit_power_law(pts)
    assert a == pytest.approx(4.0, rel=1e-9)
    assert b == pytest.approx(0.5, abs=1e-9)


def test_fit_constant_and_linear():
    assert fit_power_law([(n, 3.0) for n in (10, 20, 50)])[1] == pytest.approx(0.0, abs=1e-12)
    assert fit_power_law([(n, n) for n in (10, 20, 50)])[1] == pytest.approx(1.0, abs=1e-12)


def test_fit_range_filters():
    pts = [(10, 1.0), (100, 1.0), (1000, 10.0), (10000, 100.0)]
    assert fit_power_law(pts, (1000, 10000))[1] == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("pts", [[(10, 1.0)], [], [(10, 1.0), (10, 2.0)], [(10, 0.0), (20, 1.0)]])
def test_fit_rejects_degenerate(pts):
    with pytest.raises(ValueError):
        fit_power_law(pts)


def test_upper_half():
    assert upper_half([2000, 4000, 6000, 8000, 10000, 15000, 20000]) == (8000, 20000)


def test_record_rejects_nan():
    with pytest.raises(ValueError):
        ExperimentRecord("x", 1, 1, 1, 1, 0.5, 0.1, 0, "m", math.nan)


def test_csv_roundtrip(tmp_path):
    recs = [ExperimentRecord("exp-k-planted", 2000, 200, 5, 3, 0.5, 0.1, 7, "k_avg", 2.0 / 3.0)]
    path = tmp_path / "r.csv"
    write_records(path, recs)
    assert path.read_text().splitlines()[0] == ",".join(CSV_HEADER)
    assert read_records(path) == recs


def test_csv_bad_header(tmp_path):
    path = tmp_path / "r.csv"
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_records(path)


def test_exp_k_deterministic():
    a = run_exp_k("planted", (300, 600), d=30, n_queries=10, seed=3)
    b = run_exp_k("planted", (300, 600), d=30, n_queries=10, seed=3)
    assert a == b
    records, averages = a
    assert [n for n, _ in averages] == [300, 600]
    assert sum(r.metric_name == "k_avg" for r in records) == 2
    assert sum(r.metric_name.startswith("k_q") for r in records) == 20
    assert all(r.metric_value >= 1 for r in records)


def test_exp_k_gaussian_shape():
    records, averages = run_exp_k("gaussian", (400,), d=20, n_queries=8, seed=1)
    assert averages[0][0] == 400 and averages[0][1] >= 1
    assert records[-1].metric_name == "k_avg"


def test_exp_k_unknown_family():
    with pytest.raises(ValueError):
        run_exp_k("uniform", (100,))


def test_exp_time_records():
    X, Q, planted = gen_planted(PlantedSpec(n=2000, d=50, n_queries=20, seed=2))
    records, acc = exp_time_dataset(X, Q, planted, reps=1)
    names = [r.metric_name for r in records]
    assert names == ["accuracy", "accuracy_ok", "query_time_index_s", "query_time_brute_s"]
    assert 0.0 <= acc <= 1.0 and records[0].metric_value == acc
    assert all(r.metric_value >= 0 for r in records)
    again, acc2 = exp_time_dataset(X, Q, planted, reps=1)
    assert acc2 == acc and [r.k for r in again] == [r.k for r in records]


def test_brute_time_scales_with_n():
    # informational: linear scan cost should grow with n
    times = []
    for n in (5000, 40000):
        X, Q, planted = gen_planted(PlantedSpec(n=n, d=50, n_queries=20, seed=4))
        records, _ = exp_time_dataset(X, Q, planted, reps=3)
        times.append(records[3].metric_value)
    print(f"brute per-query time: {times}")
    assert times[1] > times[0]
