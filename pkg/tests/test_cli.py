import time

import numpy as np

from projann.cli import main
from projann.datasets import read_dataset, read_planted_sidecar
from projann.experiments import read_records


def gen(tmp_path, name, *extra):
    prefix = str(tmp_path / name)
    assert main(["gen", "planted", "--n", "1500", "--d", "40", "--queries", "10",
                 "--seed", "5", "--out", prefix, *extra]) == 0
    return prefix


def test_gen_is_reproducible(tmp_path):
    a, b = gen(tmp_path, "a"), gen(tmp_path, "b")
    for suffix in (".X.ldnn", ".Q.ldnn", ".planted.csv"):
        assert open(a + suffix, "rb").read() == open(b + suffix, "rb").read()
    X = read_dataset(a + ".X.ldnn")
    assert X.shape == (1500, 40)
    assert len(read_planted_sidecar(a + ".planted.csv")) == 10


def test_gen_gaussian(tmp_path):
    prefix = str(tmp_path / "g")
    assert main(["gen", "gaussian", "--per-query", "20", "--d", "6", "--queries", "4", "--out", prefix]) == 0
    assert read_dataset(prefix + ".X.ldnn").shape == (80, 6)


def test_build_and_query(tmp_path, capsys):
    prefix = gen(tmp_path, "a", "--validate")
    assert main(["build", "--data", prefix + ".X.ldnn"]) == 0
    assert "d'=4 k=39" in capsys.readouterr().out
    out = tmp_path / "answers.csv"
    assert main(["query", "--data", prefix + ".X.ldnn", "--queries", prefix + ".Q.ldnn",
                 "--early-stop", "2.000001", "--out", str(out)]) == 0
    rows = out.read_text().splitlines()
    assert rows[0] == "query_idx,point_idx,distance" and len(rows) == 11
    planted = dict(read_planted_sidecar(prefix + ".planted.csv"))
    hits = sum(int(r.split(",")[1]) == planted[int(r.split(",")[0])] for r in rows[1:])
    assert hits >= 9


def test_exp_k_and_fit(tmp_path, capsys):
    out = tmp_path / "k.csv"
    assert main(["exp-k", "--family", "planted", "--n-grid", "300,600,900", "--d", "30",
                 "--queries-count", "10", "--out", str(out)]) == 0
    assert len(read_records(out)) == 33
    assert main(["fit", "--csv", str(out)]) == 0
    assert "exponent=" in capsys.readouterr().out


def test_exp_k_on_files(tmp_path):
    prefix = gen(tmp_path, "a")
    assert main(["exp-k", "--data", prefix + ".X.ldnn", "--queries", prefix + ".Q.ldnn",
                 "--planted", prefix + ".planted.csv"]) == 0


def test_exp_k_missing_sidecar(tmp_path, capsys):
    prefix = gen(tmp_path, "a")
    assert main(["exp-k", "--data", prefix + ".X.ldnn", "--queries", prefix + ".Q.ldnn"]) == 2
    assert "sidecar" in capsys.readouterr().err
    assert main(["exp-time", "--data", prefix + ".X.ldnn", "--queries", prefix + ".Q.ldnn",
                 "--planted", str(tmp_path / "missing.csv")]) == 2


def test_exp_time_threshold_exit(tmp_path):
    prefix = gen(tmp_path, "a")
    files = ["--data", prefix + ".X.ldnn", "--queries", prefix + ".Q.ldnn",
             "--planted", prefix + ".planted.csv", "--reps", "1"]
    assert main(["exp-time", *files]) == 0
    # accuracy can never reach 1.01
    assert main(["exp-time", *files, "--threshold", "1.01"]) == 1


def test_bad_file_reports_error(tmp_path, capsys):
    bad = tmp_path / "bad.ldnn"
    bad.write_bytes(b"junk")
    assert main(["build", "--data", str(bad)]) == 2
    assert "error" in capsys.readouterr().err


def test_verify_quick(capsys):
    t0 = time.perf_counter()
    assert main(["verify", "--quick"]) == 0
    assert time.perf_counter() - t0 < 60
    out = capsys.readouterr().out
    assert out.count("PASS") == 7


def test_verify_fault_injection(capsys):
    assert main(["verify", "--quick", "--inject-fault"]) == 1
    assert "FAIL unvisited-audit" in capsys.readouterr().out
