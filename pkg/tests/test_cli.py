import csv
import json

import numpy as np
import pytest

from dmcore.cli import main
from pipelines import run_all, write_points


@pytest.fixture
def pts(tmp_path):
    p = tmp_path / "pts.csv"
    write_points(p)
    return p


def test_build_coreset_example(pts, tmp_path):
    out = tmp_path / "out.json"
    assert main(["build-coreset", "--k", "5", "--z", "2", "--eps", "0.2", "--seed", "7", str(pts), str(out)]) == 0
    doc = json.loads(out.read_text())
    assert len(doc["entries"]) == doc["meta"]["gamma"]
    assert doc["meta"]["k"] == 5 and doc["meta"]["z"] == 2 and doc["meta"]["seed"] == 7
    assert doc["config"]["eps"] == 0.2


def test_bad_z_exits_2(pts, tmp_path, capsys):
    assert main(["build-coreset", "--z", "0", str(pts), str(tmp_path / "o.json")]) == 2
    assert "--z" in capsys.readouterr().err


def test_missing_input_exits_2(tmp_path):
    assert main(["sensitivity", str(tmp_path / "nope.csv"), str(tmp_path / "o.csv")]) == 2


def test_guard_exits_3(tmp_path):
    p = tmp_path / "big.csv"
    write_points(p, n=60)
    assert main(["ranges-report", str(p), str(tmp_path / "r.json"), "--k", "5"]) == 3


def test_bench_rows(tmp_path):
    (tmp_path / "corpus").mkdir()
    write_points(tmp_path / "corpus" / "one.csv", n=30)
    out = tmp_path / "bench.csv"
    assert main(["bench", str(tmp_path / "corpus"), str(out), "--sizes", "10,20", "--eps", "0.2,0.3",
                 "--seeds", "1", "--centers", "5"]) == 0
    rows = [r for r in csv.reader(l for l in out.read_text().splitlines() if not l.startswith("#"))]
    head, body = rows[0], rows[1:]
    assert len(body) == 4
    for col in ("mean_err", "p95_err", "uniform_mean_err", "uniform_p95_err", "runtime_ms"):
        assert col in head


def test_bench_empty_corpus_exits_2(tmp_path):
    (tmp_path / "empty").mkdir()
    assert main(["bench", str(tmp_path / "empty"), str(tmp_path / "b.csv")]) == 2


def test_hard_instance_matrix(tmp_path):
    out = tmp_path / "h.csv"
    assert main(["hard-instance", str(out), "--n", "2"]) == 0
    assert main(["sensitivity", str(out), str(tmp_path / "s.csv"), "--format", "matrix"]) == 0


def test_same_seed_same_bytes_across_threads(tmp_path):
    a = run_all(tmp_path / "one", threads=1)
    b = run_all(tmp_path / "four", threads=4)
    assert a.keys() == b.keys() and len(a) >= 12
    for name in a:
        assert a[name] == b[name], name
