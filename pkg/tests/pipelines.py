"""Runs every CLI pipeline inside a directory, for determinism comparisons."""

import csv
import io
import os
from pathlib import Path

import numpy as np

from dmcore.cli import main


def write_points(path, n=40, seed=0):
    pts = np.random.default_rng(seed).random((n, 2)) * 100
    rows = "\n".join(f"{float(x)!r},{float(y)!r}" for x, y in pts)
    Path(path).write_text("x,y\n" + rows + "\n")


def run_all(workdir, threads):
    """Run each subcommand with relative paths inside ``workdir``; returns {artifact: bytes}."""
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    old = os.getcwd()
    os.chdir(workdir)
    try:
        write_points("pts.csv")
        Path("corpus").mkdir(exist_ok=True)
        write_points("corpus/a.csv", n=30, seed=1)
        t = ["--threads", str(threads)]
        cmds = [
            ["build-coreset", "pts.csv", "core.json", "--k", "3", "--z", "2", "--eps", "0.2", "--seed", "7",
             "--size", "20"],
            ["eval-coreset", "pts.csv", "core.json", "eval.csv", "--k", "3", "--z", "2", "--centers", "15"],
            ["sensitivity", "pts.csv", "sens.csv", "--k", "2"],
            ["ranges-report", "pts.csv", "ranges.json", "--kernel", "smoothed", "--m", "12", "--gap-weights"],
            ["probe-smooth", "pts.csv", "probe.csv", "--tree", "decomposition", "--eps", "0.03125"],
            ["robust-sample", "pts.csv", "sample.json", "--size", "25"],
            ["robust-check", "pts.csv", "sample.json", "check.json", "--alpha", "0.2"],
            ["cluster-test", "pts.csv", "verdict.json", "--delta", "500", "--size", "30"],
            ["centroid", "pts.csv", "core.json", "cent.json", "--k", "2"],
            ["solve", "pts.csv", "solve.json", "--k", "2", "--size", "15", "--trace", "trace.csv"],
            ["bench", "corpus", "bench.csv", "--sizes", "10,20", "--seeds", "2", "--centers", "10"],
            ["hard-instance", "hard.csv", "--n", "3"],
        ]
        for cmd in cmds:
            code = main(cmd + t)
            assert code == 0, (cmd, code)
        out = {}
        for p in sorted(Path(".").rglob("*")):
            if p.is_file() and p.parts[0] != "corpus" and p.name != "pts.csv":
                data = p.read_bytes()
                if p.name == "bench.csv":
                    data = drop_column(data, "runtime_ms")
                out[str(p)] = data
        return out
    finally:
        os.chdir(old)


def drop_column(data: bytes, name: str) -> bytes:
    """Remove a CSV column (timing data) while keeping comment lines."""
    lines = data.decode().splitlines()
    body = [l for l in lines if not l.startswith("#")]
    rows = list(csv.reader(body))
    j = rows[0].index(name)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for r in rows:
        w.writerow(r[:j] + r[j + 1:])
    head = [l for l in lines if l.startswith("#")]
    return ("\n".join(head) + "\n" + buf.getvalue()).encode()
