"""Command-line front end.

Exit status: 0 success, 2 invalid input or parameters, 3 enumeration guard
exceeded, 1 internal invariant violation.  Every artifact embeds the run
configuration (minus the thread count, which never affects results).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import centroid, coreset, ranges, robust, sensitivity, smoothing
from .errors import GuardExceeded, InvariantViolation, ValidationError
from .metric import hard_instance, load_metric, write_matrix_csv
from .nets import build_decomposition_tree, build_hierarchy, build_simple_tree, default_chi
from .parallel import set_threads
from .rng import derive_rng

NOT_CONFIG = {"func", "threads"}


def run_config(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in NOT_CONFIG}


def write_json(path, doc) -> None:
    text = json.dumps(doc, sort_keys=True, indent=1) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def write_csv(path, header, rows, config, footer: dict | None = None) -> None:
    buf = io.StringIO()
    buf.write("# config=" + json.dumps(config, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if footer is not None:
        buf.write("# totals=" + json.dumps(footer, sort_keys=True) + "\n")
    Path(path).write_text(buf.getvalue(), encoding="utf-8", newline="\n")


def fnum(x: float) -> str:
    return repr(float(x))


def _metric(args):
    return load_metric(args.input, kind=args.format)


def _ddim(args, M):
    from .metric import estimate_doubling_dim
    return args.ddim if args.ddim is not None else estimate_doubling_dim(M)


def _check_common(args) -> None:
    z = getattr(args, "z", None)
    if z is not None and not (math.isfinite(z) and z > 0):
        raise ValidationError(f"--z must be > 0 (got {z})")
    k = getattr(args, "k", None)
    if k is not None and k < 1:
        raise ValidationError(f"--k must be >= 1 (got {k})")
    eps = getattr(args, "eps", None)
    if eps is not None and not (0 < eps < 1):
        raise ValidationError(f"--eps must lie in (0, 1) (got {eps})")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        raise ValidationError("--threads must be >= 1")


# ---------------------------------------------------------------------------
# subcommands


def cmd_build_coreset(args) -> None:
    M = _metric(args)
    W = coreset.build_coreset(M, args.k, args.z, args.eps, args.tau, args.seed, args.size, args.A,
                              ddim=args.ddim, c_assumed=args.c_assumed)
    doc = W.to_dict()
    doc["config"] = run_config(args)
    write_json(args.output, doc)


def cmd_eval_coreset(args) -> None:
    M = _metric(args)
    W = coreset.WeightedCoreset.from_dict(json.loads(Path(args.coreset).read_text()))
    if (W.ids >= M.n).any():
        raise ValidationError("coreset ids do not match the input metric")
    sets = coreset.sample_center_sets(M, args.k, args.centers, args.seed)
    rep = coreset.evaluate_coreset(M, W, sets, args.z, args.eps)
    rows = [[" ".join(map(str, C)), fnum(t), fnum(c), fnum(e)]
            for C, t, c, e in zip(sets, rep.true_costs, rep.coreset_costs, rep.errors)]
    footer = {"max": rep.max, "mean": rep.mean, "p95": rep.p95, "frac_exceeding": rep.frac_exceeding}
    write_csv(args.output, ["center_ids", "true_cost", "coreset_cost", "rel_error"], rows,
              run_config(args), footer)


def cmd_sensitivity(args) -> None:
    M = _metric(args)
    B = sensitivity.dz_seed(M, args.k, args.z, restarts=args.restarts, seed=args.seed)
    P = sensitivity.sensitivity_bounds(M, B, args.z, args.c_assumed)
    rows = [[i, fnum(p), fnum(t)] for i, (p, t) in enumerate(zip(P.pi, P.theta))]
    footer = {"total_pi": P.total_pi, "total_theta": P.total_theta, "bicriteria_cost": B.cost,
              "centers": list(B.centers), "multiplier": P.multiplier}
    write_csv(args.output, ["id", "pi", "theta"], rows, run_config(args), footer)


def _tree(args, M):
    H = build_hierarchy(M)
    if args.tree == "simple":
        return build_simple_tree(H)
    chi = args.chi if args.chi is not None else default_chi(_ddim(args, M))
    return build_decomposition_tree(H, derive_rng(args.seed, "tree").integers(2**31), chi)


def cmd_ranges_report(args) -> None:
    M = _metric(args)
    m = min(args.m or M.n, M.n)
    rng = derive_rng(args.seed, "ranges")
    Hs = np.sort(rng.choice(M.n, size=m, replace=False))
    weights = None
    if args.gap_weights:
        weights = 2.0 ** -rng.integers(0, 8, size=m)
    S = None
    if args.kernel == "smoothed":
        S = smoothing.SmoothedMetric(_tree(args, M), args.eps, args.z)
    F = ranges.make_family(M, Hs, args.kernel, S, weights, args.z)
    rep = (ranges.enumerate_ranges_singleton(F, M) if args.k == 1
           else ranges.enumerate_ranges_ksubset(F, M, args.k))
    write_json(args.output, {"config": run_config(args), "m": m, "k": args.k, "eps": args.eps,
                             "z": args.z, "count": rep.distinct_count,
                             "dim_estimate": rep.dim_estimate, "seed": args.seed})


def cmd_probe_smooth(args) -> None:
    M = _metric(args)
    S = smoothing.SmoothedMetric(_tree(args, M), args.eps, args.z)
    errs = (smoothing.check_distortion(S, args.z) + smoothing.check_descendant(S)
            + smoothing.check_smooth(S) + smoothing.check_cross_free(S))
    off = ~np.eye(M.n, dtype=bool)
    ratio = (M.dist[off] / S.matrix[off]) if M.n > 1 else np.ones(1)
    lo, hi = 1 - 4 * S.c * S.eps, 1 + 4 * S.c * S.eps
    counts, edges = np.histogram(ratio, bins=args.bins, range=(lo, hi))
    rows = [[fnum(a), fnum(b), int(c)] for a, b, c in zip(edges[:-1], edges[1:], counts)]
    footer = {"pairs": int(ratio.size), "smoothed_pairs": int(np.sum(ratio != 1.0)),
              "violations": len(errs), "lambda": S.lam}
    write_csv(args.output, ["ratio_lo", "ratio_hi", "count"], rows, run_config(args), footer)
    if errs:
        raise InvariantViolation("; ".join(errs[:3]))


def cmd_robust_sample(args) -> None:
    M = _metric(args)
    S = robust.uniform_sample(M, args.size, args.seed, args.alpha, args.eps)
    write_json(args.output, {"config": run_config(args), "ids": S.ids.tolist()})


def cmd_robust_check(args) -> None:
    M = _metric(args)
    ids = np.array(json.loads(Path(args.sample).read_text())["ids"], dtype=np.int64)
    if ids.size and (ids.max() >= M.n or ids.min() < 0):
        raise ValidationError("sample ids do not match the input metric")
    res = robust.robust_check(M, ids, args.alpha, args.eps, args.z, args.k, seed=args.seed)
    write_json(args.output, {"config": run_config(args), "passed": res.passed,
                             "worst_margin": res.worst_margin, "checked": res.checked,
                             "worst_case": res.worst_case})


def cmd_cluster_test(args) -> None:
    M = _metric(args)
    v = robust.property_test(M, args.k, args.z, args.delta, args.gamma, args.alpha, args.eps,
                             args.tau, args.lam, args.seed, args.size, args.A, args.mode, args.ddim)
    write_json(args.output, {"config": run_config(args), "accept": v.accept, "Lambda": v.Lambda,
                             "threshold": v.threshold, "params": v.params})


def cmd_centroid(args) -> None:
    M = _metric(args)
    W = coreset.WeightedCoreset.from_dict(json.loads(Path(args.coreset).read_text()))
    T = build_simple_tree(build_hierarchy(M))
    w = np.bincount(W.ids, weights=W.weights, minlength=M.n)
    H = centroid.build_centroid_set(M, T, W.ids, w, args.eps, args.k, args.z, _ddim(args, M))
    write_json(args.output, {"config": run_config(args), "ids": H.ids.tolist(), "size": H.size,
                             "source_size": int(H.source.size), "b_cfg": H.b_cfg,
                             "intervals": [list(iv) for iv in H.intervals.intervals]})


def cmd_solve(args) -> None:
    M = _metric(args)
    W = coreset.build_coreset(M, args.k, args.z, args.eps / 2, args.tau, args.seed, args.size,
                              args.A, ddim=args.ddim)
    w = np.bincount(W.ids, weights=W.weights, minlength=M.n)
    T = build_simple_tree(build_hierarchy(M))
    H = centroid.build_centroid_set(M, T, W.ids, w, args.eps, args.k, args.z, W.params["ddim"])
    res = centroid.local_search(M, H.ids, w, args.k, args.z, args.rho, args.improve_factor,
                                args.eps, args.seed)
    full = float(M.multiplicity @ (M.dist[:, list(res.centers)].min(axis=1) ** args.z))
    write_json(args.output, {"config": run_config(args), "centers": list(res.centers),
                             "coreset_cost": res.cost, "full_cost": full,
                             "centroid_size": H.size, "coreset_size": W.size,
                             "iterations": len(res.trace) - 1})
    if args.trace:
        rows = [[i, fnum(c), " ".join(map(str, o)), " ".join(map(str, n))] for i, c, o, n in res.trace]
        write_csv(args.trace, ["iteration", "cost", "swap_out", "swap_in"], rows, run_config(args))


def cmd_bench(args) -> None:
    root = Path(args.corpus)
    if not root.is_dir():
        raise ValidationError(f"corpus directory {root} does not exist")
    files = sorted(p for p in root.iterdir() if p.suffix in (".csv", ".gz"))
    if not files:
        raise ValidationError(f"corpus directory {root} is empty")
    rows = []
    for f in files:
        M = load_metric(f, kind=args.format)
        t = _ddim(args, M)
        for size in args.sizes:
            for eps in args.eps_list:
                start = time.perf_counter()
                errs = {"sensitivity": [], "uniform": []}
                for s in range(args.seeds):
                    seed = int(derive_rng(args.seed, "bench", s).integers(2**31))
                    sets = coreset.sample_center_sets(M, args.k, args.centers, seed)
                    W = coreset.build_coreset(M, args.k, args.z, eps, args.tau, seed, size, ddim=t)
                    U = coreset.uniform_coreset(M, size, seed)
                    errs["sensitivity"].append(coreset.evaluate_coreset(M, W, sets, args.z).errors)
                    errs["uniform"].append(coreset.evaluate_coreset(M, U, sets, args.z).errors)
                ms = (time.perf_counter() - start) * 1000
                e, u = np.concatenate(errs["sensitivity"]), np.concatenate(errs["uniform"])
                rows.append([f.name, size, eps, fnum(e.mean()), fnum(np.quantile(e, 0.95)),
                             fnum(u.mean()), fnum(np.quantile(u, 0.95)), f"{ms:.1f}"])
    header = ["instance", "size", "eps", "mean_err", "p95_err", "uniform_mean_err", "uniform_p95_err",
              "runtime_ms"]
    write_csv(args.output, header, rows, run_config(args))


def cmd_hard_instance(args) -> None:
    write_matrix_csv(hard_instance(args.n), args.output)


# ---------------------------------------------------------------------------
# parser


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t]


def _ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t]


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dmcore", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_, with_input=True):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        if with_input:
            sp.add_argument("input", help="coordinate or matrix CSV (optionally gzipped)")
            sp.add_argument("--format", choices=["coords", "matrix"], default="coords")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=None, help="worker threads (env DMCORE_THREADS)")
        sp.add_argument("--ddim", type=float, default=None, help="override the doubling-dimension estimate")
        return sp

    def kz(sp, k=1, z=1.0):
        sp.add_argument("--k", type=int, default=k)
        sp.add_argument("--z", type=float, default=z)

    sp = add("build-coreset", cmd_build_coreset, "sensitivity-sampled coreset")
    sp.add_argument("output")
    kz(sp)
    sp.add_argument("--eps", type=float, default=0.2)
    sp.add_argument("--tau", type=float, default=1e-3)
    sp.add_argument("--A", type=float, default=1.0, help="size multiplier")
    sp.add_argument("--size", type=int, default=None, help="coreset size override")
    sp.add_argument("--c-assumed", type=float, default=None)

    sp = add("eval-coreset", cmd_eval_coreset, "relative error of a coreset on random centre sets")
    sp.add_argument("coreset")
    sp.add_argument("output")
    kz(sp)
    sp.add_argument("--eps", type=float, default=0.2)
    sp.add_argument("--centers", type=int, default=200)

    sp = add("sensitivity", cmd_sensitivity, "per-point sensitivity bounds")
    sp.add_argument("output")
    kz(sp)
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--c-assumed", type=float, default=None)

    def tree_flags(sp, eps):
        sp.add_argument("--eps", type=float, default=eps)
        sp.add_argument("--tree", choices=["simple", "decomposition"], default="simple")
        sp.add_argument("--chi", type=float, default=None)

    sp = add("ranges-report", cmd_ranges_report, "count distinct ranges of a function family")
    sp.add_argument("output")
    kz(sp)
    tree_flags(sp, 1 / 16)
    sp.add_argument("--kernel", choices=["plain", "smoothed"], default="plain")
    sp.add_argument("--m", type=int, default=None, help="index-set size (default: all points)")
    sp.add_argument("--gap-weights", action="store_true", help="random power-of-two weights")

    sp = add("probe-smooth", cmd_probe_smooth, "distortion histogram and property checks")
    sp.add_argument("output")
    sp.add_argument("--z", type=float, default=1.0)
    tree_flags(sp, 1 / 16)
    sp.add_argument("--bins", type=int, default=20)

    sp = add("robust-sample", cmd_robust_sample, "uniform i.i.d. sample")
    sp.add_argument("output")
    sp.add_argument("--size", type=int, required=True)
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)

    sp = add("robust-check", cmd_robust_check, "check the robust-coreset inequalities")
    sp.add_argument("sample")
    sp.add_argument("output")
    kz(sp)
    sp.add_argument("--alpha", type=float, default=0.1)
    sp.add_argument("--eps", type=float, default=0.1)

    sp = add("cluster-test", cmd_cluster_test, "clusterability property test")
    sp.add_argument("output")
    kz(sp, k=2)
    sp.add_argument("--delta", type=float, required=True)
    sp.add_argument("--gamma", type=float, default=0.2)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--eps", type=float, default=0.2)
    sp.add_argument("--tau", type=float, default=0.05)
    sp.add_argument("--lam", type=float, default=1.0)
    sp.add_argument("--size", type=int, default=None)
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--mode", choices=["exhaustive", "heuristic"], default="exhaustive")

    sp = add("centroid", cmd_centroid, "centroid set from a coreset")
    sp.add_argument("coreset")
    sp.add_argument("output")
    kz(sp)
    sp.add_argument("--eps", type=float, default=0.1)

    sp = add("solve", cmd_solve, "coreset, centroid set and local search end to end")
    sp.add_argument("output")
    kz(sp)
    sp.add_argument("--eps", type=float, default=0.2)
    sp.add_argument("--tau", type=float, default=1e-3)
    sp.add_argument("--A", type=float, default=1.0)
    sp.add_argument("--size", type=int, default=None)
    sp.add_argument("--rho", type=int, default=1)
    sp.add_argument("--improve-factor", type=float, default=None)
    sp.add_argument("--trace", default=None, help="optional trace CSV path")

    sp = add("bench", cmd_bench, "coreset quality sweep over a corpus directory", with_input=False)
    sp.add_argument("corpus")
    sp.add_argument("output")
    sp.add_argument("--format", choices=["coords", "matrix"], default="coords")
    kz(sp, k=3, z=2.0)
    sp.add_argument("--sizes", type=_ints, default=[50, 200])
    sp.add_argument("--eps", dest="eps_list", type=_floats, default=[0.2])
    sp.add_argument("--tau", type=float, default=1e-3)
    sp.add_argument("--seeds", type=int, default=3)
    sp.add_argument("--centers", type=int, default=100)

    sp = add("hard-instance", cmd_hard_instance, "write the shattering metric as a matrix CSV",
             with_input=False)
    sp.add_argument("output")
    sp.add_argument("--n", type=int, required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _check_common(args)
        set_threads(args.threads)
        args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GuardExceeded as exc:
        print(f"guard exceeded: {exc}", file=sys.stderr)
        return 3
    except InvariantViolation as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
