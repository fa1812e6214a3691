"""Run the exact smoothed-distance property checks over the standard corpus."""

import argparse
import time

from dmcore.instances import standard_corpus
from dmcore.nets import build_decomposition_tree, build_hierarchy, build_simple_tree
from dmcore.smoothing import SmoothedMetric, check_cross_free, check_descendant, check_distortion, check_smooth


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--eps", type=float, default=1 / 16)
    p.add_argument("--tree", choices=["simple", "decomposition"], default="simple")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()

    for inst in standard_corpus():
        t0 = time.perf_counter()
        H = build_hierarchy(inst.metric)
        T = build_simple_tree(H) if args.tree == "simple" else build_decomposition_tree(H, seed=args.seed, chi=4)
        S = SmoothedMetric(T, eps=args.eps / T.c_cover)
        errs = check_distortion(S) + check_descendant(S) + check_smooth(S) + check_cross_free(S)
        ratio = (inst.metric.dist[inst.metric.dist > 0] / S.matrix[inst.metric.dist > 0])
        print(f"{inst.name:>14} n={inst.metric.n:<4} L={T.L:<3} d/delta in [{ratio.min():.4f}, {ratio.max():.4f}] "
              f"violations={len(errs)} {time.perf_counter() - t0:.2f}s")


if __name__ == "__main__":
    main()
