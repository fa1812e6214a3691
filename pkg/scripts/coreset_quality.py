"""Relative error of sensitivity coresets vs uniform samples across sizes."""

import argparse

import numpy as np

from dmcore.coreset import build_coreset, evaluate_coreset, sample_center_sets, uniform_coreset
from dmcore.instances import gaussian_clusters
from dmcore.metric import from_coords


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--z", type=float, default=2.0)
    p.add_argument("--sizes", default="50,100,200,500")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--centers", type=int, default=100)
    p.add_argument("--outliers", type=int, default=20)
    args = p.parse_args()

    centers = [[0, 0], [60, 0], [0, 60], [60, 60], [30, 30]]
    M = from_coords(gaussian_clusters([400] * 5, centers, 3.0, seed=0, outliers=args.outliers,
                                      outlier_radius=3000))
    C = sample_center_sets(M, args.k, args.centers, seed=1)
    print(f"n={M.n} k={args.k} z={args.z}")
    print(f"{'size':>6} {'mean':>8} {'p95':>8} {'uni_mean':>9} {'uni_p95':>9}")
    for size in (int(s) for s in args.sizes.split(",")):
        imp = np.concatenate([evaluate_coreset(M, build_coreset(M, args.k, args.z, seed=s, size_override=size,
                                                                restarts=3), C, args.z).errors
                              for s in range(args.seeds)])
        uni = np.concatenate([evaluate_coreset(M, uniform_coreset(M, size, seed=s), C, args.z).errors
                              for s in range(args.seeds)])
        print(f"{size:>6} {imp.mean():8.4f} {np.quantile(imp, 0.95):8.4f} "
              f"{uni.mean():9.4f} {np.quantile(uni, 0.95):9.4f}")


if __name__ == "__main__":
    main()
