"""Size of the sampled eps-zero set of the band intersection as eps shrinks.

The intersection of the bands |x| <= 1/k is {0}, but each factor enters the
combined function with weight 2^-k, so a sampled eps-zero set only sees the
first ~log2(1/eps) bands.
"""
import argparse
import csv
import sys

import numpy as np

from b1calc import Domain
from b1calc.library import band_seq
from b1calc.zerosets import countable_intersection, intersection_oracle, zero_set


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=201)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-2, 1e-4, 1e-6, 1e-9, 1e-12])
    args = ap.parse_args(argv)

    D = Domain.interval(-1.0, 1.0)
    xs = np.linspace(-1.0, 1.0, args.samples)
    fam = lambda n: band_seq(n, D)
    g = countable_intersection(fam, D)

    w = csv.writer(sys.stdout)
    w.writerow(["eps", "count", "max_abs_x", "oracle_depth", "oracle_count", "agree"])
    for eps in args.eps:
        Z = zero_set(g, eps, xs)
        depth = max(1, int(np.ceil(np.log2(1 / eps))))
        oracle = intersection_oracle(fam, xs, eps, depth)
        member = np.isin(xs, Z.array)
        w.writerow([eps, len(Z), f"{np.abs(Z.array).max():.4f}" if len(Z) else "", depth,
                    int(oracle.sum()), bool(np.all(member == oracle))])


if __name__ == "__main__":
    main()
