"""Depth needed to settle lim x^n as x approaches 1, certified modulus vs doubling."""
import argparse
import csv
import sys

import numpy as np

from b1calc import Domain, eval_limit_many, from_sequence
from b1calc.continuous import Compose, Var
from b1calc.library import power_seq


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--points", type=int, default=12, help="x = 1 - 2^-j for j < points, plus x = 1")
    args = ap.parse_args(argv)

    D = Domain.interval(0.0, 1.0)
    xs = np.append(1.0 - 2.0 ** -np.arange(1, args.points), 1.0)
    certified = power_seq(D)
    doubling = from_sequence(lambda n: Compose("power", Var(), (float(n),)), D)
    cv, cr = eval_limit_many(certified, xs, args.tol)
    dv, dr = eval_limit_many(doubling, xs, args.tol)

    w = csv.writer(sys.stdout)
    w.writerow(["x", "modulus_value", "modulus_depth", "doubling_value", "doubling_depth", "doubling_stable"])
    for x, a, ra, b, rb in zip(xs, cv, cr, dv, dr):
        w.writerow([repr(float(x)), f"{a:.3e}", ra.depth_used, f"{b:.3e}", rb.depth_used, rb.stable])


if __name__ == "__main__":
    main()
