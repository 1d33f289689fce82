"""Per-round residuals of the extension iteration against the 3 r_n envelope."""
import argparse
import csv
import sys

import numpy as np

from b1calc import Domain, eval_limit_many
from b1calc.extension import r_sequence, run_extension
from b1calc.library import identity


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rounds", type=int, default=40)
    ap.add_argument("--step", type=float, default=0.01)
    ap.add_argument("--subset", type=float, nargs="+", default=[0.0, 1.0],
                    help="points of Y inside [0, 1]; f(y) = y there")
    args = ap.parse_args(argv)

    X = Domain.interval(0.0, 1.0, step=args.step)
    st = run_extension(identity(X), args.subset, X, rounds=args.rounds, m=1.0)
    rs = r_sequence(1.0, args.rounds)

    w = csv.writer(sys.stdout)
    w.writerow(["n", "r_n", "sup_residual", "envelope_3r_n", "ratio"])
    for rec, r in zip(st.records, rs):
        w.writerow([rec.n, f"{r:.6e}", f"{rec.sup_residual:.6e}", f"{3 * r:.6e}",
                    f"{rec.sup_residual / (3 * r):.4f}"])

    gy, _ = eval_limit_many(st.g, args.subset, 1e-12)
    err = float(np.max(np.abs(gy - np.asarray(args.subset))))
    print(f"# max |g - f| on Y = {err:.3e}, 3 r_(rounds+1) = {3 * rs[args.rounds]:.3e}", file=sys.stderr)


if __name__ == "__main__":
    main()
