"""Sweep all topologies on up to N points: limits of random continuous sequences
must have F_sigma preimages of open intervals."""
import argparse
import json
import time

import numpy as np

from b1calc.finite import (
    check_fsigma_characterization, enumerate_topologies, pointwise_limit, random_convergent_sequence,
)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--max-points", type=int, default=4)
    ap.add_argument("--samples", type=int, default=200, help="limits per topology")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    for n in range(1, args.max_points + 1):
        t0 = time.perf_counter()
        tops = enumerate_topologies(n)
        failures = 0
        for t in tops:
            for _ in range(args.samples):
                f = pointwise_limit(random_convergent_sequence(t, rng))
                failures += not check_fsigma_characterization(f, t).passed
        print(json.dumps({"points": n, "topologies": len(tops), "limits": len(tops) * args.samples,
                          "failures": failures, "seconds": round(time.perf_counter() - t0, 3)}))


if __name__ == "__main__":
    main()
