"""Command line entry point: ``b1calc run|demo|check``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import B1Error
from .runner import FORMATS, RunConfig, RunResult, format_reports, run_source

DEMOS = {
    "xn": """\
let f = seq(n, x^n) on [0, 1];
table f from 0 to 1 step 0.1;
""",
    "extension": """\
let f = seq(n, x) on {0, 1};
let X = seq(n, 0) on [-1, 2];
extend f on {0, 1} in X rounds 40;
""",
    "intersection": """\
let g = intersectz(k, seq(n, max(0, abs(x) - 1 / k))) on [-1, 1];
zeroset g eps 1e-6;
""",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="b1calc", description="Baire-one function calculator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a script")
    r.add_argument("script", type=Path)
    _add_config_args(r)

    d = sub.add_parser("demo", help="run a built-in demonstration")
    d.add_argument("name", choices=sorted(DEMOS))
    _add_config_args(d)

    c = sub.add_parser("check", help="static checks")
    csub = c.add_subparsers(dest="what", required=True)
    f = csub.add_parser("finite", help="validate a finite topology and report its closed sets")
    f.add_argument("topology", type=Path)
    return p


def _add_config_args(p):
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--depth-cap", type=int, default=2 ** 20)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=FORMATS, default="json")


def _config(args) -> RunConfig:
    return RunConfig.with_env(tol=args.tol, depth_cap=args.depth_cap, step=args.step,
                              seed=args.seed, format=args.format)


def _emit(result: RunResult, fmt: str) -> int:
    sys.stdout.write(format_reports(result.reports, fmt))
    return result.exit_code


def _check_finite(path: Path) -> int:
    from .finite import FiniteTopology, validate_topology

    try:
        t = FiniteTopology.load(path)
    except (OSError, ValueError) as exc:
        print(json.dumps({"cmd": "check-finite", "ok": False, "error": str(exc)}))
        return 1
    bad = validate_topology(t)
    out = {"cmd": "check-finite", "ok": bad is None, "points": list(t.points)}
    if bad is None:
        out["closed_sets"] = [sorted(s) for s in t.closed_sets()]
        out["specialization"] = sorted([list(p) for p in t.specialization])
    else:
        out["violation"] = bad.kind
        out["pair"] = [sorted(s) for s in bad.pair]
    print(json.dumps(out))
    return 0 if bad is None else 1


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "check":
            return _check_finite(args.topology)
        cfg = _config(args)
        np.random.seed(cfg.seed)
        if args.command == "demo":
            return _emit(run_source(DEMOS[args.name], cfg), cfg.format)
        try:
            src = args.script.read_text()
        except OSError as exc:
            print(json.dumps({"cmd": "run", "error": str(exc)}))
            return 1
        return _emit(run_source(src, cfg, base_dir=args.script.resolve().parent), cfg.format)
    except B1Error as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
