"""Execute parsed scripts against the core modules and format the reports."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import dsl
from .continuous import Abs, Compose, Const, Domain, Expr, Max, Min, Mul, Neg, Var, Add
from .errors import B1Error, PreconditionError
from .extension import run_extension
from .finite import (
    FiniteRealFn, FiniteTopology, check_fsigma_characterization, is_continuous,
    validate_topology, zero_set_is_gdelta,
)
from .sequences import (
    ARCTAN, TAN, BaireSeq, absolute, add, affine, compose_continuous, eval_limit,
    eval_limit_many, from_expr, from_sequence, join, meet, mul, neg, power, reciprocal_positive,
    series_sum, truncate,
)
from .zerosets import DEFAULT_EPS, check_zero_identities, countable_intersection, \
    separation_witness, zero_set

FORMATS = ("json", "csv")


@dataclass(frozen=True)
class RunConfig:
    tol: float = 1e-6
    depth_cap: int = 2 ** 20
    step: float = 0.01
    seed: int = 0
    format: str = "json"

    def __post_init__(self):
        if not self.tol > 0:
            raise PreconditionError(f"tol must be positive, got {self.tol}")
        if self.depth_cap < 8:
            raise PreconditionError(f"depth_cap must be at least 8, got {self.depth_cap}")
        if not self.step > 0:
            raise PreconditionError(f"step must be positive, got {self.step}")
        if self.format not in FORMATS:
            raise PreconditionError(f"format must be one of {FORMATS}, got {self.format!r}")

    @classmethod
    def with_env(cls, **kw) -> RunConfig:
        """Config whose depth cap is taken from B1CALC_DEPTH_CAP when that is set."""
        env = os.environ.get("B1CALC_DEPTH_CAP")
        if env:
            try:
                kw["depth_cap"] = int(env)
            except ValueError:
                raise PreconditionError(f"B1CALC_DEPTH_CAP is not an integer: {env!r}") from None
        return cls(**kw)


class RunError(B1Error):
    def __init__(self, msg: str, span: dsl.Span = dsl.NOSPAN):
        super().__init__(msg)
        self.span = span


# -- compiling expressions ------------------------------------------------

def compile_expr(e: dsl.ArExpr, env: dict[str, float]):
    """A float when the expression is free of x, otherwise a continuous Expr."""
    if isinstance(e, dsl.Num):
        return e.value
    if isinstance(e, dsl.Name):
        if e.id in env:
            return float(env[e.id])
        if e.id == "x":
            return Var()
        raise RunError(f"unbound variable {e.id!r}", e.span)
    if isinstance(e, dsl.NegE):
        v = compile_expr(e.arg, env)
        return -v if isinstance(v, float) else Neg(v)
    if isinstance(e, dsl.Call):
        args = [compile_expr(a, env) for a in e.args]
        if all(isinstance(a, float) for a in args):
            return float({"abs": abs, "min": min, "max": max}[e.fn](*args))
        args = [_lift(a) for a in args]
        if e.fn == "abs":
            return Abs(args[0])
        return (Min if e.fn == "min" else Max)(*args)
    lhs, rhs = compile_expr(e.left, env), compile_expr(e.right, env)
    consts = isinstance(lhs, float) and isinstance(rhs, float)
    op = e.op
    try:
        if op == "+":
            return lhs + rhs if consts else Add(_lift(lhs), _lift(rhs))
        if op == "-":
            return lhs - rhs if consts else Add(_lift(lhs), Neg(_lift(rhs)))
        if op == "*":
            return lhs * rhs if consts else Mul(_lift(lhs), _lift(rhs))
        if op == "/":
            if isinstance(rhs, float):
                if rhs == 0:
                    raise RunError("division by zero", e.span)
                return lhs / rhs if consts else Mul(_lift(lhs), Const(1.0 / rhs))
            return Mul(_lift(lhs), Compose("reciprocal_nonzero", rhs))
        # ^
        if not isinstance(rhs, float):
            raise RunError("exponents may not depend on x", e.span)
        if consts:
            v = lhs ** rhs
            if isinstance(v, complex) or not math.isfinite(v):
                raise RunError(f"{lhs:g}^{rhs:g} is not a finite real number", e.span)
            return float(v)
        return Compose("power", lhs, (rhs,))
    except (OverflowError, ZeroDivisionError) as exc:
        raise RunError(str(exc), e.span) from None


def _lift(v) -> Expr:
    return v if isinstance(v, Expr) else Const(float(v))


def _mentions(e: dsl.ArExpr, name: str) -> bool:
    if isinstance(e, dsl.Name):
        return e.id == name
    if isinstance(e, dsl.NegE):
        return _mentions(e.arg, name)
    if isinstance(e, dsl.Call):
        return any(_mentions(a, name) for a in e.args)
    if isinstance(e, dsl.BinOp):
        return _mentions(e.left, name) or _mentions(e.right, name)
    return False


def _rehome(f: BaireSeq, domain: Domain) -> BaireSeq:
    return BaireSeq(f.term, domain, modulus=f.modulus, bound=f.bound, tag=f.tag,
                    warnings=f.warnings)


def _std(c: dsl.ComposeS, f: BaireSeq) -> BaireSeq:
    if c.std == "arctan":
        return compose_continuous(ARCTAN, f)
    if c.std == "tan":
        return compose_continuous(TAN, f, range_bound=f.bound)
    if c.std == "affine":
        return compose_continuous(affine(*c.params), f)
    return compose_continuous(power(c.params[0]), f, range_bound=f.bound)


class Interpreter:
    def __init__(self, cfg: RunConfig, base_dir: Path | None = None):
        self.cfg = cfg
        self.base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
        self.bindings: dict[str, BaireSeq] = {}
        self.failed: set[str] = set()

    # sequences

    def domain(self, d: dsl.DomainLit) -> Domain:
        try:
            if isinstance(d, dsl.IntervalDom):
                return Domain.interval(d.lo, d.hi, step=self.cfg.step)
            if isinstance(d, dsl.PointsDom):
                return Domain.finite(d.points)
            path = Path(d.path)
            if not path.is_absolute():
                path = self.base_dir / path
            t = FiniteTopology.load(path)
        except (OSError, ValueError) as exc:
            raise RunError(str(exc), d.span) from None
        bad = validate_topology(t)
        if bad is not None:
            raise RunError(f"{d.path}: not a topology, {bad}", d.span)
        return Domain.finite_topology(t)

    def seq(self, e: dsl.SeqExpr, dom: Domain, env: dict[str, float]) -> BaireSeq:
        if isinstance(e, dsl.Ref):
            if e.name in self.failed:
                raise RunError(f"{e.name!r} failed to bind", e.span)
            return _rehome(self.bindings[e.name], dom)
        if isinstance(e, dsl.SeqLit):
            if not _mentions(e.body, e.binder):
                return from_expr(_lift(compile_expr(e.body, env)), dom, tag=dsl.pp_seq(e))
            return from_sequence(
                lambda n: _lift(compile_expr(e.body, {**env, e.binder: n})), dom,
                tag=dsl.pp_seq(e))
        if isinstance(e, dsl.Comb):
            args = [self.seq(a, dom, env) for a in e.args]
            op = {"add": add, "mul": mul, "join": join, "meet": meet, "abs": absolute,
                  "neg": neg}[e.op]
            return op(*args)
        if isinstance(e, dsl.Recip):
            f = self.seq(e.arg, dom, env)
            if e.delta is not None:
                return reciprocal_positive(f, delta=e.delta)
            return reciprocal_positive(f, samples=dom.samples(), tol=self.cfg.tol)
        if isinstance(e, dsl.ComposeS):
            return _std(e, self.seq(e.arg, dom, env))
        if isinstance(e, dsl.Truncate):
            return truncate(self.seq(e.arg, dom, env), e.bound)
        if isinstance(e, dsl.Series):
            def bound(k):
                v = compile_expr(e.bound, {**env, e.binder: k})
                if not isinstance(v, float):
                    raise RunError("series bound may not depend on x", e.bound.span)
                return v
            return series_sum(lambda k: self.seq(e.body, dom, {**env, e.binder: k}), bound,
                              domain=dom)
        if isinstance(e, dsl.IntersectZ):
            return countable_intersection(
                lambda k: self.seq(e.body, dom, {**env, e.binder: k}), dom)
        raise RunError(f"unknown sequence expression {type(e).__name__}")

    def lookup(self, name: str, span) -> BaireSeq:
        if name in self.failed:
            raise RunError(f"{name!r} failed to bind", span)
        return self.bindings[name]

    def grid(self, f: BaireSeq) -> np.ndarray:
        return f.domain.samples(step=self.cfg.step)

    # statements

    def execute(self, s: dsl.Stmt) -> dict | None:
        if isinstance(s, dsl.Let):
            self.failed.discard(s.name)
            try:
                self.bindings[s.name] = self.seq(s.expr, self.domain(s.domain), {}).declare(
                    tag=s.name)
            except Exception:
                self.failed.add(s.name)
                raise
            return None
        handler = getattr(self, "cmd_" + type(s).__name__)
        return handler(s)

    def cmd_EvalCmd(self, c: dsl.EvalCmd) -> dict:
        f = self.lookup(c.name, c.span)
        tol = self.cfg.tol if c.tol is None else c.tol
        v, rep = eval_limit(f, c.at, tol, self.cfg.depth_cap)
        out = {"cmd": "eval", "name": c.name, "x": c.at, "value": v, "stable": rep.stable,
               "depth": rep.depth_used, "tol": tol}
        if rep.warning:
            out["warning"] = rep.warning
        return out

    def cmd_TableCmd(self, c: dsl.TableCmd) -> dict:
        if not c.step > 0 or c.stop < c.start:
            raise RunError("table needs step > 0 and from <= to", c.span)
        f = self.lookup(c.name, c.span)
        count = int(math.floor((c.stop - c.start) / c.step + 1e-9)) + 1
        xs = c.start + c.step * np.arange(count)
        vals, reps = eval_limit_many(f, xs, self.cfg.tol, self.cfg.depth_cap)
        rows = [{"x": float(x), "value": float(v), "stable": r.stable, "depth": r.depth_used}
                for x, v, r in zip(xs, vals, reps)]
        return {"cmd": "table", "name": c.name, "rows": rows}

    def cmd_ZeroSetCmd(self, c: dsl.ZeroSetCmd) -> dict:
        f = self.lookup(c.name, c.span)
        Z = zero_set(f, c.eps, self.grid(f), self.cfg.depth_cap)
        return {"cmd": "zeroset", "name": c.name, "eps": c.eps, "count": len(Z),
                "samples": list(Z.samples), "excluded": list(Z.excluded)}

    def cmd_SeparateCmd(self, c: dsl.SeparateCmd) -> dict:
        f, g = self.lookup(c.f, c.span), self.lookup(c.g, c.span)
        xs = self.grid(f)
        w = separation_witness(f, g, eps=DEFAULT_EPS, samples=xs)
        bad = w.violations(xs, tol=max(self.cfg.tol, 1e-9))
        return {"cmd": "separate", "f": c.f, "g": c.g, "ok": not bad, "violations": bad,
                "zero_f": list(w.low_set.samples), "zero_g": list(w.high_set.samples),
                "warnings": list(w.h.warnings)}

    def cmd_ExtendCmd(self, c: dsl.ExtendCmd) -> dict:
        f = self.lookup(c.name, c.span)
        X = self.lookup(c.ambient, c.span).domain
        rounds = 40 if c.rounds is None else c.rounds
        state = run_extension(f, c.points, X, rounds=rounds, x_samples=X.samples(step=self.cfg.step))
        y = state.y
        gy, _ = eval_limit_many(state.g, y, 1e-12, self.cfg.depth_cap)
        err = np.abs(gy - state.f_values)
        return {"cmd": "extend", "name": c.name, **state.trace_json(),
                "g_at_Y": gy.tolist(), "f_at_Y": state.f_values.tolist(),
                "max_error": float(err.max()), "within_bound": bool(err.max() <= state.bound + 1e-9)}

    def cmd_CheckCmd(self, c: dsl.CheckCmd) -> dict:
        fs = [self.lookup(a, c.span) for a in c.args]
        if c.kind == "zero-identities":
            rep = check_zero_identities(fs[0], fs[1], DEFAULT_EPS, self.grid(fs[0]))
            return {"cmd": "check", "kind": c.kind, **rep.to_json()}
        if c.kind == "ring":
            return {"cmd": "check", "kind": c.kind, **self._ring(*fs)}
        return {"cmd": "check", "kind": c.kind, **self._fsigma(fs[0], c.span)}

    def _ring(self, f: BaireSeq, g: BaireSeq) -> dict:
        xs = self.grid(f)
        tol, cap = self.cfg.tol, self.cfg.depth_cap
        fv, fr = eval_limit_many(f, xs, tol, cap)
        gv, gr = eval_limit_many(g, xs, tol, cap)
        stable = np.array([a.stable and b.stable for a, b in zip(fr, gr)])
        # a compound is not read before its operands have settled
        floor = np.array([max(a.depth_used, b.depth_used) for a, b in zip(fr, gr)])
        cases = {"add": (add(f, g), fv + gv), "mul": (mul(f, g), fv * gv),
                 "join": (join(f, g), np.maximum(fv, gv)), "meet": (meet(f, g), np.minimum(fv, gv)),
                 "neg": (neg(f), -fv), "abs": (absolute(f), np.abs(fv))}
        out, ok = {}, True
        for name, (h, expected) in cases.items():
            hv, hr = eval_limit_many(h, xs, tol, cap, min_depth=floor)
            st = stable & np.array([r.stable for r in hr])
            slack = 4 * tol * (1 + np.abs(fv) + np.abs(gv))
            bad = st & (np.abs(hv - expected) > slack)
            out[name] = {"passed": not bad.any(), "offending": xs[bad].tolist()}
            ok &= not bad.any()
        return {"passed": bool(ok), "operations": out, "excluded": xs[~stable].tolist()}

    def _fsigma(self, f: BaireSeq, span) -> dict:
        dom = f.domain
        if dom is None or dom.kind != "finite_topology":
            raise RunError("check fsigma needs a function on a finite topology", span)
        t = dom.topology
        vals, reps = eval_limit_many(f, np.arange(len(t.points), dtype=float), self.cfg.tol,
                                     self.cfg.depth_cap)
        if not all(r.stable for r in reps):
            raise RunError("limit did not stabilize at every point", span)
        # snap to the tolerance grid so limits equal up to tol compare exactly
        snapped = np.round(vals / self.cfg.tol) * self.cfg.tol + 0.0
        fn = FiniteRealFn({p: float(v) for p, v in zip(t.points, snapped)})
        rep = check_fsigma_characterization(fn, t)
        return {**rep.to_json(), "values": {p: fn.values[p] for p in t.points},
                "continuous": is_continuous(fn, t), "zero_set_gdelta": zero_set_is_gdelta(fn, t)}


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


@dataclass
class RunResult:
    reports: list[dict]
    ok: bool

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1


def run(script: dsl.Script, cfg: RunConfig | None = None, base_dir=None) -> RunResult:
    """Execute statements in order; a failing statement yields an error report and the run continues."""
    cfg = cfg or RunConfig()
    interp = Interpreter(cfg, base_dir)
    reports, ok = [], True
    for s in script.stmts:
        try:
            rep = interp.execute(s)
        except (B1Error, dsl.DslError, ValueError, ArithmeticError) as exc:
            ok = False
            span = getattr(exc, "span", None) or s.span
            if span == dsl.NOSPAN:
                span = s.span
            msg = exc.msg if isinstance(exc, dsl.DslError) else str(exc)
            rep = {"cmd": _cmd_name(s), "error": msg, "error_type": type(exc).__name__,
                   "line": span.line, "col": span.col}
        if rep is not None:
            reports.append(_clean(rep))
    return RunResult(reports, ok)


def run_source(src: str, cfg: RunConfig | None = None, base_dir=None) -> RunResult:
    try:
        script = dsl.parse(src)
    except dsl.DslError as exc:
        return RunResult([{"cmd": "parse", **exc.to_json()}], False)
    return run(script, cfg, base_dir)


def _cmd_name(s: dsl.Stmt) -> str:
    return {dsl.Let: "let", dsl.EvalCmd: "eval", dsl.TableCmd: "table", dsl.ZeroSetCmd: "zeroset",
            dsl.SeparateCmd: "separate", dsl.ExtendCmd: "extend", dsl.CheckCmd: "check"}[type(s)]


def format_reports(reports: list[dict], fmt: str = "json") -> str:
    """JSON lines, or CSV: table rows as x,value,stable,depth and everything else as key/value rows."""
    if fmt == "json":
        return "".join(json.dumps(r, allow_nan=False) + "\n" for r in reports)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for i, r in enumerate(reports):
        if r.get("cmd") == "table" and "rows" in r:
            w.writerow(["stmt", "name", "x", "value", "stable", "depth"])
            for row in r["rows"]:
                w.writerow([i, r["name"], row["x"], row["value"], row["stable"], row["depth"]])
        else:
            w.writerow(["stmt", "cmd", "key", "value"])
            for k, v in r.items():
                if k != "cmd":
                    cell = json.dumps(v, allow_nan=False) if isinstance(v, (list, dict)) else v
                    w.writerow([i, r["cmd"], k, cell])
    return buf.getvalue()
