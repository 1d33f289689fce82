"""Baire-one functions as lazily generated sequences of continuous expressions.

A :class:`BaireSeq` never stores its limit. Limits are read off by
:func:`eval_limit`, either at the depth a convergence modulus certifies or by a
doubling schedule that reports whether the tail looked stable.

Moduli take ``(tol, xs)`` and return a depth (an int, or an int array shaped
like ``xs`` for per-point moduli) such that every term at that depth or deeper
is within ``tol`` of the limit.
"""
from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .continuous import (
    Abs, Add, Clamp, Compose, Const, Domain, Expr, Mul, Neg, Sum, eval_cont,
)
from .errors import BoundError, DomainError, PreconditionError

DEPTH_CAP = 2 ** 20
WINDOW = 3
# a window over depths 16, 32, 64 is much harder to fool than one over 1, 2, 4
DOUBLING_START = 16
TINY = np.finfo(float).tiny

Modulus = Callable[[float, np.ndarray], "int | np.ndarray"]


class Uncertified(Exception):
    """Raised by a modulus that cannot certify a depth; ``floor`` is a depth worth starting from."""

    def __init__(self, floor: int = 1):
        super().__init__(floor)
        self.floor = int(floor)


def default_depth_cap() -> int:
    env = os.environ.get("B1CALC_DEPTH_CAP")
    return int(env) if env else DEPTH_CAP


@dataclass
class ConvergenceReport:
    depth_used: int
    window: tuple[float, ...]
    stable: bool
    tol: float
    warning: str | None = None


class BaireSeq:
    """n -> ContinuousExpr with optional modulus, declared bound and provenance tag.

    Terms are memoized; the memo only ever grows and is guarded by a lock so a
    sequence can be shared between threads.
    """

    def __init__(self, gen: Callable[[int], Expr], domain: Domain | None = None,
                 modulus: Modulus | None = None, bound: float | None = None,
                 tag: str = "seq", warnings: Sequence[str] = ()):
        self._gen = gen
        self.domain = domain
        self.modulus = modulus
        self.bound = bound
        self.tag = tag
        self.warnings = list(warnings)
        self._memo: dict[int, Expr] = {}
        self._lock = threading.Lock()

    def term(self, n: int) -> Expr:
        n = int(n)
        if n < 1:
            raise PreconditionError(f"terms are indexed from 1, got {n}")
        with self._lock:
            hit = self._memo.get(n)
        if hit is not None:
            return hit
        e = self._gen(n)
        with self._lock:
            return self._memo.setdefault(n, e)

    def declare(self, *, bound=..., modulus=..., tag=None, warnings=None) -> BaireSeq:
        """Copy with metadata replaced; shares the generator."""
        return BaireSeq(
            self._gen, self.domain,
            modulus=self.modulus if modulus is ... else modulus,
            bound=self.bound if bound is ... else bound,
            tag=tag or self.tag,
            warnings=self.warnings if warnings is None else warnings,
        )

    def __repr__(self):
        return f"BaireSeq(tag={self.tag!r}, bound={self.bound!r}, modulus={'yes' if self.modulus else 'no'})"

    def __call__(self, x, tol: float = 1e-6):
        return eval_limit(self, x, tol)[0]

    def __add__(self, other):
        return add(self, _seq(other, self))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _seq(other, self))

    def __rsub__(self, other):
        return sub(_seq(other, self), self)

    def __mul__(self, other):
        return mul(self, _seq(other, self))

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __abs__(self):
        return absolute(self)


def _seq(v, like: BaireSeq) -> BaireSeq:
    return v if isinstance(v, BaireSeq) else const_seq(float(v), like.domain)


# -- constructors ---------------------------------------------------------

def from_sequence(gen: Callable[[int], Expr], domain: Domain | None = None,
                  modulus: Modulus | None = None, bound: float | None = None,
                  tag: str = "from_sequence") -> BaireSeq:
    """Wrap a generator. Convergence is not checked here; it surfaces at evaluation."""
    return BaireSeq(gen, domain, modulus=modulus, bound=bound, tag=tag)


def from_expr(e: Expr, domain: Domain | None = None, bound: float | None = None,
              tag: str = "continuous") -> BaireSeq:
    """A continuous function as the constant sequence e, e, e, ..."""
    return BaireSeq(lambda n: e, domain, modulus=_const_modulus, bound=bound, tag=tag)


def const_seq(c: float, domain: Domain | None = None) -> BaireSeq:
    return from_expr(Const(float(c)), domain, bound=abs(float(c)), tag=f"const({c:g})")


def _const_modulus(tol, xs):
    return 1


# -- evaluation -----------------------------------------------------------

def _pow2_ceil(d):
    d = np.maximum(np.asarray(d, dtype=float), 1.0)
    return np.exp2(np.ceil(np.log2(d))).astype(np.int64)


def eval_limit_many(f: BaireSeq, xs, tol: float = 1e-6, depth_cap: int | None = None,
                    min_depth=None) -> tuple[np.ndarray, list[ConvergenceReport]]:
    """Vectorized :func:`eval_limit` over an array of points.

    ``min_depth`` (scalar or per point) raises the first depth of the doubling
    schedule; a certified modulus ignores it.
    """
    if not tol > 0:
        raise PreconditionError(f"tol must be positive, got {tol}")
    xs = np.atleast_1d(np.asarray(xs, dtype=float)).ravel()
    if min_depth is not None and np.ndim(min_depth) > 0 and f.modulus is None:
        floors = _pow2_ceil(np.asarray(min_depth).ravel())
        values = np.empty(xs.size)
        reports: list = [None] * xs.size
        for d in np.unique(floors):
            idx = np.nonzero(floors == d)[0]
            v, r = eval_limit_many(f, xs[idx], tol, depth_cap, int(d))
            values[idx] = v
            for i, rep in zip(idx, r):
                reports[i] = rep
        return values, reports
    if f.domain is not None and xs.size and not np.all(f.domain.contains(xs)):
        raise DomainError(f"point(s) outside domain of {f.tag}")
    cap = default_depth_cap() if depth_cap is None else int(depth_cap)
    values = np.empty(xs.size)
    reports: list[ConvergenceReport | None] = [None] * xs.size
    if xs.size == 0:
        return values, []

    start = min(max(DOUBLING_START, int(_pow2_ceil(min_depth or 1))), cap)
    depths = None
    if f.modulus is not None:
        try:
            depths = f.modulus(tol, xs)
        except Uncertified as u:
            start = int(_pow2_ceil(min(max(u.floor, start), cap)))
    if depths is not None:
        # certified depth; rounding up to a power of two keeps memo hits high
        depths = np.broadcast_to(_pow2_ceil(depths), xs.shape)
        for d in np.unique(depths):
            idx = np.nonzero(depths == d)[0]
            v = eval_cont(f.term(int(d)), xs[idx])
            values[idx] = v
            for i, val in zip(idx, v):
                reports[i] = ConvergenceReport(int(d), (float(val),), True, tol)
        return values, reports

    window = np.full((xs.size, WINDOW), np.nan)
    seen = np.zeros(xs.size, dtype=int)
    active = np.arange(xs.size)
    d = start
    while active.size:
        v = eval_cont(f.term(d), xs[active])
        window[active, :-1] = window[active, 1:]
        window[active, -1] = v
        seen[active] += 1
        values[active] = v
        w = window[active]
        with np.errstate(invalid="ignore"):
            spread = w.max(axis=1) - w.min(axis=1)
        done = (seen[active] >= WINDOW) & (spread <= tol / 2)
        for i in active[done]:
            reports[i] = ConvergenceReport(d, tuple(window[i].tolist()), True, tol)
        active = active[~done]
        if d * 2 > cap:
            for i in active:
                reports[i] = ConvergenceReport(
                    d, tuple(window[i].tolist()), False, tol,
                    warning=f"no stable window of {WINDOW} by depth cap {cap}")
            break
        d *= 2
    return values, reports


def eval_limit(f: BaireSeq, x: float, tol: float = 1e-6, depth_cap: int | None = None
               ) -> tuple[float, ConvergenceReport]:
    """Approximate lim f_n(x).

    With a modulus the term at the certified depth is returned and marked
    stable. Otherwise depths 16, 32, 64, ... are tried until the last three values
    spread by at most tol/2; reaching the cap returns the last value with
    ``stable=False``.
    """
    values, reports = eval_limit_many(f, [x], tol, depth_cap)
    return float(values[0]), reports[0]


# -- ring and lattice -----------------------------------------------------

def _common_domain(*fs: BaireSeq) -> Domain | None:
    dom = None
    for f in fs:
        if f.domain is None:
            continue
        if dom is None:
            dom = f.domain
        elif f.domain != dom:
            raise DomainError(f"domain mismatch: {dom.to_json()} vs {f.domain.to_json()}")
    return dom


def _warn(*fs: BaireSeq) -> list[str]:
    return list(dict.fromkeys(w for f in fs for w in f.warnings))


def _both(a, b, op):
    return None if a is None or b is None else op(a, b)


def _max_modulus(*parts):
    """Combine (modulus, tol_scale) pairs into a single modulus, or None."""
    if any(m is None for m, _ in parts):
        return None

    def modulus(tol, xs):
        out = 1
        for m, scale in parts:
            out = np.maximum(out, m(scale(tol), xs))
        return out
    return modulus


def _same(t):
    return t


def add(f: BaireSeq, g: BaireSeq) -> BaireSeq:
    dom = _common_domain(f, g)
    return BaireSeq(lambda n: Add(f.term(n), g.term(n)), dom,
                    modulus=_max_modulus((f.modulus, lambda t: t / 2), (g.modulus, lambda t: t / 2)),
                    bound=_both(f.bound, g.bound, lambda a, b: a + b),
                    tag=f"add({f.tag},{g.tag})", warnings=_warn(f, g))


def neg(f: BaireSeq) -> BaireSeq:
    return BaireSeq(lambda n: Neg(f.term(n)), f.domain, modulus=f.modulus, bound=f.bound,
                    tag=f"neg({f.tag})", warnings=f.warnings)


def sub(f: BaireSeq, g: BaireSeq) -> BaireSeq:
    return add(f, neg(g))


def absolute(f: BaireSeq) -> BaireSeq:
    return BaireSeq(lambda n: Abs(f.term(n)), f.domain, modulus=f.modulus, bound=f.bound,
                    tag=f"abs({f.tag})", warnings=f.warnings)


def mul(f: BaireSeq, g: BaireSeq) -> BaireSeq:
    """Termwise product. A modulus is derived only when both bounds are declared."""
    dom = _common_domain(f, g)
    modulus = None
    if f.bound is not None and g.bound is not None:
        # |f_n g_n - fg| <= |f_n - f|(|g| + 1) + |f||g_n - g| once |g_n - g| <= 1
        mf, mg = f.bound, g.bound
        modulus = _max_modulus((f.modulus, lambda t: min(1.0, t / (2 * (mg + 1)))),
                               (g.modulus, lambda t: min(1.0, t / (2 * (mf + 1)))))
    return BaireSeq(lambda n: Mul(f.term(n), g.term(n)), dom, modulus=modulus,
                    bound=_both(f.bound, g.bound, lambda a, b: a * b),
                    tag=f"mul({f.tag},{g.tag})", warnings=_warn(f, g))


def _lattice(f, g, sign, name):
    dom = _common_domain(f, g)

    def gen(n):
        a, b = f.term(n), g.term(n)
        return Mul(Const(0.5), Add(Add(a, b), _signed(Abs(Add(a, Neg(b))), sign)))
    return BaireSeq(gen, dom, modulus=_max_modulus((f.modulus, _same), (g.modulus, _same)),
                    bound=_both(f.bound, g.bound, max), tag=f"{name}({f.tag},{g.tag})",
                    warnings=_warn(f, g))


def _signed(e, sign):
    return e if sign > 0 else Neg(e)


def join(f: BaireSeq, g: BaireSeq) -> BaireSeq:
    """f v g = ((f + g) + |f - g|) / 2, built termwise."""
    return _lattice(f, g, +1, "join")


def meet(f: BaireSeq, g: BaireSeq) -> BaireSeq:
    """f ^ g = ((f + g) - |f - g|) / 2, built termwise."""
    return _lattice(f, g, -1, "meet")


# -- closure constructions ------------------------------------------------

def _sample_points(f: BaireSeq, samples) -> np.ndarray:
    if samples is not None:
        return np.asarray(samples, dtype=float)
    if f.domain is None:
        raise PreconditionError("no certificate given and no domain to sample")
    return f.domain.samples()


def reciprocal_positive(f: BaireSeq, delta: float | None = None, samples=None,
                        tol: float = 1e-9, negative: bool = False) -> BaireSeq:
    """1/f for a strictly signed f, as the limit of 1 / (|f_n| + 1/n).

    ``delta`` certifies |f| >= delta everywhere (sign taken from ``negative``).
    Without it the sign and positivity are checked at samples, which is
    recorded as a warning on the result. A negative f is handled as -(1/(-f)).
    """
    warnings = []
    if delta is not None:
        if not delta > 0:
            raise PreconditionError(f"delta must be positive, got {delta}")
    else:
        xs = _sample_points(f, samples)
        vals, reps = eval_limit_many(f, xs, tol)
        if np.all(vals > tol):
            negative = False
        elif np.all(vals < -tol):
            negative = True
        else:
            i = int(np.argmin(np.abs(vals)))
            raise PreconditionError(
                f"limit is not strictly signed at samples: f({xs[i]:.6g}) = {vals[i]:.3g}")
        warnings.append("sign and nonvanishing checked only at sampled points")
        if not all(r.stable for r in reps):
            warnings.append("positivity check inconclusive: unstable samples")
    base = neg(f) if negative else f

    def gen(n):
        return Compose("reciprocal_nonzero", Add(Abs(base.term(n)), Const(1.0 / n)), delta=1.0 / n)

    modulus = None
    if delta is not None and base.modulus is not None:
        def modulus(tol, xs):
            # |f_n - f| < eta and 1/n <= eta keep |f_n| + 1/n >= delta/2 and the error below tol
            eta = min(delta / 4, tol * delta * delta / 4)
            return np.maximum(base.modulus(eta, xs), math.ceil(1.0 / eta))
    out = BaireSeq(gen, f.domain, modulus=modulus,
                   bound=None if delta is None else 1.0 / delta,
                   tag=f"recip({f.tag})", warnings=warnings)
    return neg(out).declare(warnings=warnings) if negative else out


@dataclass(frozen=True)
class Std:
    """A continuous real function usable in compositions."""

    name: str
    params: tuple[float, ...] = ()

    @property
    def total(self) -> bool:
        return self.name in ("arctan", "affine") or (self.name == "power" and _is_nat(self.params[0]))

    def apply(self, e: Expr, delta: float | None = None) -> Expr:
        return Compose(self.name, e, self.params, delta)

    def value_bound(self, bound: float | None) -> float | None:
        if self.name == "arctan":
            return math.pi / 2
        if bound is None:
            return None
        if self.name == "affine":
            a, b = self.params
            return abs(a) * bound + abs(b)
        if self.name == "power":
            return bound ** self.params[0]
        if self.name == "tan_restricted":
            return math.tan(bound)
        return None

    def lipschitz(self, bound: float | None) -> float | None:
        """Lipschitz constant on [-bound-1, bound+1] (restricted tan: on [-bound, bound])."""
        if self.name == "arctan":
            return 1.0
        if self.name == "affine":
            return abs(self.params[0]) or 1.0
        if bound is None:
            return None
        if self.name == "power" and _is_nat(self.params[0]):
            k = self.params[0]
            return max(1.0, k * (bound + 1) ** (k - 1))
        if self.name == "tan_restricted" and bound < math.pi / 2:
            return 1.0 / math.cos(bound) ** 2
        return None


def _is_nat(k) -> bool:
    return float(k).is_integer() and k >= 1


ARCTAN = Std("arctan")
TAN = Std("tan_restricted")


def affine(a: float, b: float) -> Std:
    return Std("affine", (float(a), float(b)))


def power(k: float) -> Std:
    return Std("power", (float(k),))


def compose_continuous(g: Std, f: BaireSeq, range_bound: float | None = None,
                       delta: float | None = None) -> BaireSeq:
    """g o f, termwise. Partial g needs a certificate on the range of every term.

    ``range_bound`` certifies |f_n| <= range_bound for all n (required for the
    restricted tangent, which needs range_bound < pi/2); ``delta`` certifies
    |f_n| >= delta for the reciprocal.
    """
    if g.name == "tan_restricted":
        if range_bound is None or not range_bound < math.pi / 2:
            raise PreconditionError("tan needs a term bound below pi/2")
        cert = math.pi / 2 - range_bound
    elif g.name == "reciprocal_nonzero":
        if delta is None:
            raise PreconditionError("reciprocal needs a nonvanishing certificate delta")
        cert = delta
    elif g.name == "power" and not _is_nat(g.params[0]) and range_bound is None:
        raise PreconditionError("non-integer power is partial; certify the range")
    else:
        cert = None
    # a term bound caps the limit too
    lim_bound = f.bound if range_bound is None else min(range_bound, f.bound or math.inf)
    lip = g.lipschitz(range_bound if g.name == "tan_restricted" else lim_bound)
    modulus = None
    if lip is not None and f.modulus is not None:
        fm = f.modulus
        modulus = lambda tol, xs: fm(min(1.0, tol / lip), xs)
    return BaireSeq(lambda n: g.apply(f.term(n), cert), f.domain, modulus=modulus,
                    bound=g.value_bound(lim_bound), tag=f"{g.name}({f.tag})",
                    warnings=f.warnings)


def truncate(f: BaireSeq, M: float) -> BaireSeq:
    """Clamp every term into [-M, M]; the limit is unchanged wherever |f| <= M."""
    if not M > 0:
        raise PreconditionError(f"truncation bound must be positive, got {M}")
    M = float(M)
    bound = M if f.bound is None else min(f.bound, M)
    return BaireSeq(lambda n: Clamp(f.term(n), M), f.domain, modulus=f.modulus, bound=bound,
                    tag=f"truncate({f.tag},{M:g})", warnings=f.warnings)


def _summability(Ms: Callable[[int], float]) -> str | None:
    """Partial-sum Cauchy test on the bound sequence; raises if it looks divergent."""
    s, checkpoints, k = 0.0, {}, 0
    for j in range(1, 17):
        while k < 2 ** j:
            k += 1
            s += Ms(k)
        checkpoints[j] = s
    tail = checkpoints[16] - checkpoints[15]
    if not math.isfinite(s) or tail > 1e-6 * max(1.0, s):
        raise BoundError(f"bounds do not look summable (partial sums 2^15..2^16 grow by {tail:.3g})")
    return "summability of bounds checked by partial sums only"


def series_sum(fs: Callable[[int], BaireSeq], Ms: Callable[[int], float] | None,
               length: int | None = None, total: float | None = None,
               domain: Domain | None = None) -> BaireSeq:
    """Sum_k f_k realised by the diagonal h_n = f_{1,n} + ... + f_{n,n}.

    ``Ms`` gives the bound of each summand (required). Each summand is clamped
    to its bound before diagonalizing. ``length`` makes the series finite;
    ``total`` declares a closed form for Sum M_k, otherwise summability is
    checked by partial sums and a warning recorded.
    """
    if Ms is None:
        raise BoundError("series_sum needs explicit bounds M_k")
    warnings = []
    if length is None and total is None:
        warnings.append(_summability(Ms))
    if length is not None:
        total = math.fsum(Ms(k) for k in range(1, length + 1))

    comps: dict[int, BaireSeq] = {}
    lock = threading.Lock()

    def comp(k: int) -> BaireSeq:
        with lock:
            hit = comps.get(k)
        if hit is not None:
            return hit
        Mk = float(Ms(k))
        if k > 1 and 0 <= Mk < TINY:
            # bound underflowed: the summand is numerically zero
            with lock:
                return comps.setdefault(k, const_seq(0.0, domain))
        fk = fs(k)
        if not Mk > 0:
            raise BoundError(f"M_{k} must be positive, got {Mk}")
        if fk.bound is not None and fk.bound > Mk * (1 + 1e-12) + TINY:
            raise BoundError(f"summand {k} declares bound {fk.bound} > M_{k} = {Mk}")
        with lock:
            return comps.setdefault(k, truncate(fk, Mk))

    def gen(n):
        K = n if length is None else min(n, length)
        return Sum(tuple(comp(k).term(n) for k in range(1, K + 1)))

    modulus = None
    if length is not None:
        parts = [comp(k) for k in range(1, length + 1)]
        domain = _common_domain(*parts) or domain
        if all(p.modulus is not None for p in parts):
            def modulus(tol, xs):
                out = length
                for p in parts:
                    out = np.maximum(out, p.modulus(tol / length, xs))
                return out
    else:
        if domain is None:
            domain = comp(1).domain

        def modulus(tol, xs):
            # beyond N the clamped tail contributes at most 2 * tail(N) <= tol/2
            N = _tail_index(Ms, total, tol / 4)
            out = N
            for k in range(1, N + 1):
                p = comp(k)
                if p.modulus is None:
                    raise Uncertified(N)
                out = np.maximum(out, p.modulus(tol / (2 * N), xs))
            return out
    return BaireSeq(gen, domain, modulus=modulus, bound=total,
                    tag="series", warnings=warnings)


TAIL_SEARCH = 2 ** 20


def _tail_index(Ms, total, target) -> int:
    """Smallest N with total - (M_1 + ... + M_N) <= target.

    Without a declared total the tail cannot be certified; the partial sum at
    2^16 terms stands in for it and the caller gets :class:`Uncertified`.
    """
    certified = total is not None
    if not certified:
        total = math.fsum(Ms(k) for k in range(1, 2 ** 16 + 1))
    s, comp = 0.0, 0.0
    for k in range(1, TAIL_SEARCH + 1):
        # Kahan summation keeps the running tail honest for long series
        y = Ms(k) - comp
        t = s + y
        comp = (t - s) - y
        s = t
        if total - s <= target:
            if not certified:
                raise Uncertified(k)
            return k
    raise Uncertified(TAIL_SEARCH)


def _first_below(err, target, start, limit):
    """Smallest m >= start with err(m) < target, assuming err is nonincreasing."""
    prev, lo = err(start), start
    if prev < target:
        return start
    step, hi = 1, None
    while hi is None:
        m = lo + step
        if m > limit:
            raise PreconditionError(f"err does not drop below {target:g} before index {limit}")
        e = err(m)
        if e > prev * (1 + 1e-12):
            raise PreconditionError(f"err must be nonincreasing, err({m}) = {e} > {prev}")
        if e < target:
            hi = m
        else:
            lo, prev, step = m, e, step * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if err(mid) < target:
            hi = mid
        else:
            lo = mid
    return hi


def uniform_limit(fs: Callable[[int], BaireSeq], err: Callable[[int], float],
                  max_index: int = 2 ** 62) -> BaireSeq:
    """Limit of a uniformly convergent sequence of Baire-one functions.

    ``err(m)`` bounds sup |f_m - f| and must decrease to 0. Picks the first
    n_k with err(n_k) < 2^-k and sums the telescoping differences with bounds
    (3/2) 2^-k, plus f_{n_1}.
    """
    picks: list[int] = []
    cache: dict[int, BaireSeq] = {}
    lock = threading.Lock()

    def pick(k):
        with lock:
            while len(picks) < k:
                start = picks[-1] if picks else 1
                picks.append(_first_below(err, 2.0 ** -(len(picks) + 1), start, max_index))
            return picks[k - 1]

    def f_at(m):
        with lock:
            if m not in cache:
                cache[m] = fs(m)
            return cache[m]

    def diff(k):
        Mk = 1.5 * 2.0 ** -k
        d = sub(f_at(pick(k + 1)), f_at(pick(k)))
        return d.declare(bound=Mk, tag=f"telescope({k})")

    head = f_at(pick(1))
    tail = series_sum(diff, lambda k: 1.5 * 2.0 ** -k, total=1.5, domain=head.domain)
    out = add(head, tail)
    return out.declare(tag="uniform_limit")
