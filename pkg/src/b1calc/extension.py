"""Extending Baire-one functions from a sampled subset Y to the whole domain X.

The bounded loop: with r_n = (m/2)(2/3)^n, split the current residual f_n on
Y into A_n = {f_n <= -r_n} and B_n = {f_n >= r_n}, ask a separation oracle
for g_n on X with g_n = -r_n on A_n, r_n on B_n and |g_n| <= r_n, and set
f_{n+1} = f_n - g_n on Y. The extension is the series of the g_n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .continuous import Domain, SampledSet, urysohn_separator
from .errors import ExtensionError, PreconditionError
from .sequences import (
    ARCTAN, TAN, BaireSeq, absolute, add, compose_continuous, const_seq, eval_limit_many,
    from_expr, join, meet, mul, reciprocal_positive, series_sum,
)
from .zerosets import SeparationWitness, normalize_separation, zero_set

THRESHOLD_TOL = 1e-12
ORACLE_TOL = 1e-9

SeparationOracle = Callable[[SampledSet, SampledSet, float], BaireSeq]


def metric_oracle(A: SampledSet, B: SampledSet, r: float, domain: Domain | None = None) -> BaireSeq:
    """Distance-based separator; a constant when one side is empty."""
    if len(A) == 0 and len(B) == 0:
        return const_seq(0.0, domain)
    if len(A) == 0:
        return const_seq(r, domain)
    if len(B) == 0:
        return const_seq(-r, domain)
    return from_expr(urysohn_separator(A, B, r), domain, bound=r, tag="urysohn")


def r_sequence(m: float, rounds: int) -> list[float]:
    """r_1 .. r_{rounds+1} with r_1 = m/3 and r_{n+1} = 2 r_n / 3."""
    rs = [m / 3.0]
    for _ in range(rounds):
        rs.append(rs[-1] * 2.0 / 3.0)
    return rs


def rounds_for_tolerance(m: float, target: float) -> int:
    """Smallest N with 3 r_{N+1} <= target."""
    if not target > 0:
        raise PreconditionError("target tolerance must be positive")
    # 3 r_{N+1} = m (2/3)^N
    return max(1, math.ceil(math.log(target / m) / math.log(2.0 / 3.0)))


@dataclass
class RoundRecord:
    n: int
    r_n: float
    a_count: int
    b_count: int
    sup_residual: float

    def to_json(self) -> dict:
        return {"n": self.n, "r_n": self.r_n, "|A_n|": self.a_count, "|B_n|": self.b_count,
                "sup_residual": self.sup_residual}


@dataclass
class ExtensionState:
    m: float
    y: np.ndarray
    f_values: np.ndarray
    round: int = 0
    r: float = 0.0
    residual: np.ndarray | None = None
    separators: list[BaireSeq] = field(default_factory=list)
    history: list[float] = field(default_factory=list)
    records: list[RoundRecord] = field(default_factory=list)
    g: BaireSeq | None = None
    final_sup: float = 0.0
    bound: float = 0.0

    def trace_json(self) -> dict:
        return {"m": self.m, "rounds": self.round, "Y": self.y.tolist(),
                "trace": [r.to_json() for r in self.records],
                "final_sup_residual": self.final_sup, "bound": self.bound}


def _verify_oracle(s: BaireSeq, A, B, r, check_points, n):
    if len(A):
        v, _ = eval_limit_many(s, A.array, ORACLE_TOL / 10)
        if np.any(np.abs(v + r) > ORACLE_TOL):
            raise ExtensionError(f"round {n}: oracle output is not -r_n on A_n", n)
    if len(B):
        v, _ = eval_limit_many(s, B.array, ORACLE_TOL / 10)
        if np.any(np.abs(v - r) > ORACLE_TOL):
            raise ExtensionError(f"round {n}: oracle output is not r_n on B_n", n)
    v, _ = eval_limit_many(s, check_points, ORACLE_TOL / 10)
    if np.any(np.abs(v) > r + ORACLE_TOL):
        raise ExtensionError(f"round {n}: oracle output leaves [-r_n, r_n]", n)


def run_extension(f: BaireSeq, Y, X: Domain, oracle: SeparationOracle | None = None,
                  rounds: int = 40, m: float | None = None, tol: float = 1e-12,
                  x_samples=None) -> ExtensionState:
    """Run the bounded extension loop and keep the full state and trace."""
    if rounds < 1:
        raise PreconditionError("need at least one round")
    y = Y.array if isinstance(Y, SampledSet) else np.asarray(list(Y), dtype=float)
    if y.size == 0:
        raise PreconditionError("Y has no samples")
    if not np.all(X.contains(y)):
        raise PreconditionError("Y is not inside X")
    xs = X.samples() if x_samples is None else np.asarray(x_samples, dtype=float)
    check_points = np.union1d(xs, y)
    if oracle is None:
        oracle = lambda A, B, r: metric_oracle(A, B, r, X)

    f_values, _ = eval_limit_many(f, y, tol)
    observed = float(np.max(np.abs(f_values)))
    if m is None:
        m = f.bound if f.bound is not None else observed
    if observed > m * (1 + 1e-12):
        raise PreconditionError(f"declared bound m = {m} is below sup |f| on Y = {observed}")
    if m == 0:
        m = 1.0

    rs = r_sequence(m, rounds)
    state = ExtensionState(m=m, y=y, f_values=f_values, residual=f_values.copy())
    for n in range(1, rounds + 1):
        r = rs[n - 1]
        res = state.residual
        sup = float(np.max(np.abs(res)))
        if sup > 3 * r + ORACLE_TOL:
            raise ExtensionError(f"round {n}: sup |f_n| = {sup} exceeds 3 r_n = {3 * r}", n)
        a_mask = res <= -r + THRESHOLD_TOL
        b_mask = res >= r - THRESHOLD_TOL
        A = SampledSet.of(y[a_mask], X)
        B = SampledSet.of(y[b_mask], X)
        if not a_mask.any() and not b_mask.any():
            g_n = const_seq(0.0, X)
        else:
            g_n = oracle(A, B, r)
            _verify_oracle(g_n, A, B, r, check_points, n)
        gy, _ = eval_limit_many(g_n, y, ORACLE_TOL / 10)
        new = res - gy
        if np.max(np.abs(new)) > 2 * r + ORACLE_TOL:
            raise ExtensionError(f"round {n}: |f_(n+1)| exceeds 2 r_n", n)
        state.history.append(sup)
        state.records.append(RoundRecord(n, r, int(a_mask.sum()), int(b_mask.sum()), sup))
        state.separators.append(g_n)
        state.residual, state.round, state.r = new, n, r

    seps = list(state.separators)
    state.g = series_sum(lambda k: seps[k - 1], lambda k: rs[k - 1], length=rounds,
                         domain=X).declare(tag="extension")
    state.final_sup = float(np.max(np.abs(state.residual)))
    state.bound = 3 * rs[rounds]
    return state


def extend_bounded(f: BaireSeq, Y, X: Domain, oracle: SeparationOracle | None = None,
                   rounds: int = 40, m: float | None = None) -> BaireSeq:
    """Bounded extension of f from Y to X; off by at most 3 r_{N+1} on Y."""
    return run_extension(f, Y, X, oracle, rounds, m).g


def clamp_extension(g: BaireSeq, n: float, f_values=None) -> BaireSeq:
    """(-n v g) ^ n: a bounded extension when |f| <= n on Y."""
    if f_values is not None:
        sup = float(np.max(np.abs(np.asarray(f_values, dtype=float))))
        if n < sup:
            raise PreconditionError(f"clamp level {n} is below sup |f| on Y = {sup}")
    h = meet(join(const_seq(-n, g.domain), g), const_seq(n, g.domain))
    return h.declare(bound=float(n), tag=f"clamp_extension({n:g})")


@dataclass
class UnboundedExtension:
    result: BaireSeq
    bounded: ExtensionState
    Z: SampledSet
    cutoff: BaireSeq


def run_unbounded(f: BaireSeq, Y, X: Domain, oracle: SeparationOracle | None = None,
                  rounds: int = 40, x_samples=None) -> UnboundedExtension:
    if oracle is None:
        oracle = lambda A, B, r: metric_oracle(A, B, r, X)
    y = Y.array if isinstance(Y, SampledSet) else np.asarray(list(Y), dtype=float)
    af = compose_continuous(ARCTAN, f)
    state = run_extension(af, y, X, oracle, rounds, m=math.pi / 2, x_samples=x_samples)
    g = state.g
    xs = X.samples() if x_samples is None else np.asarray(x_samples, dtype=float)
    gv, _ = eval_limit_many(g, xs, 1e-12)
    Z = SampledSet.of(xs[np.abs(gv) >= math.pi / 2], X)
    if len(Z) and np.any(np.isclose(y[:, None], Z.array[None, :], rtol=0, atol=1e-12)):
        raise PreconditionError("the level set {|g| >= pi/2} meets Y at sample resolution")
    if len(Z) == 0:
        h = const_seq(1.0, X)
    else:
        s = oracle(Z, SampledSet.of(y, X), 0.5)
        _verify_oracle(s, Z, SampledSet.of(y, X), 0.5, np.union1d(xs, y), 0)
        h = add(s, const_seq(0.5, X)).declare(bound=1.0)
    # every term of g is a finite sum of clamped separators, so |g_n h_n| <= sum r_k < pi/2
    gh = mul(g, h)
    result = compose_continuous(TAN, gh, range_bound=g.bound).declare(tag="extension_unbounded")
    return UnboundedExtension(result, state, Z, h)


def extend_unbounded(f: BaireSeq, Y, X: Domain, oracle: SeparationOracle | None = None,
                     rounds: int = 40) -> BaireSeq:
    """Extension of a possibly unbounded f via arctan, a cutoff away from |g| = pi/2, and tan."""
    return run_unbounded(f, Y, X, oracle, rounds).result


def restrict(f: BaireSeq, Y) -> BaireSeq:
    """f viewed on the finite metric domain Y."""
    y = Y.array if isinstance(Y, SampledSet) else np.asarray(list(Y), dtype=float)
    return BaireSeq(f.term, Domain.finite(y), modulus=f.modulus, bound=f.bound,
                    tag=f"{f.tag}|Y", warnings=f.warnings)


def separate_embedded_from_zeroset(Y, f: BaireSeq, oracle: SeparationOracle | None = None,
                                   rounds: int = 40, X: Domain | None = None,
                                   eps: float = 1e-9) -> SeparationWitness:
    """Witness that Y and Z(f) are completely separated: |f| times an extension of 1/|f| from Y."""
    X = X or f.domain
    if X is None:
        raise PreconditionError("need the ambient domain X")
    y = Y.array if isinstance(Y, SampledSet) else np.asarray(list(Y), dtype=float)
    fy, _ = eval_limit_many(f, y, eps / 10)
    low = float(np.min(np.abs(fy)))
    if low <= eps:
        raise PreconditionError("Z(f) meets Y at sample resolution")
    # Y is finite, so the sampled minimum is the true minimum on Y
    h = reciprocal_positive(absolute(restrict(f, y)), delta=low / 2)
    g = extend_unbounded(h, y, X, oracle, rounds)
    w = normalize_separation(mul(absolute(f), g), 0.0, 1.0)
    Zf = zero_set(f, eps, X.samples())
    return SeparationWitness(w, Zf, SampledSet.of(y, X), 0.0, 1.0)
