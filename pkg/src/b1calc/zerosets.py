"""Epsilon zero sets over sampled domains and the constructions built on them.

Zero detection in floating point is a tolerance test: a sample belongs to
Z(f) when the limit, evaluated at tol = eps/10, has magnitude at most eps.
Samples whose evaluation never stabilized are listed in ``excluded``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .continuous import Domain, SampledSet, sampled_gap
from .errors import PreconditionError
from .sequences import (
    BaireSeq, absolute, add, affine, compose_continuous, const_seq, eval_limit, eval_limit_many,
    join, meet, mul, neg, reciprocal_positive, series_sum, sub,
)

DEFAULT_EPS = 1e-9
N_INTER = 20


def _grid(f: BaireSeq, samples) -> np.ndarray:
    if samples is not None:
        return np.atleast_1d(np.asarray(samples, dtype=float))
    if f.domain is None:
        raise PreconditionError(f"{f.tag} has no domain; pass samples explicitly")
    return f.domain.samples()


def zero_mask(f: BaireSeq, xs: np.ndarray, eps: float = DEFAULT_EPS, depth_cap=None):
    """(member mask, unstable mask) over ``xs``."""
    vals, reps = eval_limit_many(f, xs, eps / 10, depth_cap)
    stable = np.array([r.stable for r in reps], dtype=bool)
    return stable & (np.abs(vals) <= eps), ~stable


def zero_set(f: BaireSeq, eps: float = DEFAULT_EPS, samples=None, depth_cap=None) -> SampledSet:
    if not eps > 0:
        raise PreconditionError(f"eps must be positive, got {eps}")
    xs = _grid(f, samples)
    member, unstable = zero_mask(f, xs, eps, depth_cap)

    def predicate(x):
        v, rep = eval_limit(f, x, eps / 10, depth_cap)
        return rep.stable and abs(v) <= eps

    return SampledSet(f.domain, tuple(xs[member].tolist()), predicate, eps,
                      tuple(xs[unstable].tolist()))


def power_of(f: BaireSeq, k: int) -> BaireSeq:
    out = f
    for _ in range(k - 1):
        out = mul(out, f)
    return out


@dataclass
class IdentityCheck:
    name: str
    passed: bool
    offending: list[float] = field(default_factory=list)


@dataclass
class ZeroIdentityReport:
    checks: list[IdentityCheck]
    excluded: list[float]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {"passed": self.passed,
                "identities": {c.name: {"passed": c.passed, "offending": c.offending}
                               for c in self.checks},
                "excluded": self.excluded}


def check_zero_identities(f: BaireSeq, g: BaireSeq, eps: float = DEFAULT_EPS, samples=None,
                          powers=(2, 3)) -> ZeroIdentityReport:
    """Compare sampled zero sets for the union, intersection, modulus and power identities."""
    xs = _grid(f, samples)
    zf, uf = zero_mask(f, xs, eps)
    zg, ug = zero_mask(g, xs, eps)
    excluded = uf | ug
    cases = [
        ("union_via_product", zf | zg, mul(f, g)),
        ("intersection_via_squares", zf & zg, add(mul(f, f), mul(g, g))),
        ("intersection_via_abs", zf & zg, add(absolute(f), absolute(g))),
        ("abs", zf, absolute(f)),
    ]
    cases += [(f"power_{k}", zf, power_of(f, k)) for k in powers]
    checks = []
    for name, expected, h in cases:
        got, uh = zero_mask(h, xs, eps)
        excluded |= uh
        bad = (expected != got) & ~excluded
        checks.append(IdentityCheck(name, not bad.any(), xs[bad].tolist()))
    return ZeroIdentityReport(checks, xs[excluded].tolist())


def level_zero_witness(f: BaireSeq, r: float, direction: str) -> BaireSeq:
    """g with Z(g) = {f >= r} (direction '>=') or {f <= r} (direction '<=')."""
    shifted = sub(f, const_seq(r, f.domain))
    if direction == ">=":
        return sub(shifted, absolute(shifted))
    if direction == "<=":
        return add(shifted, absolute(shifted))
    raise PreconditionError(f"direction must be '>=' or '<=', got {direction!r}")


def countable_intersection(fs, domain: Domain | None = None) -> BaireSeq:
    """g = Sum_n (|f_n| ^ 2^-n), whose zero set is the intersection of the Z(f_n)."""
    def piece(n):
        fn = fs(n)
        # 0 <= |f_n| ^ 2^-n <= 2^-n
        return meet(absolute(fn), const_seq(2.0 ** -n, fn.domain)).declare(bound=2.0 ** -n)
    return series_sum(piece, lambda n: 2.0 ** -n, total=1.0, domain=domain).declare(
        tag="countable_intersection")


def intersection_oracle(fs, xs, eps: float = DEFAULT_EPS, depth: int = N_INTER) -> np.ndarray:
    """Direct per-factor test: x is kept iff x is in Z(f_n) for every n <= depth."""
    xs = np.atleast_1d(np.asarray(xs, dtype=float))
    keep = np.ones(xs.size, dtype=bool)
    for n in range(1, depth + 1):
        member, _ = zero_mask(fs(n), xs, eps)
        keep &= member
    return keep


@dataclass
class SeparationWitness:
    h: BaireSeq
    low_set: SampledSet
    high_set: SampledSet
    low_val: float = 0.0
    high_val: float = 1.0

    def __post_init__(self):
        if not self.low_val < self.high_val:
            raise PreconditionError("separation needs low_val < high_val")

    def violations(self, samples=None, tol: float = 1e-6) -> list[str]:
        """Empty when h hits its values on both sets and stays in range at the samples."""
        out = []
        lo, hi = self.low_val, self.high_val
        for name, S, target in (("low", self.low_set, lo), ("high", self.high_set, hi)):
            if len(S):
                v, _ = eval_limit_many(self.h, S.array, tol / 10)
                if np.any(np.abs(v - target) > tol):
                    out.append(f"h differs from {target} on the {name} set")
        if samples is None and self.h.domain is not None:
            samples = self.h.domain.samples()
        if samples is not None:
            v, _ = eval_limit_many(self.h, samples, tol / 10)
            if np.any(v < lo - tol) or np.any(v > hi + tol):
                out.append("h leaves [low_val, high_val]")
        return out


def separation_witness(f: BaireSeq, g: BaireSeq, delta: float | None = None,
                       eps: float = DEFAULT_EPS, samples=None) -> SeparationWitness:
    """h = |f| / (|f| + |g|): 0 on Z(f), 1 on Z(g), values in [0, 1].

    ``delta`` certifies |f| + |g| >= delta; without it the sampled minimum must
    exceed eps and the result carries a warning.
    """
    xs = _grid(f, samples)
    s = add(absolute(f), absolute(g))
    if delta is None:
        vals, _ = eval_limit_many(s, xs, eps / 10)
        if np.min(vals) <= eps:
            i = int(np.argmin(vals))
            raise PreconditionError(f"zero sets meet at sample resolution near x = {xs[i]:.6g}")
        recip = reciprocal_positive(s, samples=xs, tol=eps / 10)
    else:
        recip = reciprocal_positive(s, delta=delta)
    h = mul(absolute(f), recip).declare(tag="separation")
    return SeparationWitness(h, zero_set(f, eps, xs), zero_set(g, eps, xs), 0.0, 1.0)


def normalize_separation(g: BaireSeq, r: float, s: float) -> BaireSeq:
    """(r v g) ^ s, then the affine map [r, s] -> [0, 1]."""
    if not r < s:
        raise PreconditionError(f"need r < s, got r={r}, s={s}")
    clamped = meet(join(g, const_seq(r, g.domain)), const_seq(s, g.domain))
    out = compose_continuous(affine(1.0 / (s - r), -r / (s - r)), clamped)
    return out.declare(bound=1.0, tag=f"normalize({g.tag})")


def closures_touch(A, B, step: float) -> bool:
    """Sample-resolution proxy for closure(A) meeting closure(B): gap within one grid step."""
    return sampled_gap(A, B) <= step * (1 + 1e-9)
