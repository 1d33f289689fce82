"""Domains, sampled subsets, and continuous functions as immutable expression trees.

Every node evaluates on numpy arrays, so a whole grid is one call::

    >>> e = clamp_expr(Const(2.0) * Var(), 1.0)
    >>> float(eval_cont(e, 0.75))
    1.0
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import CertificateError, DomainError, PreconditionError

STRUCT_TOL = 1e-9
ZERO_TOL = 1e-12
DEFAULT_STEP = 0.01

DOMAIN_KINDS = ("interval", "interval_union", "finite_metric", "finite_topology")


@dataclass(frozen=True)
class Domain:
    """The space X.

    Intervals and unions sample on a regular grid; finite domains sample every
    point. On a ``finite_topology`` domain the coordinate ``x`` of a point is
    its position in ``topology.points``.
    """

    kind: str
    intervals: tuple[tuple[float, float], ...] = ()
    points: tuple[float, ...] = ()
    topology: Any = None
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise PreconditionError(f"unknown domain kind {self.kind!r}")
        if self.kind in ("interval", "interval_union"):
            if not self.intervals:
                raise PreconditionError("interval domain needs at least one interval")
            for lo, hi in self.intervals:
                if not lo < hi:
                    raise PreconditionError(f"interval needs lo < hi, got [{lo}, {hi}]")
            for (_, hi), (lo, _) in zip(self.intervals, self.intervals[1:]):
                if not hi < lo:
                    raise PreconditionError("interval_union members must be sorted and disjoint")
        if self.kind == "finite_metric" and not self.points:
            raise PreconditionError("finite metric domain needs points")
        if self.step <= 0:
            raise PreconditionError("sampling step must be positive")

    @classmethod
    def interval(cls, lo: float, hi: float, step: float = DEFAULT_STEP) -> Domain:
        return cls("interval", intervals=((float(lo), float(hi)),), step=step)

    @classmethod
    def union(cls, intervals: Iterable[tuple[float, float]], step: float = DEFAULT_STEP) -> Domain:
        ivs = tuple((float(a), float(b)) for a, b in intervals)
        return cls("interval_union", intervals=ivs, step=step)

    @classmethod
    def finite(cls, points: Iterable[float]) -> Domain:
        pts = tuple(sorted({float(p) for p in points}))
        return cls("finite_metric", points=pts)

    @classmethod
    def finite_topology(cls, topology) -> Domain:
        return cls("finite_topology", points=tuple(float(i) for i in range(len(topology.points))),
                   topology=topology)

    @property
    def is_finite(self) -> bool:
        return self.kind in ("finite_metric", "finite_topology")

    def samples(self, step: float | None = None, num: int | None = None) -> np.ndarray:
        if self.is_finite:
            return np.array(self.points, dtype=float)
        step = self.step if step is None else step
        parts = []
        for lo, hi in self.intervals:
            k = num - 1 if num is not None else max(1, int(math.ceil((hi - lo) / step - 1e-9)))
            parts.append(np.linspace(lo, hi, k + 1))
        return np.concatenate(parts)

    def contains(self, x) -> np.ndarray | bool:
        xs = np.asarray(x, dtype=float)
        if self.is_finite:
            pts = np.array(self.points)
            inside = np.isclose(xs[..., None], pts, rtol=0.0, atol=ZERO_TOL).any(axis=-1)
        else:
            inside = np.zeros(xs.shape, dtype=bool)
            for lo, hi in self.intervals:
                inside |= (xs >= lo - ZERO_TOL) & (xs <= hi + ZERO_TOL)
        return bool(inside) if inside.ndim == 0 else inside

    def to_json(self) -> dict:
        if self.kind == "finite_topology":
            return {"kind": self.kind, "points": list(self.topology.points)}
        if self.is_finite:
            return {"kind": self.kind, "points": list(self.points)}
        return {"kind": self.kind, "intervals": [list(iv) for iv in self.intervals], "step": self.step}


@dataclass(frozen=True, eq=False)
class SampledSet:
    """A subset of a domain known through its member samples.

    ``excluded`` holds samples whose membership could not be settled (unstable
    limit evaluations); they are listed, never guessed.
    """

    domain: Domain | None
    samples: tuple[float, ...]
    predicate: Callable[[float], bool] | None = None
    epsilon: float = 0.0
    excluded: tuple[float, ...] = ()

    @classmethod
    def of(cls, points: Iterable[float], domain: Domain | None = None, **kw) -> SampledSet:
        return cls(domain, tuple(float(p) for p in points), **kw)

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    def __contains__(self, x) -> bool:
        if self.predicate is not None:
            return bool(self.predicate(x))
        return any(abs(x - s) <= ZERO_TOL for s in self.samples)

    def __eq__(self, other):
        if not isinstance(other, SampledSet):
            return NotImplemented
        return self.samples == other.samples

    __hash__ = None

    @property
    def array(self) -> np.ndarray:
        return np.array(self.samples, dtype=float)

    def to_json(self) -> dict:
        return {
            "domain": self.domain.to_json() if self.domain is not None else None,
            "eps": self.epsilon,
            "samples": list(self.samples),
            "excluded": list(self.excluded),
        }


def _points(S) -> np.ndarray:
    if isinstance(S, SampledSet):
        return S.array
    return np.array(list(S), dtype=float)


def sampled_gap(A, B) -> float:
    """Smallest distance between a sample of A and a sample of B (inf if either is empty)."""
    a, b = _points(A), _points(B)
    if a.size == 0 or b.size == 0:
        return math.inf
    return float(np.min(np.abs(a[:, None] - b[None, :])))


class Expr:
    """Base of the expression tree. Subclasses are frozen dataclasses."""

    def _ev(self, xs: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, x):
        return eval_cont(self, x)

    def __add__(self, other):
        return Add(self, _lift(other))

    def __radd__(self, other):
        return Add(_lift(other), self)

    def __sub__(self, other):
        return Add(self, Neg(_lift(other)))

    def __rsub__(self, other):
        return Add(_lift(other), Neg(self))

    def __mul__(self, other):
        return Mul(self, _lift(other))

    def __rmul__(self, other):
        return Mul(_lift(other), self)

    def __neg__(self):
        return Neg(self)

    def __abs__(self):
        return Abs(self)


def _lift(v) -> Expr:
    return v if isinstance(v, Expr) else Const(float(v))


@dataclass(frozen=True, repr=False)
class Const(Expr):
    c: float

    def _ev(self, xs):
        return np.full(xs.shape, self.c, dtype=float)

    def __repr__(self):
        return f"Const({self.c!r})"


@dataclass(frozen=True, repr=False)
class Var(Expr):
    def _ev(self, xs):
        return xs

    def __repr__(self):
        return "x"


@dataclass(frozen=True)
class Add(Expr):
    l: Expr
    r: Expr

    def _ev(self, xs):
        return self.l._ev(xs) + self.r._ev(xs)


@dataclass(frozen=True)
class Sum(Expr):
    """n-ary sum; keeps long diagonal partial sums flat."""

    terms: tuple[Expr, ...]

    def _ev(self, xs):
        out = np.zeros(xs.shape, dtype=float)
        for t in self.terms:
            out = out + t._ev(xs)
        return out


@dataclass(frozen=True)
class Mul(Expr):
    l: Expr
    r: Expr

    def _ev(self, xs):
        return self.l._ev(xs) * self.r._ev(xs)


@dataclass(frozen=True)
class Neg(Expr):
    e: Expr

    def _ev(self, xs):
        return -self.e._ev(xs)


@dataclass(frozen=True)
class Abs(Expr):
    e: Expr

    def _ev(self, xs):
        return np.abs(self.e._ev(xs))


@dataclass(frozen=True)
class Min(Expr):
    l: Expr
    r: Expr

    def _ev(self, xs):
        return np.minimum(self.l._ev(xs), self.r._ev(xs))


@dataclass(frozen=True)
class Max(Expr):
    l: Expr
    r: Expr

    def _ev(self, xs):
        return np.maximum(self.l._ev(xs), self.r._ev(xs))


@dataclass(frozen=True)
class Clamp(Expr):
    e: Expr
    bound: float

    def _ev(self, xs):
        return np.clip(self.e._ev(xs), -self.bound, self.bound)


@dataclass(frozen=True)
class DistToSet(Expr):
    points: tuple[float, ...]

    def _ev(self, xs):
        pts = np.asarray(self.points, dtype=float)
        return np.min(np.abs(xs[:, None] - pts[None, :]), axis=1)


@dataclass(frozen=True)
class BlowUp(Expr):
    """n^2 f on {f <= 1/n}, 1/f on {f >= 1/n}; f must take values in [0, 1]."""

    f: Expr
    n: int

    def _ev(self, xs):
        v = self.f._ev(xs)
        low = v <= 1.0 / self.n
        out = np.empty_like(v)
        out[low] = self.n * self.n * v[low]
        out[~low] = 1.0 / v[~low]
        return out


STD_FUNCTIONS = ("arctan", "tan_restricted", "affine", "power", "reciprocal_nonzero")


@dataclass(frozen=True)
class Compose(Expr):
    """A standard real function applied to a subexpression.

    ``delta`` is the certificate for partial functions: the reciprocal needs
    |arg| >= delta, the restricted tangent needs |arg| <= pi/2 - delta.
    """

    name: str
    arg: Expr
    params: tuple[float, ...] = ()
    delta: float | None = None

    def __post_init__(self):
        if self.name not in STD_FUNCTIONS:
            raise PreconditionError(f"unknown standard function {self.name!r}")

    def _ev(self, xs):
        v = self.arg._ev(xs)
        if self.name == "arctan":
            return np.arctan(v)
        if self.name == "affine":
            a, b = self.params
            return a * v + b
        if self.name == "power":
            out = np.power(v, self.params[0])
            if np.isnan(out).any():
                raise CertificateError(f"power {self.params[0]} undefined at a negative argument")
            return out
        if self.name == "tan_restricted":
            limit = math.pi / 2 - (self.delta or 0.0)
            if np.any(np.abs(v) >= limit) or np.isnan(v).any():
                raise CertificateError(f"tan argument left (-{limit}, {limit})")
            return np.tan(v)
        # reciprocal_nonzero
        floor = ZERO_TOL if self.delta is None else self.delta
        if np.any(~(np.abs(v) >= floor)):
            raise CertificateError(f"reciprocal argument below certificate {floor:g}")
        return 1.0 / v


def eval_cont(e: Expr, x, domain: Domain | None = None):
    """Evaluate ``e`` at a point (returns float) or an array of points (returns array)."""
    xs = np.asarray(x, dtype=float)
    if domain is not None and not np.all(domain.contains(xs)):
        raise DomainError(f"point(s) outside domain {domain.to_json()}")
    flat = np.atleast_1d(xs).ravel()
    with np.errstate(all="ignore"):
        out = e._ev(flat)
    if np.isnan(out).any():
        raise CertificateError("expression evaluated to NaN")
    if xs.ndim == 0:
        return float(out[0])
    return out.reshape(xs.shape)


def depends_on_x(e: Expr) -> bool:
    if isinstance(e, (Var, DistToSet)):
        return True
    if isinstance(e, Const):
        return False
    for v in vars(e).values():
        if isinstance(v, Expr) and depends_on_x(v):
            return True
        if isinstance(v, tuple) and any(isinstance(t, Expr) and depends_on_x(t) for t in v):
            return True
    return False


def clamp_expr(g: Expr, M: float) -> Expr:
    """Saturate g into [-M, M]."""
    if not M > 0:
        raise PreconditionError(f"clamp bound must be positive, got {M}")
    return Clamp(g, float(M))


def blowup_term(f: Expr, n: int, samples: Sequence[float] | np.ndarray | None = None) -> Expr:
    """The n-th continuous approximant of the unbounded function 1/f (0 on Z(f)).

    ``f`` must take values in [0, 1]; this is checked at ``samples`` when given.
    """
    if int(n) != n or n < 1:
        raise PreconditionError(f"n must be a positive integer, got {n}")
    if samples is not None:
        v = eval_cont(f, np.asarray(samples, dtype=float))
        if np.any(v < -ZERO_TOL) or np.any(v > 1 + ZERO_TOL):
            raise PreconditionError("f leaves [0, 1] at a sample")
    return BlowUp(f, int(n))


def dist_to_set(S) -> Expr:
    pts = tuple(float(p) for p in _points(S))
    if not pts:
        raise PreconditionError("distance to the empty set is undefined")
    return DistToSet(pts)


def dist_to_interval(lo: float, hi: float) -> Expr:
    """max(0, lo - x, x - hi): zero exactly on [lo, hi]."""
    x = Var()
    return Max(Const(0.0), Max(Const(float(lo)) - x, x - Const(float(hi))))


def urysohn_separator(A, B, r: float) -> Expr:
    """r (d(x,A) - d(x,B)) / (d(x,A) + d(x,B)): -r on A, r on B, inside [-r, r].

    If either set is empty the zero constant is returned.
    """
    if not r > 0:
        raise PreconditionError(f"separator height must be positive, got {r}")
    a, b = _points(A), _points(B)
    if a.size == 0 or b.size == 0:
        return Const(0.0)
    gap = sampled_gap(a, b)
    if not gap > 0:
        raise PreconditionError("sets touch at sample resolution (gap 0)")
    dA, dB = DistToSet(tuple(a.tolist())), DistToSet(tuple(b.tolist()))
    # d(x,A) + d(x,B) >= gap by the triangle inequality
    denom = Compose("reciprocal_nonzero", Add(dA, dB), delta=gap * (1 - 1e-9))
    return Clamp(Mul(Const(float(r)), Mul(Add(dA, Neg(dB)), denom)), float(r))
