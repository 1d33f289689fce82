"""Finite topological spaces: exact zero sets, F-sigma / G-delta tests, continuity.

Subsets are handled internally as bitmasks over ``points``; the public API takes
and returns frozensets of labels. Nothing here uses a tolerance.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import PreconditionError

Interval = tuple  # (lo, hi); None stands for -inf / +inf


@dataclass(frozen=True)
class FiniteTopology:
    points: tuple[str, ...]
    opens: frozenset[frozenset[str]]

    @classmethod
    def make(cls, points: Iterable, opens: Iterable[Iterable]) -> FiniteTopology:
        return cls(tuple(str(p) for p in points),
                   frozenset(frozenset(str(p) for p in U) for U in opens))

    @classmethod
    def from_json(cls, doc: Mapping) -> FiniteTopology:
        try:
            return cls.make(doc["points"], doc["opens"])
        except (KeyError, TypeError) as exc:
            raise PreconditionError(f"topology JSON needs 'points' and 'opens': {exc}") from None

    @classmethod
    def load(cls, path) -> FiniteTopology:
        return cls.from_json(json.loads(Path(path).read_text()))

    def to_json(self) -> dict:
        order = {p: i for i, p in enumerate(self.points)}
        opens = sorted((sorted(U, key=order.get) for U in self.opens), key=lambda u: (len(u), [order[p] for p in u]))
        return {"points": list(self.points), "opens": opens}

    @cached_property
    def index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.points)}

    @cached_property
    def full_mask(self) -> int:
        return (1 << len(self.points)) - 1

    def mask(self, S: Iterable[str]) -> int:
        m = 0
        for p in S:
            m |= 1 << self.index[p]
        return m

    def labels(self, m: int) -> frozenset[str]:
        return frozenset(p for i, p in enumerate(self.points) if m >> i & 1)

    @cached_property
    def open_masks(self) -> frozenset[int]:
        return frozenset(self.mask(U) for U in self.opens)

    @cached_property
    def closed_masks(self) -> frozenset[int]:
        return frozenset(self.full_mask & ~m for m in self.open_masks)

    @cached_property
    def fsigma_masks(self) -> frozenset[int]:
        """Every union of closed sets (finite space: countable means finite)."""
        return _union_closure(self.closed_masks)

    @cached_property
    def gdelta_masks(self) -> frozenset[int]:
        """Every intersection of open sets."""
        return _intersection_closure(self.open_masks, self.full_mask)

    def closed_sets(self) -> list[frozenset[str]]:
        return [self.labels(m) for m in sorted(self.closed_masks)]

    def closure(self, S: Iterable[str]) -> frozenset[str]:
        s = self.mask(S)
        out = self.full_mask
        for c in self.closed_masks:
            if s & ~c == 0:
                out &= c
        return self.labels(out)

    @cached_property
    def specialization(self) -> frozenset[tuple[str, str]]:
        """Pairs (x, y) with x in the closure of {y}."""
        return frozenset((x, y) for y in self.points for x in self.closure([y]))

    @cached_property
    def components(self) -> tuple[int, ...]:
        """Component id per point for the undirected specialization graph."""
        parent = list(range(len(self.points)))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i
        for x, y in self.specialization:
            a, b = find(self.index[x]), find(self.index[y])
            if a != b:
                parent[a] = b
        roots = [find(i) for i in range(len(self.points))]
        relabel = {r: k for k, r in enumerate(dict.fromkeys(roots))}
        return tuple(relabel[r] for r in roots)


def _union_closure(masks: Iterable[int]) -> frozenset[int]:
    out = {0}
    for m in masks:
        out |= {u | m for u in out}
    return frozenset(out)


def _intersection_closure(masks: Iterable[int], full: int) -> frozenset[int]:
    out = {full}
    for m in masks:
        out |= {u & m for u in out}
    return frozenset(out)


@dataclass(frozen=True)
class TopologyViolation:
    kind: str  # "points" | "empty" | "full" | "union" | "intersection"
    pair: tuple = ()

    def __str__(self):
        if self.pair:
            shown = [sorted(s) for s in self.pair]
            return f"violation({self.kind}) at {shown}"
        return f"violation({self.kind})"


def validate_topology(t: FiniteTopology) -> TopologyViolation | None:
    """None when the open family is a topology, else the first violation found."""
    known = set(t.points)
    for U in t.opens:
        if not U <= known:
            return TopologyViolation("points", (U,))
    if frozenset() not in t.opens:
        return TopologyViolation("empty")
    if frozenset(t.points) not in t.opens:
        return TopologyViolation("full")
    ordered = sorted(t.opens, key=lambda U: (len(U), sorted(U)))
    for U, V in itertools.combinations(ordered, 2):
        if U | V not in t.opens:
            return TopologyViolation("union", (U, V))
    for U, V in itertools.combinations(ordered, 2):
        if U & V not in t.opens:
            return TopologyViolation("intersection", (U, V))
    return None


def _require_valid(t: FiniteTopology):
    bad = validate_topology(t)
    if bad is not None:
        raise PreconditionError(f"not a topology: {bad}")


@dataclass(frozen=True, eq=False)
class FiniteRealFn:
    values: Mapping[str, float]

    def __call__(self, p: str):
        return self.values[p]

    def __eq__(self, other):
        return isinstance(other, FiniteRealFn) and dict(self.values) == dict(other.values)

    __hash__ = None

    def range(self) -> list:
        return sorted(set(self.values.values()))


def _check_total(f: FiniteRealFn, t: FiniteTopology):
    missing = set(t.points) - set(f.values)
    if missing:
        raise PreconditionError(f"function undefined at {sorted(missing)}")


def generating_intervals(values: Iterable) -> list[Interval]:
    """Open intervals whose preimages decide every open preimage of a finite-range function.

    With sorted range r_1 < ... < r_k and midpoints m_i between neighbours:
    (-inf, m_i), (m_i, inf) and (m_{i-1}, m_i), the last padded with -inf/inf at the ends.
    """
    rs = sorted(set(values))
    if len(rs) <= 1:
        return [(None, None)]
    mids = [(a + b) / 2 for a, b in zip(rs, rs[1:])]
    out: list[Interval] = []
    out += [(None, m) for m in mids]
    out += [(m, None) for m in mids]
    edges = [None] + mids + [None]
    out += list(zip(edges, edges[1:]))
    return list(dict.fromkeys(out))


def _in(v, iv: Interval) -> bool:
    lo, hi = iv
    return (lo is None or v > lo) and (hi is None or v < hi)


def preimage_mask(f: FiniteRealFn, t: FiniteTopology, iv: Interval) -> int:
    m = 0
    for i, p in enumerate(t.points):
        if _in(f.values[p], iv):
            m |= 1 << i
    return m


def preimage(f: FiniteRealFn, t: FiniteTopology, iv: Interval) -> frozenset[str]:
    return t.labels(preimage_mask(f, t, iv))


def is_continuous(f: FiniteRealFn, t: FiniteTopology) -> bool:
    _require_valid(t)
    _check_total(f, t)
    return all(preimage_mask(f, t, iv) in t.open_masks for iv in generating_intervals(f.range()))


def is_f_sigma(S: Iterable[str], t: FiniteTopology) -> bool:
    """S is a union of closed sets: the union of the closed sets inside S gives back S."""
    s = t.mask(S)
    union = 0
    for c in t.closed_masks:
        if c & ~s == 0:
            union |= c
    return union == s


def is_g_delta(S: Iterable[str], t: FiniteTopology) -> bool:
    """S is an intersection of open sets: the open supersets of S meet exactly in S."""
    s = t.mask(S)
    inter = t.full_mask
    for u in t.open_masks:
        if s & ~u == 0:
            inter &= u
    return inter == s


def zero_set(f: FiniteRealFn) -> frozenset[str]:
    return frozenset(p for p, v in f.values.items() if v == 0)


@dataclass
class FSigmaReport:
    passed: bool
    checked: int
    failures: list[tuple[Interval, frozenset[str]]]

    def to_json(self) -> dict:
        return {"passed": self.passed, "checked": self.checked,
                "failures": [{"interval": [_num(lo), _num(hi)], "preimage": sorted(P)}
                             for (lo, hi), P in self.failures]}


def _num(v):
    return None if v is None else float(v)


def check_fsigma_characterization(f: FiniteRealFn, t: FiniteTopology) -> FSigmaReport:
    """Test that the preimage of every generating open interval is F-sigma.

    A failure certifies that f is not a pointwise limit of continuous functions.
    """
    _require_valid(t)
    _check_total(f, t)
    fsig = t.fsigma_masks
    failures = []
    ivs = generating_intervals(f.range())
    for iv in ivs:
        m = preimage_mask(f, t, iv)
        if m not in fsig:
            failures.append((iv, t.labels(m)))
    return FSigmaReport(not failures, len(ivs), failures)


def zero_set_is_gdelta(f: FiniteRealFn, t: FiniteTopology) -> bool:
    _require_valid(t)
    _check_total(f, t)
    return is_g_delta(zero_set(f), t)


def check_zero_identities_exact(f: FiniteRealFn, g: FiniteRealFn, powers=(2, 3)) -> dict[str, bool]:
    """Zero-set identities with exact arithmetic (values should be ints or Fractions)."""
    pts = f.values.keys()

    def Z(h):
        return frozenset(p for p in pts if h(p) == 0)
    zf, zg = Z(f), Z(g)
    out = {
        "union_via_product": zf | zg == Z(lambda p: f(p) * g(p)),
        "intersection_via_squares": zf & zg == Z(lambda p: f(p) ** 2 + g(p) ** 2),
        "intersection_via_abs": zf & zg == Z(lambda p: abs(f(p)) + abs(g(p))),
        "abs": zf == Z(lambda p: abs(f(p))),
    }
    for k in powers:
        out[f"power_{k}"] = zf == Z(lambda p, k=k: f(p) ** k)
    return out


# -- enumeration and random generation ------------------------------------

def _labels(n: int) -> tuple[str, ...]:
    return tuple("abcdefghijklmnopqrstuvwxyz"[i] for i in range(n))


@lru_cache(maxsize=None)
def _preorders(n: int) -> tuple[np.ndarray, ...]:
    """All preorders on n points as boolean matrices R[x, y] meaning x <= y."""
    if n == 0:
        return (np.zeros((0, 0), dtype=bool),)
    off = [(i, j) for i in range(n) for j in range(n) if i != j]
    total = 1 << len(off)
    out = []
    chunk = 1 << 16
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        R = np.zeros((codes.size, n, n), dtype=bool)
        R[:, np.arange(n), np.arange(n)] = True
        for b, (i, j) in enumerate(off):
            R[:, i, j] = (codes >> b) & 1
        # transitive iff R o R is contained in R
        comp = np.einsum("kij,kjl->kil", R.astype(np.uint8), R.astype(np.uint8)) > 0
        ok = ~(comp & ~R).any(axis=(1, 2))
        out.extend(R[ok])
    return tuple(out)


def topology_from_preorder(R: np.ndarray, points: tuple[str, ...]) -> FiniteTopology:
    """Opens are the up-sets: x open-member and x <= y force y into the set."""
    n = len(points)
    opens = []
    for m in range(1 << n):
        members = [i for i in range(n) if m >> i & 1]
        if all(m >> j & 1 for i in members for j in range(n) if R[i, j]):
            opens.append(frozenset(points[i] for i in members))
    return FiniteTopology(points, frozenset(opens))


@lru_cache(maxsize=None)
def enumerate_topologies(n: int) -> tuple[FiniteTopology, ...]:
    """Every topology on n labelled points (n <= 5), one per preorder."""
    if n > 5:
        raise PreconditionError("exhaustive enumeration is capped at 5 points")
    pts = _labels(n)
    return tuple(topology_from_preorder(R, pts) for R in _preorders(n))


def random_topology(n: int, rng: np.random.Generator) -> FiniteTopology:
    """A topology on n points from a random preorder (closure of a random relation)."""
    R = rng.random((n, n)) < rng.uniform(0.1, 0.6)
    np.fill_diagonal(R, True)
    for k in range(n):
        R = R | (R[:, [k]] & R[[k], :])
    return topology_from_preorder(R, _labels(n))


def sierpinski() -> FiniteTopology:
    return FiniteTopology.make("ab", [[], ["a"], ["a", "b"]])


def random_continuous_fn(t: FiniteTopology, rng: np.random.Generator, grid=range(-2, 3)
                         ) -> FiniteRealFn:
    """Continuous real functions on a finite space are constant on specialization components."""
    grid = list(grid)
    comps = t.components
    vals = [grid[int(rng.integers(len(grid)))] for _ in range(max(comps) + 1)] if comps else []
    return FiniteRealFn({p: vals[c] for p, c in zip(t.points, comps)})


def random_convergent_sequence(t: FiniteTopology, rng: np.random.Generator, length: int = 6,
                               grid=range(-2, 3)) -> list[FiniteRealFn]:
    """Continuous terms that wander for a while, then settle on a final continuous function."""
    if length < 3:
        raise PreconditionError("need at least 3 terms so the tail can settle")
    settle = int(rng.integers(1, length - 1))
    head = [random_continuous_fn(t, rng, grid) for _ in range(settle)]
    limit = random_continuous_fn(t, rng, grid)
    return head + [limit] * (length - settle)


def pointwise_limit(seq: list[FiniteRealFn], tail: int = 2) -> FiniteRealFn:
    """Limit of a sequence known to be constant over its last ``tail`` terms."""
    if len(seq) < tail or any(s != seq[-1] for s in seq[-tail:]):
        raise PreconditionError("sequence has not settled over its tail")
    return FiniteRealFn(dict(seq[-1].values))


def as_fraction_fn(values: Mapping[str, float]) -> FiniteRealFn:
    return FiniteRealFn({p: Fraction(v).limit_denominator(10 ** 9) for p, v in values.items()})
