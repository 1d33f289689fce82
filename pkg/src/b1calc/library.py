"""Stock Baire-one functions with known limits and per-point moduli.

These are the building blocks the property tests and demos draw from. Every
entry converges exactly or geometrically, so limits can be read at a certified
depth instead of by tail heuristics.
"""
from __future__ import annotations

import math

import numpy as np

from .continuous import (
    Abs, BlowUp, Clamp, Compose, Const, Domain, Expr, Max, Min, Mul, Var, dist_to_interval,
)
from .sequences import BaireSeq, from_expr, from_sequence


def identity(domain: Domain | None = None, bound: float | None = None) -> BaireSeq:
    return from_expr(Var(), domain, bound=bound, tag="x")


def affine_seq(a: float, b: float, domain: Domain | None = None) -> BaireSeq:
    """The continuous function a x + b."""
    bound = None
    if domain is not None and not domain.is_finite:
        lo, hi = domain.intervals[0][0], domain.intervals[-1][1]
        bound = max(abs(a * lo + b), abs(a * hi + b))
    return from_expr(Mul(Const(a), Var()) + Const(b), domain, bound=bound, tag=f"{a:g}x+{b:g}")


def power_seq(domain: Domain | None = None, shift: float = 0.0) -> BaireSeq:
    """f_n(x) = (x - shift)^n, intended for x - shift in [0, 1].

    Limit: 0 where x - shift < 1, 1 where x - shift = 1.
    """
    base = Var() - Const(shift) if shift else Var()

    def modulus(tol, xs):
        t = np.abs(np.asarray(xs, dtype=float) - shift)
        inner = (t > 0) & (t < 1)
        out = np.ones(t.shape, dtype=float)
        with np.errstate(divide="ignore"):
            out[inner] = np.ceil(np.log(tol) / np.log(t[inner])) + 1
        return out

    return from_sequence(lambda n: Compose("power", base, (float(n),)), domain,
                         modulus=modulus, bound=1.0, tag="x^n")


def ramp_seq(a: float, domain: Domain | None = None, height: float = 1.0) -> BaireSeq:
    """f_n(x) = height * min(1, n max(0, x - a)): a step of the given height past a.

    Limit: 0 for x <= a, height for x > a (exact from n >= 1/(x - a)).
    """
    x = Var()
    lift = Max(Const(0.0), x - Const(a))

    def gen(n):
        return Mul(Const(height), Min(Const(1.0), Mul(Const(float(n)), lift)))

    def modulus(tol, xs):
        t = np.asarray(xs, dtype=float) - a
        out = np.ones(t.shape, dtype=float)
        pos = t > 0
        out[pos] = np.ceil(1.0 / t[pos]) + 1
        return out

    return from_sequence(gen, domain, modulus=modulus, bound=abs(height), tag=f"ramp({a:g})")


def blowup_seq(f: Expr, domain: Domain | None = None) -> BaireSeq:
    """Unbounded Baire-one function: 1/f off Z(f), 0 on Z(f), for continuous 0 <= f <= 1.

    Exact from n >= 1/f(x) (and from n = 1 on Z(f)).
    """
    def modulus(tol, xs):
        v = np.asarray(f(np.asarray(xs, dtype=float)), dtype=float)
        out = np.ones(v.shape, dtype=float)
        pos = v > 0
        out[pos] = np.ceil(1.0 / v[pos]) + 1
        return out

    return from_sequence(lambda n: BlowUp(f, n), domain, modulus=modulus, bound=None,
                         tag="blowup")


def band_seq(k: int, domain: Domain | None = None) -> BaireSeq:
    """Distance to the band [-1/k, 1/k], as a continuous function."""
    return from_expr(dist_to_interval(-1.0 / k, 1.0 / k), domain, bound=1.0, tag=f"band({k})")


def scaled(f: BaireSeq, c: float) -> BaireSeq:
    bound = None if f.bound is None else abs(c) * f.bound
    return BaireSeq(lambda n: Mul(Const(float(c)), f.term(n)), f.domain, modulus=(
        None if f.modulus is None else
        (lambda tol, xs: f.modulus(tol / max(abs(c), 1e-300), xs))),
        bound=bound, tag=f"{c:g}*{f.tag}")


def random_member(rng: np.random.Generator, domain: Domain, grid: np.ndarray | None = None,
                  kinds=("affine", "power", "ramp", "const", "abs_affine", "clamped_blowup")
                  ) -> BaireSeq:
    """Draw one library function on an interval domain.

    Zeros are placed on grid points and nonzero grid values are kept at least
    ~1e-3 from 0, so sampled epsilon-zero sets are exact at eps = 1e-9.
    """
    lo, hi = domain.intervals[0][0], domain.intervals[-1][1]
    if grid is None:
        grid = domain.samples()
    kind = kinds[int(rng.integers(len(kinds)))]
    z = float(grid[int(rng.integers(len(grid)))])
    a = float(rng.choice([-3.0, -2.0, 2.0, 3.0]))
    if kind == "affine":
        return from_expr(Mul(Const(a), Var() - Const(z)), domain,
                         bound=abs(a) * max(abs(hi - z), abs(lo - z)), tag=f"{a:g}(x-{z:g})")
    if kind == "abs_affine":
        return from_expr(Abs(Mul(Const(a), Var() - Const(z))), domain,
                         bound=abs(a) * max(abs(hi - z), abs(lo - z)), tag=f"|{a:g}(x-{z:g})|")
    if kind == "power":
        # (x - lo)/(hi - lo) in [0, 1]; limit is the indicator of the right endpoint
        scale = 1.0 / (hi - lo)
        base = Mul(Const(scale), Var() - Const(lo))
        f = from_sequence(lambda n: Compose("power", base, (float(n),)), domain,
                          modulus=_power_modulus(lo, scale), bound=1.0, tag="x^n")
        return scaled(f, a)
    if kind == "ramp":
        return ramp_seq(z, domain, height=a)
    if kind == "const":
        c = float(rng.choice([0.0, 0.5, -1.0, 2.0]))
        return from_expr(Const(c), domain, bound=abs(c), tag=f"const({c:g})")
    # clamped blowup of a distance: unbounded before clamping, zero exactly at z
    d = Clamp(Abs(Var() - Const(z)), 1.0)
    width = max(hi - lo, 1.0)
    f = blowup_seq(Mul(Const(1.0 / width), d), domain)
    return BaireSeq(lambda n: Clamp(f.term(n), 4.0), domain, modulus=f.modulus, bound=4.0,
                    tag="clamped_blowup")


def _power_modulus(lo, scale):
    def modulus(tol, xs):
        t = (np.asarray(xs, dtype=float) - lo) * scale
        inner = (t > 0) & (t < 1)
        out = np.ones(t.shape, dtype=float)
        out[inner] = np.ceil(np.log(tol) / np.log(t[inner])) + 1
        return out
    return modulus


def random_positive(rng: np.random.Generator, domain: Domain) -> tuple[BaireSeq, float]:
    """A strictly positive library function and a certified lower bound for it."""
    base = random_member(rng, domain, kinds=("power", "ramp", "affine", "const"))
    c = float(rng.uniform(0.5, 2.0))
    M = base.bound if base.bound is not None else 1.0
    # |base| + c >= c > 0
    f = BaireSeq(lambda n: Abs(base.term(n)) + Const(c), domain, modulus=base.modulus,
                 bound=M + c, tag=f"|{base.tag}|+{c:.3g}")
    return f, c
