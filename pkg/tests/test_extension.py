import math
import time

import numpy as np
import pytest

from b1calc import Domain, SampledSet, eval_limit_many, from_expr
from b1calc.continuous import Var
from b1calc.errors import ExtensionError, PreconditionError
from b1calc.extension import (
    clamp_extension, extend_bounded, extend_unbounded, metric_oracle, r_sequence,
    rounds_for_tolerance, run_extension, run_unbounded, separate_embedded_from_zeroset,
)
from b1calc.library import identity, power_seq
from b1calc.sequences import const_seq, from_sequence
from b1calc.continuous import Const

X = Domain.interval(0.0, 1.0, step=0.01)


def values_on(points, values, dom):
    """A continuous function interpolating given values, as a constant sequence."""
    xs = np.asarray(points, float)
    ys = np.asarray(values, float)
    from b1calc.continuous import Compose
    e = Const(float(ys[0]))
    # piecewise linear via clamped ramps
    from b1calc.continuous import Max, Min, Mul
    for (a, ya), (b, yb) in zip(zip(xs, ys), zip(xs[1:], ys[1:])):
        ramp = Min(Const(1.0), Max(Const(0.0), Mul(Const(1.0 / (b - a)), Var() - Const(a))))
        e = e + Mul(Const(yb - ya), ramp)
    return from_expr(e, dom)


def test_r_sequence_ratio():
    rs = r_sequence(1.0, 40)
    assert rs[0] == pytest.approx(1 / 3)
    for a, b in zip(rs, rs[1:]):
        assert 3 * b == pytest.approx(2 * a, rel=1e-15)
    assert rs[40] == pytest.approx(0.5 * (2 / 3) ** 41)


def test_rounds_for_tolerance():
    N = rounds_for_tolerance(1.0, 1e-6)
    rs = r_sequence(1.0, N)
    assert 3 * rs[N] <= 1e-6 < 3 * rs[N - 1]


def test_two_point_demo():
    f = identity(X)
    t = time.perf_counter()
    st = run_extension(f, [0.0, 1.0], X, rounds=40, m=1.0)
    rs = r_sequence(1.0, 40)
    for rec, r in zip(st.records, rs):
        assert rec.sup_residual <= 3 * r + 1e-9
    gy, _ = eval_limit_many(st.g, [0.0, 1.0], 1e-12)
    assert np.all(np.abs(gy - [0.0, 1.0]) <= 3 * rs[40] + 1e-6)
    assert time.perf_counter() - t < 5
    js = st.trace_json()
    sups = [r["sup_residual"] for r in js["trace"]]
    assert all(b <= a for a, b in zip(sups, sups[1:]))


def test_zero_function_gives_zero():
    st = run_extension(const_seq(0.0, X), [0.2, 0.7], X, rounds=5)
    assert all(r.a_count == 0 and r.b_count == 0 for r in st.records)
    v, _ = eval_limit_many(st.g, X.samples())
    assert np.all(v == 0)


def test_restriction_of_known_function():
    G = power_seq(X)
    Y = [0.1, 0.5, 0.9, 1.0]
    g = extend_bounded(G, Y, X, rounds=30, m=1.0)
    gy, _ = eval_limit_many(g, Y, 1e-12)
    Gy, _ = eval_limit_many(G, Y, 1e-12)
    assert np.max(np.abs(gy - Gy)) <= 3 * r_sequence(1.0, 30)[30] + 1e-6


def test_bad_oracle_is_caught():
    def lazy(A, B, r):
        return const_seq(0.0, X)
    with pytest.raises(ExtensionError) as info:
        run_extension(identity(X), [0.0, 1.0], X, oracle=lazy, rounds=3)
    assert info.value.round_index == 1


def test_metric_oracle_one_sided():
    s = metric_oracle(SampledSet.of([]), SampledSet.of([1.0]), 0.25, X)
    assert eval_limit_many(s, [0.0])[0][0] == 0.25


def test_declared_bound_checked():
    with pytest.raises(PreconditionError):
        run_extension(identity(X), [0.0, 1.0], X, m=0.5)


def test_clamp_extension():
    big = from_expr(Var() * 20.0 - 10.0, X)
    h = clamp_extension(big, 5)
    v, _ = eval_limit_many(h, X.samples())
    assert np.all(np.abs(v) <= 5)
    small = identity(X)
    v, _ = eval_limit_many(clamp_extension(small, 1), X.samples())
    assert np.allclose(v, X.samples())
    g = extend_bounded(identity(X), [0.0, 1.0], X, rounds=40, m=1.0)
    assert eval_limit_many(clamp_extension(g, 1, [0.0, 1.0]), [1.0], 1e-12)[0][0] == \
        pytest.approx(1.0, abs=1e-6)
    with pytest.raises(PreconditionError):
        clamp_extension(g, 0.5, [0.0, 1.0])


def test_unbounded_agrees_with_bounded_route():
    f = identity(X)
    Y = [0.25, 0.75]
    u = extend_unbounded(f, Y, X, rounds=40)
    b = extend_bounded(f, Y, X, rounds=40)
    assert np.allclose(eval_limit_many(u, Y, 1e-12)[0], eval_limit_many(b, Y, 1e-12)[0], atol=1e-5)


def test_unbounded_harmonic_points():
    Y = [1.0, 1 / 2, 1 / 3, 1 / 4, 1 / 5]
    dom = Domain.finite(Y)
    f = values_on(sorted(Y), [1 / y for y in sorted(Y)], dom)
    res = run_unbounded(f, Y, X, rounds=60)
    v, _ = eval_limit_many(res.result, Y, 1e-12)
    assert np.allclose(v, [1 / y for y in Y], atol=1e-3)


def test_unbounded_rejects_level_set_on_y():
    f = identity(X)

    def cheat(A, B, r):
        return const_seq(0.0, X)
    with pytest.raises((PreconditionError, ExtensionError)):
        run_unbounded(f, [0.5], X, oracle=cheat, rounds=3)


def test_separate_embedded():
    f = identity(X, bound=1.0)
    w = separate_embedded_from_zeroset([1.0], f, rounds=40, X=X)
    assert eval_limit_many(w.h, [0.0], 1e-9)[0][0] == pytest.approx(0.0, abs=1e-9)
    assert eval_limit_many(w.h, [1.0], 1e-9)[0][0] == pytest.approx(1.0, abs=1e-6)
    assert w.violations(X.samples()) == []


def test_separate_embedded_empty_zero_set():
    f = from_expr(Var() + 1.0, X, bound=2.0)
    w = separate_embedded_from_zeroset([0.5], f, rounds=40, X=X)
    assert len(w.low_set) == 0
    assert eval_limit_many(w.h, [0.5], 1e-9)[0][0] == pytest.approx(1.0, abs=1e-6)


def test_separate_embedded_rejects_touching():
    with pytest.raises(PreconditionError):
        separate_embedded_from_zeroset([0.0, 1.0], identity(X), X=X)
