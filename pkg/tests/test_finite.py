from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from b1calc.errors import PreconditionError
from b1calc.finite import (
    FiniteRealFn, FiniteTopology, check_fsigma_characterization, check_zero_identities_exact,
    enumerate_topologies, generating_intervals, is_continuous, is_f_sigma, is_g_delta,
    pointwise_limit, random_continuous_fn, random_convergent_sequence, random_topology,
    sierpinski, validate_topology, zero_set, zero_set_is_gdelta,
)

S = sierpinski()
STEP = FiniteRealFn({"a": 0, "b": 1})


def discrete(pts):
    from itertools import combinations
    opens = [c for r in range(len(pts) + 1) for c in combinations(pts, r)]
    return FiniteTopology.make(pts, opens)


def test_validate_examples():
    assert validate_topology(discrete("abc")) is None
    assert validate_topology(S) is None
    bad = FiniteTopology.make("abc", [[], ["a"], ["b"], ["a", "b", "c"]])
    v = validate_topology(bad)
    assert v.kind == "union" and set(map(frozenset, v.pair)) == {frozenset("a"), frozenset("b")}


def test_validate_missing_pieces():
    assert validate_topology(FiniteTopology.make("ab", [["a"], ["a", "b"]])).kind == "empty"
    assert validate_topology(FiniteTopology.make("ab", [[], ["a"]])).kind == "full"
    t = FiniteTopology.make("abc", [[], ["a", "b"], ["b", "c"], ["a", "b", "c"]])
    assert validate_topology(t).kind == "intersection"


def test_continuity_examples():
    assert is_continuous(FiniteRealFn({"a": 3, "b": 3}), S)
    assert is_continuous(FiniteRealFn({"a": 1, "b": 2, "c": 5}), discrete("abc"))
    assert not is_continuous(STEP, S)


def test_fsigma_examples():
    assert is_f_sigma({"b"}, S)
    assert not is_f_sigma({"a"}, S)
    assert is_f_sigma({"a", "b"}, S)
    assert is_g_delta({"a"}, S) and not is_g_delta({"b"}, S)


def test_characterization_examples():
    rep = check_fsigma_characterization(STEP, S)
    assert not rep.passed
    assert [P for _, P in rep.failures] == [frozenset({"a"})]
    assert check_fsigma_characterization(FiniteRealFn({"a": 7, "b": 7}), S).passed


def test_gdelta_examples():
    assert zero_set_is_gdelta(FiniteRealFn({"a": 0, "b": 0}), S)
    assert zero_set_is_gdelta(FiniteRealFn({"a": 0, "b": 2, "c": 0}), discrete("abc"))
    # {a} is open, so G-delta, while the step function fails the F-sigma test
    assert zero_set_is_gdelta(STEP, S) and zero_set(STEP) == {"a"}


def test_generating_family_decides_openness():
    ivs = generating_intervals([0, 1, 3])
    assert (None, 0.5) in ivs and (2.0, None) in ivs and (0.5, 2.0) in ivs
    assert generating_intervals([4]) == [(None, None)]


def test_enumeration_counts():
    assert [len(enumerate_topologies(n)) for n in range(5)] == [1, 1, 4, 29, 355]
    assert all(validate_topology(t) is None for t in enumerate_topologies(3))
    with pytest.raises(PreconditionError):
        enumerate_topologies(6)


def test_json_round_trip(tmp_path):
    p = tmp_path / "t.json"
    import json
    p.write_text(json.dumps(S.to_json()))
    assert FiniteTopology.load(p) == S
    with pytest.raises(PreconditionError):
        FiniteTopology.from_json({"points": ["a"]})


def test_undefined_points_rejected():
    with pytest.raises(PreconditionError):
        is_continuous(FiniteRealFn({"a": 1}), S)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
def test_limits_on_random_spaces_pass(seed, n):
    rng = np.random.default_rng(seed)
    t = random_topology(n, rng)
    assert validate_topology(t) is None
    f = pointwise_limit(random_convergent_sequence(t, rng))
    assert check_fsigma_characterization(f, t).passed
    # in a finite space the limit is itself continuous
    assert is_continuous(f, t)
    assert zero_set_is_gdelta(f, t)


def test_continuous_means_constant_on_components():
    rng = np.random.default_rng(3)
    for t in enumerate_topologies(3):
        for _ in range(20):
            assert is_continuous(random_continuous_fn(t, rng), t)


def test_unsettled_sequence_rejected():
    with pytest.raises(PreconditionError):
        pointwise_limit([STEP, FiniteRealFn({"a": 1, "b": 1})])


@settings(max_examples=50, deadline=None)
@given(st.dictionaries(st.sampled_from("abcd"), st.integers(-2, 2), min_size=4, max_size=4),
       st.dictionaries(st.sampled_from("abcd"), st.integers(-2, 2), min_size=4, max_size=4))
def test_exact_zero_identities(fv, gv):
    f = FiniteRealFn({k: Fraction(v) for k, v in fv.items()})
    g = FiniteRealFn({k: Fraction(v) for k, v in gv.items()})
    assert all(check_zero_identities_exact(f, g).values())
