from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings, strategies as st

from b1calc import dsl
from b1calc.dsl import DslError, parse, parse_bytes, pretty_print

CORPUS = sorted((Path(__file__).parent / "corpus").glob("*.b1"))


def test_corpus_has_twenty_scripts():
    assert len(CORPUS) == 20


@pytest.mark.parametrize("path", CORPUS, ids=lambda p: p.name)
def test_corpus_round_trip(path):
    ast = parse(path.read_text())
    text = pretty_print(ast)
    assert parse(text) == ast
    assert pretty_print(parse(text)) == text


def test_simple_script_structure():
    ast = parse("let f = seq(n, x^n) on [0,1]; eval f at 0.5;")
    assert len(ast.stmts) == 2
    let, ev = ast.stmts
    assert isinstance(let, dsl.Let) and let.expr == dsl.SeqLit("n", dsl.BinOp("^", dsl.Name("x"),
                                                                              dsl.Name("n")))
    assert ev == dsl.EvalCmd("f", 0.5)


def test_missing_comma_is_positioned():
    with pytest.raises(DslError) as info:
        parse("let f = seq(n x^n)")
    assert (info.value.line, info.value.col) == (1, 15)
    assert "','" in info.value.expected


def test_nested_combinators():
    ast = parse("let f = seq(n, x) on [0,1]; let g = seq(n, 1) on [0,1];"
                "let h = join(f, truncate(g, 1)) on [0,1];")
    assert ast.stmts[2].expr == dsl.Comb("join", (dsl.Ref("f"), dsl.Truncate(dsl.Ref("g"), 1.0)))


def test_canonical_spacing():
    assert pretty_print(parse("let  f=seq( n,x*2+1 )on[0,1];")) == \
        "let f = seq(n, x * 2 + 1) on [0, 1];\n"


def test_spans_are_regenerated():
    ast = parse("let f = seq(n, x) on [0,1];\n  eval f at 1;")
    assert ast.stmts[1].span == dsl.Span(2, 3)
    again = parse(pretty_print(ast))
    assert again.stmts[1].span == dsl.Span(2, 1)


@pytest.mark.parametrize("src, msg", [
    ("eval f at 1;", "unbound identifier"),
    ("let f = add(seq(n, x)) on [0,1];", "takes 2"),
    ("let f = seq(n, x + k) on [0,1];", "unbound variable"),
    ("let f = compose(affine(1), seq(n, x)) on [0,1];", "parameter"),
    ("let f = seq(n, x) on [0,1]; check ring f;", "argument"),
    ("let f = seq(n, x) on finite \"t.json", "unterminated"),
    ("let f = seq(n, x) on [0,1] eval f at 1;", "unexpected"),
])
def test_error_paths(src, msg):
    with pytest.raises(DslError) as info:
        parse(src)
    assert msg in str(info.value)
    assert info.value.line >= 1 and info.value.col >= 1


def test_deep_nesting_is_an_error_not_a_crash():
    with pytest.raises(DslError):
        parse("let f = seq(n, " + "(" * 5000 + "x" + ")" * 5000 + ") on [0,1];")


def test_comments_and_exponent_literals():
    ast = parse("# header\nlet f = seq(n, 1.5e-3 * x) on [0, 1]; # trailing\n")
    assert ast.stmts[0].expr.body.left == dsl.Num(1.5e-3)


# -- random ASTs ----------------------------------------------------------

names = st.sampled_from(["f", "g", "h1", "u_2"])
binders = st.sampled_from(["n", "k", "m"])
nums = st.floats(0, 1e6, allow_nan=False, allow_infinity=False)
signed = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


def exprs(scope):
    leaves = st.one_of(nums.map(dsl.Num), st.sampled_from(["x", *scope]).map(dsl.Name))
    return st.recursive(leaves, lambda sub: st.one_of(
        st.builds(dsl.BinOp, st.sampled_from("+-*/^"), sub, sub),
        st.builds(dsl.NegE, sub),
        st.builds(dsl.Call, st.just("abs"), st.tuples(sub)),
        st.builds(dsl.Call, st.sampled_from(["min", "max"]), st.tuples(sub, sub)),
    ), max_leaves=8)


@st.composite
def seqexprs(draw, bound_names, depth=0):
    choices = ["seq", "comb", "recip", "compose", "truncate", "series", "intersectz"]
    if bound_names:
        choices.append("ref")
    kind = draw(st.sampled_from(choices if depth < 3 else ["seq"]))
    sub = lambda: draw(seqexprs(bound_names, depth + 1))
    if kind == "ref":
        return dsl.Ref(draw(st.sampled_from(sorted(bound_names))))
    if kind == "seq":
        b = draw(binders)
        return dsl.SeqLit(b, draw(exprs([b])))
    if kind == "comb":
        op = draw(st.sampled_from(sorted(dsl.COMBINATORS)))
        return dsl.Comb(op, tuple(sub() for _ in range(dsl.COMBINATORS[op])))
    if kind == "recip":
        return dsl.Recip(sub(), draw(st.none() | signed))
    if kind == "compose":
        std = draw(st.sampled_from(sorted(dsl.STD_ARITY)))
        return dsl.ComposeS(std, tuple(draw(signed) for _ in range(dsl.STD_ARITY[std])), sub())
    if kind == "truncate":
        return dsl.Truncate(sub(), draw(signed))
    b = draw(binders)
    if kind == "series":
        return dsl.Series(b, sub(), draw(exprs([b])))
    return dsl.IntersectZ(b, sub())


@st.composite
def scripts(draw):
    stmts, bound = [], set()
    for _ in range(draw(st.integers(1, 5))):
        if not bound or draw(st.booleans()):
            name = draw(names)
            dom = draw(st.one_of(
                st.builds(dsl.IntervalDom, signed, signed),
                st.lists(signed, min_size=1, max_size=4).map(lambda p: dsl.PointsDom(tuple(p))),
                st.sampled_from(["a.json", "sub/t.json"]).map(dsl.FiniteDom)))
            stmts.append(dsl.Let(name, draw(seqexprs(bound)), dom))
            bound.add(name)
            continue
        f = draw(st.sampled_from(sorted(bound)))
        g = draw(st.sampled_from(sorted(bound)))
        stmts.append(draw(st.sampled_from([
            dsl.EvalCmd(f, draw(signed), draw(st.none() | nums)),
            dsl.TableCmd(f, draw(signed), draw(signed), draw(signed)),
            dsl.ZeroSetCmd(f, draw(signed)),
            dsl.SeparateCmd(f, g),
            dsl.ExtendCmd(f, tuple(draw(st.lists(signed, min_size=1, max_size=3))), g,
                          draw(st.none() | st.integers(1, 100))),
            dsl.CheckCmd("ring", (f, g)),
            dsl.CheckCmd("zero-identities", (f, g)),
            dsl.CheckCmd("fsigma", (f,)),
        ])))
    return dsl.Script(tuple(stmts))


@settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(scripts())
def test_random_ast_round_trip(ast):
    assert parse(pretty_print(ast)) == ast


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=200))
def test_random_bytes_never_crash(data):
    try:
        parse_bytes(data)
    except DslError as e:
        assert e.line >= 1 and e.col >= 1
