"""Lexer, recursive-descent parser and pretty printer for the b1calc script language.

A script is a list of ``let`` bindings and commands separated by ``;``::

    let f = seq(n, x^n) on [0, 1];
    eval f at 0.5;

Every AST node carries a :class:`Span`; spans are excluded from equality so a
reparsed pretty-print compares equal to the original tree.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

MAX_DEPTH = 100


@dataclass(frozen=True)
class Span:
    line: int
    col: int

    def __str__(self):
        return f"{self.line}:{self.col}"


NOSPAN = Span(0, 0)


def _span():
    return field(default=NOSPAN, compare=False, repr=False)


class DslError(Exception):
    def __init__(self, msg: str, span: Span = NOSPAN, expected: tuple[str, ...] = ()):
        self.msg, self.span, self.expected = msg, span, tuple(sorted(set(expected)))
        where = f"line {span.line}, column {span.col}"
        exp = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{where}: {msg}{exp}")

    @property
    def line(self):
        return self.span.line

    @property
    def col(self):
        return self.span.col

    def to_json(self) -> dict:
        return {"error": self.msg, "line": self.line, "col": self.col,
                "expected": list(self.expected)}


# -- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float
    span: Span = _span()


@dataclass(frozen=True)
class Name:
    id: str
    span: Span = _span()


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / ^
    left: "ArExpr"
    right: "ArExpr"
    span: Span = _span()


@dataclass(frozen=True)
class NegE:
    arg: "ArExpr"
    span: Span = _span()


@dataclass(frozen=True)
class Call:
    fn: str  # abs | min | max
    args: tuple["ArExpr", ...]
    span: Span = _span()


ArExpr = Union[Num, Name, BinOp, NegE, Call]


@dataclass(frozen=True)
class SeqLit:
    binder: str
    body: ArExpr
    span: Span = _span()


@dataclass(frozen=True)
class Ref:
    name: str
    span: Span = _span()


@dataclass(frozen=True)
class Comb:
    op: str  # add | mul | join | meet | abs | neg
    args: tuple["SeqExpr", ...]
    span: Span = _span()


@dataclass(frozen=True)
class Recip:
    arg: "SeqExpr"
    delta: float | None = None
    span: Span = _span()


@dataclass(frozen=True)
class ComposeS:
    std: str
    params: tuple[float, ...]
    arg: "SeqExpr"
    span: Span = _span()


@dataclass(frozen=True)
class Truncate:
    arg: "SeqExpr"
    bound: float
    span: Span = _span()


@dataclass(frozen=True)
class Series:
    binder: str
    body: "SeqExpr"
    bound: ArExpr
    span: Span = _span()


@dataclass(frozen=True)
class IntersectZ:
    binder: str
    body: "SeqExpr"
    span: Span = _span()


SeqExpr = Union[SeqLit, Ref, Comb, Recip, ComposeS, Truncate, Series, IntersectZ]


@dataclass(frozen=True)
class IntervalDom:
    lo: float
    hi: float
    span: Span = _span()


@dataclass(frozen=True)
class PointsDom:
    points: tuple[float, ...]
    span: Span = _span()


@dataclass(frozen=True)
class FiniteDom:
    path: str
    span: Span = _span()


DomainLit = Union[IntervalDom, PointsDom, FiniteDom]


@dataclass(frozen=True)
class Let:
    name: str
    expr: SeqExpr
    domain: DomainLit
    span: Span = _span()


@dataclass(frozen=True)
class EvalCmd:
    name: str
    at: float
    tol: float | None = None
    span: Span = _span()


@dataclass(frozen=True)
class TableCmd:
    name: str
    start: float
    stop: float
    step: float
    span: Span = _span()


@dataclass(frozen=True)
class ZeroSetCmd:
    name: str
    eps: float
    span: Span = _span()


@dataclass(frozen=True)
class SeparateCmd:
    f: str
    g: str
    span: Span = _span()


@dataclass(frozen=True)
class ExtendCmd:
    name: str
    points: tuple[float, ...]
    ambient: str
    rounds: int | None = None
    span: Span = _span()


@dataclass(frozen=True)
class CheckCmd:
    kind: str  # ring | zero-identities | fsigma
    args: tuple[str, ...]
    span: Span = _span()


Stmt = Union[Let, EvalCmd, TableCmd, ZeroSetCmd, SeparateCmd, ExtendCmd, CheckCmd]


@dataclass(frozen=True)
class Script:
    stmts: tuple[Stmt, ...]
    span: Span = _span()


COMBINATORS = {"add": 2, "mul": 2, "join": 2, "meet": 2, "abs": 1, "neg": 1}
EXPR_FUNCS = {"abs": 1, "min": 2, "max": 2}
STD_ARITY = {"arctan": 0, "tan": 0, "affine": 2, "power": 1}
CHECK_ARITY = {"ring": 2, "zero-identities": 2, "fsigma": 1}
KEYWORDS = {"let", "on", "seq", "recip", "delta", "compose", "truncate", "series", "bound",
            "intersectz", "finite", "eval", "at", "tol", "table", "from", "to", "step",
            "zeroset", "eps", "separate", "extend", "in", "rounds", "check"} | set(COMBINATORS)


# -- lexer ----------------------------------------------------------------

@dataclass(frozen=True)
class Tok:
    kind: str  # NUM IDENT STRING PUNCT EOF
    text: str
    span: Span


_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\f\v]+)
  | (?P<nl>\n)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>zero-identities(?![A-Za-z0-9_])|[A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"[^"\n]*")
  | (?P<punct>[()\[\]{},;=^+\-*/])
""", re.VERBOSE)


def tokenize(src: str) -> list[Tok]:
    out, line, line_start, i = [], 1, 0, 0
    while i < len(src):
        m = _TOKEN.match(src, i)
        span = Span(line, i - line_start + 1)
        if m is None:
            ch = src[i]
            if ch == '"':
                raise DslError("unterminated string", span)
            raise DslError(f"unexpected character {ch!r}", span)
        kind = m.lastgroup
        if kind == "nl":
            line, line_start = line + 1, m.end()
        elif kind == "num":
            out.append(Tok("NUM", m.group(), span))
        elif kind == "ident":
            out.append(Tok("IDENT", m.group(), span))
        elif kind == "string":
            out.append(Tok("STRING", m.group()[1:-1], span))
        elif kind == "punct":
            out.append(Tok("PUNCT", m.group(), span))
        i = m.end()
    out.append(Tok("EOF", "", Span(line, len(src) - line_start + 1)))
    return out


# -- parser ---------------------------------------------------------------

class Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0
        self.depth = 0

    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("PUNCT", "IDENT") and t.text == text

    def advance(self) -> Tok:
        t = self.tok
        if t.kind != "EOF":
            self.i += 1
        return t

    def fail(self, expected, what=None):
        t = self.tok
        got = "end of input" if t.kind == "EOF" else repr(t.text)
        raise DslError(what or f"unexpected {got}", t.span, tuple(expected))

    def expect(self, text: str) -> Tok:
        if not self.at(text):
            self.fail([repr(text)])
        return self.advance()

    def ident(self) -> Tok:
        if self.tok.kind != "IDENT" or self.tok.text in KEYWORDS:
            self.fail(["identifier"])
        return self.advance()

    def number(self, signed=True) -> float:
        sign = 1.0
        if signed and self.at("-"):
            self.advance()
            sign = -1.0
        if self.tok.kind != "NUM":
            self.fail(["number"])
        return sign * float(self.advance().text)

    def nested(self):
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise DslError(f"nesting deeper than {MAX_DEPTH}", self.tok.span)

    # script

    def script(self) -> Script:
        stmts = []
        while self.tok.kind != "EOF":
            stmts.append(self.stmt())
            self.expect(";")
        return Script(tuple(stmts), Span(1, 1))

    def stmt(self) -> Stmt:
        t = self.tok
        if self.at("let"):
            self.advance()
            name = self.ident().text
            self.expect("=")
            e = self.seqexpr()
            self.expect("on")
            return Let(name, e, self.domain(), t.span)
        if self.at("eval"):
            self.advance()
            name = self.ident().text
            self.expect("at")
            x = self.number()
            tol = None
            if self.at("tol"):
                self.advance()
                tol = self.number()
            return EvalCmd(name, x, tol, t.span)
        if self.at("table"):
            self.advance()
            name = self.ident().text
            self.expect("from")
            a = self.number()
            self.expect("to")
            b = self.number()
            self.expect("step")
            return TableCmd(name, a, b, self.number(), t.span)
        if self.at("zeroset"):
            self.advance()
            name = self.ident().text
            self.expect("eps")
            return ZeroSetCmd(name, self.number(), t.span)
        if self.at("separate"):
            self.advance()
            f = self.ident().text
            return SeparateCmd(f, self.ident().text, t.span)
        if self.at("extend"):
            self.advance()
            name = self.ident().text
            self.expect("on")
            pts = self.setlit()
            self.expect("in")
            amb = self.ident().text
            rounds = None
            if self.at("rounds"):
                self.advance()
                tr = self.tok
                r = self.number(signed=False)
                if r != int(r) or r < 1:
                    raise DslError("rounds must be a positive integer", tr.span)
                rounds = int(r)
            return ExtendCmd(name, pts, amb, rounds, t.span)
        if self.at("check"):
            self.advance()
            kt = self.tok
            if kt.kind != "IDENT" or kt.text not in CHECK_ARITY:
                self.fail([repr(k) for k in CHECK_ARITY])
            self.advance()
            args = [self.ident().text]
            while self.at(","):
                self.advance()
                args.append(self.ident().text)
            if len(args) != CHECK_ARITY[kt.text]:
                raise DslError(f"check {kt.text} takes {CHECK_ARITY[kt.text]} argument(s), "
                               f"got {len(args)}", kt.span)
            return CheckCmd(kt.text, tuple(args), t.span)
        self.fail(["'let'", "'eval'", "'table'", "'zeroset'", "'separate'", "'extend'",
                   "'check'"])

    def setlit(self) -> tuple[float, ...]:
        self.expect("{")
        pts = [self.number()]
        while self.at(","):
            self.advance()
            pts.append(self.number())
        self.expect("}")
        return tuple(pts)

    def domain(self) -> DomainLit:
        t = self.tok
        if self.at("["):
            self.advance()
            lo = self.number()
            self.expect(",")
            hi = self.number()
            self.expect("]")
            return IntervalDom(lo, hi, t.span)
        if self.at("{"):
            return PointsDom(self.setlit(), t.span)
        if self.at("finite"):
            self.advance()
            if self.tok.kind != "STRING":
                self.fail(["string"])
            return FiniteDom(self.advance().text, t.span)
        self.fail(["'['", "'{'", "'finite'"])

    # sequence expressions

    def seqexpr(self) -> SeqExpr:
        self.nested()
        try:
            return self._seqexpr()
        finally:
            self.depth -= 1

    def _seqexpr(self) -> SeqExpr:
        t = self.tok
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            self.advance()
            return Ref(t.text, t.span)
        if self.at("seq"):
            self.advance()
            self.expect("(")
            b = self.ident().text
            self.expect(",")
            body = self.expr()
            self.expect(")")
            return SeqLit(b, body, t.span)
        if t.kind == "IDENT" and t.text in COMBINATORS:
            self.advance()
            self.expect("(")
            args = [self.seqexpr()]
            while self.at(","):
                self.advance()
                args.append(self.seqexpr())
            self.expect(")")
            if len(args) != COMBINATORS[t.text]:
                raise DslError(f"{t.text} takes {COMBINATORS[t.text]} argument(s), got {len(args)}",
                               t.span)
            return Comb(t.text, tuple(args), t.span)
        if self.at("recip"):
            self.advance()
            self.expect("(")
            arg = self.seqexpr()
            delta = None
            if self.at(","):
                self.advance()
                self.expect("delta")
                self.expect("=")
                delta = self.number()
            self.expect(")")
            return Recip(arg, delta, t.span)
        if self.at("compose"):
            self.advance()
            self.expect("(")
            st = self.tok
            if st.kind != "IDENT" or st.text not in STD_ARITY:
                self.fail([repr(s) for s in STD_ARITY])
            self.advance()
            params = []
            if self.at("("):
                self.advance()
                params.append(self.number())
                while self.at(","):
                    self.advance()
                    params.append(self.number())
                self.expect(")")
            if len(params) != STD_ARITY[st.text]:
                raise DslError(f"{st.text} takes {STD_ARITY[st.text]} parameter(s), "
                               f"got {len(params)}", st.span)
            self.expect(",")
            arg = self.seqexpr()
            self.expect(")")
            return ComposeS(st.text, tuple(params), arg, t.span)
        if self.at("truncate"):
            self.advance()
            self.expect("(")
            arg = self.seqexpr()
            self.expect(",")
            M = self.number()
            self.expect(")")
            return Truncate(arg, M, t.span)
        if self.at("series"):
            self.advance()
            self.expect("(")
            b = self.ident().text
            self.expect(",")
            body = self.seqexpr()
            self.expect(",")
            self.expect("bound")
            self.expect("=")
            bound = self.expr()
            self.expect(")")
            return Series(b, body, bound, t.span)
        if self.at("intersectz"):
            self.advance()
            self.expect("(")
            b = self.ident().text
            self.expect(",")
            body = self.seqexpr()
            self.expect(")")
            return IntersectZ(b, body, t.span)
        self.fail(["identifier", "'seq'", "'recip'", "'compose'", "'truncate'", "'series'",
                   "'intersectz'"] + [repr(c) for c in COMBINATORS])

    # arithmetic

    def expr(self) -> ArExpr:
        self.nested()
        try:
            left = self.term()
            while self.at("+") or self.at("-"):
                t = self.advance()
                left = BinOp(t.text, left, self.term(), t.span)
            return left
        finally:
            self.depth -= 1

    def term(self) -> ArExpr:
        left = self.unary()
        while self.at("*") or self.at("/"):
            t = self.advance()
            left = BinOp(t.text, left, self.unary(), t.span)
        return left

    def unary(self) -> ArExpr:
        if self.at("-"):
            t = self.advance()
            self.nested()
            try:
                return NegE(self.unary(), t.span)
            finally:
                self.depth -= 1
        return self.power()

    def power(self) -> ArExpr:
        base = self.atom()
        if self.at("^"):
            t = self.advance()
            self.nested()
            try:
                return BinOp("^", base, self.unary(), t.span)
            finally:
                self.depth -= 1
        return base

    def atom(self) -> ArExpr:
        t = self.tok
        if t.kind == "NUM":
            self.advance()
            return Num(float(t.text), t.span)
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "IDENT" and t.text in EXPR_FUNCS and self.toks[self.i + 1].text == "(":
            self.advance()
            self.expect("(")
            args = [self.expr()]
            while self.at(","):
                self.advance()
                args.append(self.expr())
            self.expect(")")
            if len(args) != EXPR_FUNCS[t.text]:
                raise DslError(f"{t.text} takes {EXPR_FUNCS[t.text]} argument(s), got {len(args)}",
                               t.span)
            return Call(t.text, tuple(args), t.span)
        if t.kind == "IDENT" and t.text not in KEYWORDS:
            self.advance()
            return Name(t.text, t.span)
        self.fail(["number", "identifier", "'('", "'abs'", "'min'", "'max'"])


# -- static checks --------------------------------------------------------

def _check_expr(e: ArExpr, scope: frozenset[str]):
    if isinstance(e, Name):
        if e.id != "x" and e.id not in scope:
            raise DslError(f"unbound variable {e.id!r}", e.span)
    elif isinstance(e, BinOp):
        _check_expr(e.left, scope)
        _check_expr(e.right, scope)
    elif isinstance(e, NegE):
        _check_expr(e.arg, scope)
    elif isinstance(e, Call):
        for a in e.args:
            _check_expr(a, scope)


def _check_seq(e: SeqExpr, names: set[str], scope: frozenset[str]):
    if isinstance(e, Ref):
        if e.name not in names:
            raise DslError(f"unbound identifier {e.name!r}", e.span)
    elif isinstance(e, SeqLit):
        _check_expr(e.body, scope | {e.binder})
    elif isinstance(e, Comb):
        for a in e.args:
            _check_seq(a, names, scope)
    elif isinstance(e, (Recip, ComposeS, Truncate)):
        _check_seq(e.arg, names, scope)
    elif isinstance(e, Series):
        _check_seq(e.body, names, scope | {e.binder})
        _check_expr(e.bound, frozenset({e.binder}) | scope)
    elif isinstance(e, IntersectZ):
        _check_seq(e.body, names, scope | {e.binder})


def check(script: Script) -> Script:
    """Reject unbound identifiers; arity is enforced while parsing."""
    names: set[str] = set()
    for s in script.stmts:
        if isinstance(s, Let):
            _check_seq(s.expr, names, frozenset())
            names.add(s.name)
            continue
        used = {EvalCmd: lambda c: [c.name], TableCmd: lambda c: [c.name],
                ZeroSetCmd: lambda c: [c.name], SeparateCmd: lambda c: [c.f, c.g],
                ExtendCmd: lambda c: [c.name, c.ambient], CheckCmd: lambda c: list(c.args)}
        for n in used[type(s)](s):
            if n not in names:
                raise DslError(f"unbound identifier {n!r}", s.span)
    return script


def parse(src: str) -> Script:
    p = Parser(src)
    return check(p.script())


def parse_bytes(data: bytes) -> Script:
    return parse(data.decode("utf-8", errors="replace"))


# -- pretty printer -------------------------------------------------------

def fmt_num(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _prec(e: ArExpr) -> int:
    if isinstance(e, BinOp):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}[e.op]
    if isinstance(e, NegE):
        return 3
    return 5


def pp_expr(e: ArExpr) -> str:
    if isinstance(e, Num):
        return fmt_num(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(pp_expr(a) for a in e.args)})"
    if isinstance(e, NegE):
        inner = pp_expr(e.arg)
        return f"-({inner})" if _prec(e.arg) < 3 else f"-{inner}"
    p = _prec(e)
    lhs, rhs = pp_expr(e.left), pp_expr(e.right)
    if e.op == "^":
        if _prec(e.left) < 5:
            lhs = f"({lhs})"
        if _prec(e.right) < 3:
            rhs = f"({rhs})"
        return f"{lhs}^{rhs}"
    if _prec(e.left) < p:
        lhs = f"({lhs})"
    if _prec(e.right) <= p:
        rhs = f"({rhs})"
    return f"{lhs} {e.op} {rhs}"


def pp_seq(e: SeqExpr) -> str:
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, SeqLit):
        return f"seq({e.binder}, {pp_expr(e.body)})"
    if isinstance(e, Comb):
        return f"{e.op}({', '.join(pp_seq(a) for a in e.args)})"
    if isinstance(e, Recip):
        tail = "" if e.delta is None else f", delta = {fmt_num(e.delta)}"
        return f"recip({pp_seq(e.arg)}{tail})"
    if isinstance(e, ComposeS):
        ps = f"({', '.join(fmt_num(p) for p in e.params)})" if e.params else ""
        return f"compose({e.std}{ps}, {pp_seq(e.arg)})"
    if isinstance(e, Truncate):
        return f"truncate({pp_seq(e.arg)}, {fmt_num(e.bound)})"
    if isinstance(e, Series):
        return f"series({e.binder}, {pp_seq(e.body)}, bound = {pp_expr(e.bound)})"
    if isinstance(e, IntersectZ):
        return f"intersectz({e.binder}, {pp_seq(e.body)})"
    raise TypeError(f"not a sequence expression: {e!r}")


def pp_domain(d: DomainLit) -> str:
    if isinstance(d, IntervalDom):
        return f"[{fmt_num(d.lo)}, {fmt_num(d.hi)}]"
    if isinstance(d, PointsDom):
        return "{" + ", ".join(fmt_num(p) for p in d.points) + "}"
    return f'finite "{d.path}"'


def pp_stmt(s: Stmt) -> str:
    if isinstance(s, Let):
        return f"let {s.name} = {pp_seq(s.expr)} on {pp_domain(s.domain)}"
    if isinstance(s, EvalCmd):
        tail = "" if s.tol is None else f" tol {fmt_num(s.tol)}"
        return f"eval {s.name} at {fmt_num(s.at)}{tail}"
    if isinstance(s, TableCmd):
        return f"table {s.name} from {fmt_num(s.start)} to {fmt_num(s.stop)} step {fmt_num(s.step)}"
    if isinstance(s, ZeroSetCmd):
        return f"zeroset {s.name} eps {fmt_num(s.eps)}"
    if isinstance(s, SeparateCmd):
        return f"separate {s.f} {s.g}"
    if isinstance(s, ExtendCmd):
        pts = "{" + ", ".join(fmt_num(p) for p in s.points) + "}"
        tail = "" if s.rounds is None else f" rounds {s.rounds}"
        return f"extend {s.name} on {pts} in {s.ambient}{tail}"
    if isinstance(s, CheckCmd):
        return f"check {s.kind} {', '.join(s.args)}"
    raise TypeError(f"not a statement: {s!r}")


def pretty_print(script: Script) -> str:
    return "".join(pp_stmt(s) + ";\n" for s in script.stmts)
