import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DEC_ENC, DH, terms
from tracepi.errors import NotSubterm, ParseError, StaticContextViolation, UnknownSymbol
from tracepi.logic import Future, Not, Prev, Top
from tracepi.parser import format_program, parse_action, parse_formula, parse_process, parse_program, parse_term, parse_theory
from tracepi.printer import format_action, format_formula, format_term
from tracepi.process import Choice, In, New, Nil, Out, Sub
from tracepi.sampling import Gen, _atoms, random_formula
from tracepi.semantics import AliasOut, Input
from tracepi.terms import Name, Var


def test_parse_theory():
    sig, rs = parse_theory(DEC_ENC)
    assert sig.arities == {"enc": 2, "dec": 2} and len(rs.rules) == 1
    sig, rs = parse_theory("")
    assert sig.arities == {} and rs.rules == ()
    sig, rs = parse_theory(DH)
    assert rs.comm == {"f": "g"}


def test_parse_theory_errors():
    with pytest.raises(NotSubterm):
        parse_theory("fun f/1. fun g/1. reduc f(X) -> g(X).")
    with pytest.raises(ParseError) as e:
        parse_theory("fun enc/2 fun")
    assert "1:" in str(e.value)


def test_parse_process_alice():
    p = parse_program(DH + "\nnew a, kA. out(c, g(a)). in(d, x). ( {f(a,x)/kA} )").process
    assert isinstance(p, New)
    assert str(p) == "new a, kA. out(c, g(a)).in(d, x).{f(a, x)/kA}"


def test_parse_process_basics():
    assert parse_process("0") == Nil()
    p = parse_process("out(a,s).out(b,s) + out(a,s).out(c,s)")
    assert isinstance(p, Choice)
    assert p.left == Out(Name("a"), Name("s"), Out(Name("b"), Name("s"), Nil()))


def test_lexical_convention():
    # input binders and substitution targets are variables whatever their spelling
    assert parse_process("in(c, u).out(c, u)") == In(Name("c"), "u", Out(Name("c"), Var("u"), Nil()))
    assert parse_process("{a/k}") == Sub("k", Name("a"))
    assert parse_term("x") == Var("x") and parse_term("k") == Name("k")
    q = parse_program("var u.\nout(c, u)").process
    assert q == Out(Name("c"), Var("u"), Nil())
    assert parse_program("name x1.\nout(c, x1)").process == Out(Name("c"), Name("x1"), Nil())


def test_parse_process_errors():
    with pytest.raises(ParseError, match="1:7"):
        parse_process("out(c,")
    with pytest.raises(ParseError, match="reserved"):
        parse_process("out(c, #n1)")
    with pytest.raises(UnknownSymbol):
        parse_process("out(c, h(a))")


def test_parse_formula_abbreviations():
    phi = parse_formula("G( x = a -> P(not(x = a)) )")
    assert isinstance(phi, Not) and isinstance(phi.body, Future)
    assert parse_formula("true") == Top()
    f = parse_formula("F <out(a, y)>- true")
    assert f == Future(Prev(AliasOut(Name("a"), "y"), Top()))


def test_parse_formula_static_context():
    with pytest.raises(StaticContextViolation):
        parse_formula("F x = a", static=True)
    with pytest.raises(StaticContextViolation):
        parse_formula("K (x = a) or #x1 in dom", static=True)


def test_parse_action():
    assert parse_action("in(c, g(r))", parse_theory(DH)[1]) == Input(Name("c"), parse_term("g(r)"))
    assert parse_action("out(c, #x1)") == AliasOut(Name("c"), "#x1")
    assert format_action(parse_action("in(c, a)")) == "in(c, a)"


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_process_round_trip(seed):
    rs = parse_theory(DEC_ENC)[1]
    gen = Gen(random.Random(seed))
    sigma = gen.sigma(1)
    p = gen.plain(10, variables=list(sigma), bang=True)
    assert parse_program(format_program(p, rs)).process == p


def test_dangling_else_round_trip():
    p = parse_process("if x = a then (out(a, x).if b = c then out(c, b)) else out(c, a)")
    assert p.else_ == Out(Name("c"), Name("a"), Nil())
    assert parse_process(str(p)) == p


@settings(max_examples=200, deadline=None)
@given(terms())
def test_term_round_trip(t):
    assert parse_term(format_term(t), parse_theory(DEC_ENC)[1]) == t


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10**6))
def test_formula_round_trip(seed):
    rng = random.Random(seed)
    actions = [AliasOut(Name("a"), "#x1"), Input(Name("b"), Name("a"))]
    f = random_formula(rng, _atoms(["a", "b"], ["#x1", "#x2"]), actions, depth=3)
    assert parse_formula(format_formula(f)) == f
