import pytest
from hypothesis import given, settings

from conftest import ground_terms, terms
from tracepi.errors import ArityMismatch, NotSubterm, UnknownSymbol
from tracepi.parser import parse_term, parse_theory
from tracepi.terms import (
    FREE_ALGEBRA,
    App,
    Name,
    Signature,
    Var,
    check_subterm_convergent,
    eq_mod_e,
    normalize,
    term_meta,
)


def size(t):
    return 1 + sum(size(a) for a in t.args) if isinstance(t, App) else 1


SIG = Signature.of({"enc": 2, "dec": 2, "f": 1, "g": 1})


def test_check_accepts_dec_enc():
    rs = check_subterm_convergent([(parse_term("dec(enc(x,y),y)"), Var("x"))], SIG)
    assert len(rs.rules) == 1


def test_check_accepts_empty_rules():
    assert check_subterm_convergent([], SIG).rules == ()


def test_check_rejects_non_subterm():
    with pytest.raises(NotSubterm):
        check_subterm_convergent([(parse_term("f(x)"), parse_term("g(x)"))], SIG)


def test_check_rejects_rhs_variable_not_in_lhs():
    with pytest.raises(NotSubterm):
        check_subterm_convergent([(parse_term("f(x)"), Var("y"))], SIG)


def test_check_rejects_unknown_symbol_and_arity():
    with pytest.raises(UnknownSymbol):
        check_subterm_convergent([(parse_term("h(x)"), Var("x"))], SIG)
    with pytest.raises(ArityMismatch):
        check_subterm_convergent([(App("f", [Var("x"), Var("y")]), Var("x"))], SIG)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("dec(enc(a,k),k)", "a"),
        ("a", "a"),
        ("dec(enc(dec(enc(a,k),k),k),k)", "a"),
        ("dec(enc(a,k),b)", "dec(enc(a, k), b)"),
        ("enc(dec(enc(a,k),k),dec(enc(b,k),k))", "enc(a, b)"),
    ],
)
def test_normalize(enc_rs, text, expected):
    assert str(normalize(parse_term(text, enc_rs), enc_rs)) == expected


def test_eq_mod_e(enc_rs):
    assert eq_mod_e(Name("m"), Name("m"), enc_rs)
    assert eq_mod_e(parse_term("dec(enc(s,k),k)"), Name("s"), enc_rs)
    assert not eq_mod_e(parse_term("dec(enc(s,k),b)"), Name("s"), enc_rs)


def test_dh_commutation(dh_rs):
    left = parse_term("f(a, g(b))", dh_rs)
    right = parse_term("f(b, g(a))", dh_rs)
    assert eq_mod_e(left, right, dh_rs)
    assert not eq_mod_e(left, right, FREE_ALGEBRA)
    assert not eq_mod_e(left, parse_term("f(a, g(a))", dh_rs), dh_rs)


def test_term_meta():
    m = term_meta(parse_term("enc(a,x)"))
    assert (m.names, m.vars, m.ground) == ({"a"}, {"x"}, False)
    m = term_meta(Name("n"))
    assert (m.names, m.vars, m.ground) == ({"n"}, frozenset(), True)
    t = parse_term("f(x,g(y))")
    assert [str(s) for s in term_meta(t).subterms] == ["f(x, g(y))", "x", "g(y)", "y"]


def test_duplicate_symbol_rejected():
    from tracepi.errors import TheoryError

    with pytest.raises(TheoryError):
        parse_theory("fun f/1. fun f/2.")


@settings(max_examples=200, deadline=None)
@given(terms())
def test_normalize_idempotent_and_shrinking(t):
    rs = parse_theory("fun enc/2. fun dec/2. reduc dec(enc(X,K),K) -> X.")[1]
    n = normalize(t, rs)
    assert normalize(n, rs) == n
    assert size(n) <= size(t)


@settings(max_examples=100, deadline=None)
@given(ground_terms(), ground_terms(), ground_terms())
def test_eq_mod_e_is_an_equivalence(a, b, c):
    rs = parse_theory("fun enc/2. fun dec/2. reduc dec(enc(X,K),K) -> X.")[1]
    assert eq_mod_e(a, a, rs)
    assert eq_mod_e(a, b, rs) == eq_mod_e(b, a, rs)
    if eq_mod_e(a, b, rs) and eq_mod_e(b, c, rs):
        assert eq_mod_e(a, c, rs)


@settings(max_examples=100, deadline=None)
@given(ground_terms(), ground_terms())
def test_eq_mod_e_is_a_congruence(a, b):
    rs = parse_theory("fun enc/2. fun dec/2. reduc dec(enc(X,K),K) -> X.")[1]
    a2 = App("dec", [App("enc", [a, Name("k")]), Name("k")])
    assert eq_mod_e(a, a2, rs)
    for sym in ("enc", "dec"):
        assert eq_mod_e(App(sym, [a, b]), App(sym, [a2, b]), rs)
