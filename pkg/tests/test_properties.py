import pytest

from conftest import program
from tracepi.config import JobConfig
from tracepi.equivalence import trace_match
from tracepi.errors import StaticContextViolation
from tracepi.parser import parse_formula, parse_process
from tracepi.process import substitute
from tracepi.properties import (
    BOUNDED_HOLDS,
    CHARACTERIZATION,
    FAILS,
    HOLDS,
    minimal_secrecy,
    openness,
    role_interchangeability,
    total_secrecy,
)
from tracepi.terms import Name

NOT_AB = parse_formula("x != a and x != b", static=True)
IS_A = parse_formula("x = a", static=True)
IS_M = parse_formula("x = m", static=True)

P1 = "if x = a then out(c,s) else out(d,s)"
Q1 = "if x = b then out(c,s) else out(d,s)"
P2 = "if x = a then (out(a,s) + out(b,s)) else out(a,s)"
Q2 = "if x = b then out(b,s) else out(c,s)"
P3 = "if x = a then out(b,s)"
Q3 = "if x = n then out(b,s)"
OPEN_P = "if x = m then out(a,n) else out(a,f(n))"
OPEN_L = "if x = m then out(a,n) else out(b,n)"
OPEN_R = "if x = m then out(b,n) else out(a,n)"


def ms(text, delta):
    return minimal_secrecy(parse_process(text), "x", delta)


def op(text):
    prog = program(text, "fun f/1.")
    return openness(prog.process, "x", IS_M, JobConfig(), prog.rs)


def test_minimal_secrecy_parallel():
    assert ms(P1, NOT_AB).verdict == HOLDS
    assert ms(Q1, NOT_AB).verdict == HOLDS
    r = ms(f"({P1}) | ({Q1})", NOT_AB)
    assert r.verdict == FAILS
    assert r.counterexample["actions"] == ["out(d, #x1)", "out(d, #x2)"]
    assert r.counterexample["index"] == 2


def test_minimal_secrecy_squaring():
    s = f"({P2}) + ({Q2})"
    assert ms(s, IS_A).verdict == HOLDS
    r = ms(f"({s}) | ({s})", IS_A)
    assert r.verdict == FAILS
    assert r.counterexample["assignment"] == {"x": "a"}
    assert r.counterexample["actions"] == ["out(b, #x1)", "out(c, #x2)"]


def test_minimal_secrecy_restriction():
    s = f"({P3}) + ({Q3})"
    assert ms(s, IS_A).verdict == HOLDS
    r = ms(f"new n. ({s})", IS_A)
    assert r.verdict == FAILS
    assert r.counterexample["assignment"] == {"x": "a"}
    assert r.counterexample["actions"] == ["out(b, #x1)"]


def test_minimal_secrecy_vacuous():
    assert ms(f"({P1}) | ({Q1})", parse_formula("a != a", static=True)).verdict == HOLDS


def test_minimal_secrecy_rejects_modal_delta():
    with pytest.raises(StaticContextViolation):
        ms(P1, parse_formula("K (x = a)"))


def test_minimal_secrecy_conjunction_preserved():
    for text in (P1, Q1, P3, f"({P2}) + ({Q2})"):
        d1, d2 = parse_formula("x != a", static=True), parse_formula("x != b", static=True)
        if ms(text, d1).holds and ms(text, d2).holds:
            assert ms(text, parse_formula("x != a and x != b", static=True)).holds


def test_openness_restriction():
    assert op(OPEN_P).verdict == HOLDS
    r = op(f"new n. ({OPEN_P})")
    assert r.verdict == FAILS
    assert r.counterexample["assignment"] == {"x": "m"}
    assert r.counterexample["actions"] == ["out(a, #x1)"]
    assert r.counterexample["index"] == 1


def test_openness_parallel():
    assert op(OPEN_L).verdict == HOLDS
    assert op(OPEN_R).verdict == HOLDS
    r = op(f"({OPEN_L}) | ({OPEN_R})")
    assert r.verdict == FAILS
    assert r.counterexample["assignment"] == {"x": "m"}
    assert r.counterexample["actions"] == ["out(a, #x1)", "out(b, #x2)"]
    assert r.counterexample["index"] == 2


def test_openness_counterexample_matched_under_other_assignment():
    both = parse_process(f"({OPEN_L}) | ({OPEN_R})")
    r = op(f"({OPEN_L}) | ({OPEN_R})")
    tr0 = r.trace
    tr1 = trace_match(substitute(both, {"x": Name("#v1")}), tr0, JobConfig())
    assert tr1 is not None and tr1.describe() == tr0.describe()
    # the matching run fires the other component first
    assert str(tr1.state(1)) != str(tr0.state(1))


def test_openness_valid_delta():
    prog = program(OPEN_P, "fun f/1.")
    r = openness(prog.process, "x", parse_formula("a = a", static=True), JobConfig(), prog.rs)
    assert r.verdict == HOLDS


def test_total_secrecy(enc_rs):
    assert total_secrecy(parse_process("out(c, s)"), "x").verdict == HOLDS
    r = total_secrecy(parse_process("out(c, x)"), "x")
    assert r.verdict == FAILS and r.method == CHARACTERIZATION
    assert r.counterexample["reason"]["reason"] == "test"
    assert r.counterexample["witness"]["trace"] == "out(c, #x1)"
    p = program("new k. out(c, enc(x, k))").process
    assert total_secrecy(p, "x", (), JobConfig(), enc_rs).verdict == BOUNDED_HOLDS


def test_total_secrecy_rejects_unknown_parameter():
    with pytest.raises(ValueError):
        total_secrecy(parse_process("out(c, x)"), "x", ("y",))


def test_role_interchangeability():
    def ri(text, **kw):
        return role_interchangeability(parse_process(text), "x1", variables=["x1", "x2"], **kw)

    r = ri("out(c, x1).out(c, x2)")
    assert r.verdict == FAILS and r.counterexample["swapped"] == ["x1", "x2"]
    assert ri("out(c, s)").verdict == HOLDS
    assert ri("out(c, x1) | out(c, x2)").verdict == BOUNDED_HOLDS


def test_role_interchangeability_direct_check():
    r = role_interchangeability(
        parse_process("out(c, x1).out(c, x2)"),
        "x1",
        parse_formula("z = a", static=True),
        [parse_formula("z = b", static=True)],
        variables=["x1", "x2", "x3"],
    )
    assert r.method == "direct-logic"
    assert r.notes[0] == "sufficient-condition-failed"
    assert r.verdict == FAILS
