import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracepi.config import JobConfig
from tracepi.errors import UnboundVariable
from tracepi.logic import (
    Evaluator,
    Knows,
    Not,
    assignment_representatives,
    eval_modal,
    eval_static,
    implies,
    satisfies,
)
from tracepi.parser import parse_formula, parse_process, parse_program
from tracepi.sampling import Gen, _atoms, random_formula
from tracepi.semantics import Engine
from tracepi.terms import FREE_ALGEBRA, Name

SECRECY = "G((x != a and x != b) -> P(not (x != a and x != b)))"
P1 = "if x = a then out(c,s) else out(d,s)"
Q1 = "if x = b then out(c,s) else out(d,s)"


def last_trace(text):
    p = parse_process(text)
    return p, list(Engine(FREE_ALGEBRA, JobConfig()).traces(p))[-1]


def test_eval_static_examples():
    p, tr = last_trace("out(a, s)")
    assert eval_static(parse_formula("true"), p, {}, tr, 0)
    assert eval_static(parse_formula("x = a"), p, {"x": Name("a")}, tr, 0)
    assert eval_static(parse_formula("#x1 in dom"), p, {}, tr, 1)
    assert not eval_static(parse_formula("#x1 in dom"), p, {}, tr, 0)
    assert not eval_static(parse_formula("a in dom"), p, {}, tr, 1)


def test_eval_static_variable_condition():
    p, tr = last_trace("out(a, s)")
    with pytest.raises(UnboundVariable):
        eval_static(parse_formula("x = a"), p, {}, tr, 0)


def test_eval_modal_basics():
    p, tr = last_trace("out(a, s)")
    assert eval_modal(parse_formula("F true"), p, {}, tr, 0)
    assert eval_modal(parse_formula("F true"), p, {}, tr, 1)
    assert eval_modal(parse_formula("<out(a, #x1)>- true"), p, {}, tr, 1)
    assert not eval_modal(parse_formula("<out(a, #x1)>- true"), p, {}, tr, 0)
    assert not eval_modal(parse_formula("<out(b, #x1)>- true"), p, {}, tr, 1)


def test_knowledge_after_ciphertext(enc_rs):
    prog = parse_program("fun enc/2. fun dec/2. reduc dec(enc(X,K),K) -> X.\nnew k. out(c, enc(x, k))")
    ev = Evaluator(prog.process, prog.rs, JobConfig(), parse_formula("x = a"))
    rho = {"x": Name("a")}
    tr = list(ev.traces(rho))[-1]
    # the ciphertext does not tell the attacker whether x = a
    assert not ev.holds(Knows(parse_formula("x = a")), rho, tr, 1)
    prog = parse_program("out(c, x)")
    ev = Evaluator(prog.process, FREE_ALGEBRA, JobConfig(), parse_formula("x = a"))
    tr = list(ev.traces(rho))[-1]
    assert ev.holds(Knows(parse_formula("x = a")), rho, tr, 1)
    assert not ev.holds(Knows(parse_formula("x = a")), rho, tr, 0)


def test_assignment_representatives():
    assert assignment_representatives(["x"], {"a"}) == [{"x": Name("#v1")}, {"x": Name("a")}]
    assert assignment_representatives([], {"a"}) == [{}]
    assert assignment_representatives(["x", "y"], set()) == [
        {"x": Name("#v1"), "y": Name("#v1")},
        {"x": Name("#v1"), "y": Name("#v2")},
    ]


def test_satisfies_trivial():
    assert satisfies(parse_process("0"), parse_formula("true")).holds


def test_satisfies_first_secrecy_example():
    phi = parse_formula(SECRECY)
    assert satisfies(parse_process(P1), phi).holds
    assert satisfies(parse_process(Q1), phi).holds
    v = satisfies(parse_process(f"({P1}) | ({Q1})"), phi)
    assert not v.holds
    assert v.trace.describe() == "out(d, #x1) . out(d, #x2)"
    assert not v.assignment["x"] in (Name("a"), Name("b"))


def test_satisfies_reverse_direction_fails():
    v = satisfies(parse_process(P1), parse_formula("G(not (x != a and x != b) -> P(x != a and x != b))"))
    assert not v.holds and v.assignment == {"x": Name("a")}
    assert v.trace.describe() == "out(c, #x1)"


def test_knows_fails_when_a_matching_run_exists():
    p = parse_process("(if x = m then out(a,n) else out(b,n)) | (if x = m then out(b,n) else out(a,n))")
    ev = Evaluator(p, FREE_ALGEBRA, JobConfig(), parse_formula("x = m"))
    rho = {"x": Name("m")}
    tr = next(t for t in ev.traces(rho) if t.describe() == "out(a, #x1) . out(b, #x2)")
    assert not ev.holds(parse_formula("K (x = m)"), rho, tr, 2)
    assert not ev.holds(parse_formula("K (x != b)"), rho, tr, 2)


def _instances(seed):
    rng = random.Random(seed)
    gen = Gen(rng)
    p = gen.plain(5, variables=["x"])
    ev = Evaluator(p, FREE_ALGEBRA, JobConfig(max_trace_len=2, recipe_depth=0, fresh_pool_size=1))
    atoms = _atoms(["a", "b"], ["#x1"])
    if ev.xvars:
        atoms += [parse_formula("x = a"), parse_formula("x = b")]
    return rng, p, ev, atoms


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_double_negation(seed):
    rng, p, ev, atoms = _instances(seed)
    phi = random_formula(rng, atoms, [], depth=2)
    for rho in assignment_representatives(ev.xvars, ev.base_anchors):
        for tr in ev.traces(rho):
            for i in range(len(tr) + 1):
                assert ev.holds(Not(Not(phi)), rho, tr, i) == ev.holds(phi, rho, tr, i)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6))
def test_knowledge_is_reflexive_and_introspective(seed):
    rng, p, ev, atoms = _instances(seed)
    phi = random_formula(rng, atoms, [], depth=1, knows=False)
    for rho in assignment_representatives(ev.xvars, ev.base_anchors):
        for tr in ev.traces(rho):
            for i in range(len(tr) + 1):
                k = ev.holds(Knows(phi), rho, tr, i)
                assert ev.holds(implies(Knows(phi), phi), rho, tr, i)
                assert k == ev.holds(Knows(Knows(phi)), rho, tr, i)


def test_permutation_invariance():
    p = parse_process("if x = a then out(c, x) else out(d, x)")
    phi = parse_formula("K (x = a) or F <out(d, #x1)>- true")
    ev = Evaluator(p, FREE_ALGEBRA, JobConfig(), phi)
    for fresh in ("#v1", "#v2", "q"):
        rho = {"x": Name(fresh)}
        got = [ev.holds(phi, rho, tr, i) for tr in ev.traces(rho) for i in range(len(tr) + 1)]
        if fresh == "#v1":
            expected = got
        assert got == expected
