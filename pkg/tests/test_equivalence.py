import random

from hypothesis import given, settings
from hypothesis import strategies as st

from tracepi.config import JobConfig
from tracepi.equivalence import (
    BOUNDED_EQUIVALENT,
    EQUIVALENT,
    INEQUIVALENT,
    trace_equiv,
    trace_inclusion,
    trace_match,
    trace_static_equiv,
    trace_static_mismatch,
)
from tracepi.parser import parse_process
from tracepi.process import substitute
from tracepi.sampling import PAIR_CFG, Gen, congruence_suite, equivalent_variant, sample_pair
from tracepi.semantics import Engine, Trace, initial_state
from tracepi.terms import FREE_ALGEBRA, Name, Var

CFG = JobConfig(max_trace_len=3)
P = parse_process("out(a,s).out(b,s) + out(a,s).out(c,s)")
Q = parse_process("out(a,s).(out(b,s) + out(c,s))")
SECRET_TEST = parse_process("if x = a then out(c,s) else out(d,s)")


def traces_of(p, n):
    return [t for t in Engine(FREE_ALGEBRA, CFG).traces(p) if len(t) == n]


def test_trace_static_equiv():
    tp, tq = traces_of(P, 2)[0], traces_of(Q, 2)[0]
    assert trace_static_equiv(tp, tp)
    assert trace_static_equiv(tp, tq)
    ta, tb = traces_of(parse_process("out(c, a)"), 1)[0], traces_of(parse_process("out(c, b)"), 1)[0]
    assert not trace_static_equiv(ta, tb)
    m = trace_static_mismatch(ta, tb)
    assert m.index == 1 and set(m.test) == {Name("a"), Var("#x1")}


def test_trace_static_equiv_needs_equal_labels():
    ta, tb = traces_of(parse_process("out(c, a)"), 1)[0], traces_of(parse_process("out(d, a)"), 1)[0]
    assert not trace_static_equiv(ta, tb)


def test_trace_match():
    ref = traces_of(P, 2)[0]
    found = trace_match(Q, ref, CFG)
    assert found is not None and found.describe() == ref.describe()
    assert trace_static_equiv(ref, found)
    empty = trace_match(Q, Trace(initial_state(P, FREE_ALGEBRA)), CFG)
    assert empty is not None and len(empty) == 0


def test_trace_match_fails_for_other_instance():
    ref = traces_of(substitute(SECRET_TEST, {"x": Name("a")}), 1)[0]
    assert ref.describe() == "out(c, #x1)"
    assert trace_match(substitute(SECRET_TEST, {"x": Name("b")}), ref, CFG) is None


def test_trace_inclusion():
    assert trace_inclusion(P, Q, CFG).result == EQUIVALENT
    assert trace_inclusion(Q, P, CFG).result == EQUIVALENT
    assert trace_inclusion(P, P, CFG).result == EQUIVALENT
    v = trace_inclusion(parse_process("out(a, a)"), parse_process("out(a, b)"), CFG)
    assert v.result == INEQUIVALENT
    assert v.witness.describe() == "out(a, #x1)"
    assert v.to_dict()["reason"] == {"index": 1, "reason": "test", "test": ["a", "#x1"]}


def test_inclusion_is_one_way():
    small, big = parse_process("out(c, a)"), parse_process("out(c, a) + out(d, a)")
    assert trace_inclusion(small, big, CFG).result == EQUIVALENT
    assert trace_inclusion(big, small, CFG).result == INEQUIVALENT


def test_trace_equiv():
    assert trace_equiv(P, Q, CFG).result == EQUIVALENT
    assert trace_equiv(P, P, CFG).result == EQUIVALENT


def test_trace_equiv_open_processes_are_bounded():
    a = parse_process("new n. ((if x = a then out(b,s)) + (if x = n then out(b,s)))")
    b = parse_process("if x = a then out(b,s)")
    v = trace_equiv(a, b, CFG)
    assert v.result == BOUNDED_EQUIVALENT
    assert "assignment_pool" in v.bounds


def test_open_inequivalence_reports_assignment():
    v = trace_equiv(parse_process("out(c, x)"), parse_process("out(c, a)"), CFG)
    assert v.result == INEQUIVALENT and v.assignment is not None


def test_canonically_equal_processes_are_equivalent():
    a = parse_process("out(c, a) | (out(d, b) | 0)")
    b = parse_process("out(d, b) | out(c, a)")
    assert initial_state(a, FREE_ALGEBRA) == initial_state(b, FREE_ALGEBRA)
    assert trace_equiv(a, b, CFG).result == EQUIVALENT


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_sound_rewrites_are_equivalent(enc_rs, seed):
    gen = Gen(random.Random(seed))
    p = gen.plain(5)
    a, b = equivalent_variant(gen, p)
    assert trace_equiv(a, b, PAIR_CFG, enc_rs).equivalent


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_equivalence_relation_on_samples(enc_rs, seed):
    gen = Gen(random.Random(seed))
    a, b = sample_pair(gen, True)
    c = sample_pair(gen, False)[0]
    eq = lambda x, y: trace_equiv(x, y, PAIR_CFG, enc_rs).equivalent  # noqa: E731
    assert eq(a, a)
    assert eq(a, b) == eq(b, a)
    if eq(a, b) and eq(b, c):
        assert eq(a, c)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_match_implies_static_equivalence(enc_rs, seed):
    gen = Gen(random.Random(seed))
    a, b = sample_pair(gen, seed % 2 == 0)
    eng = Engine(enc_rs, PAIR_CFG)
    for ref in eng.traces(a):
        found = trace_match(b, ref, PAIR_CFG, enc_rs)
        if found is not None:
            assert trace_static_equiv(ref, found, enc_rs)


def test_congruence_small():
    r = congruence_suite(seed=4, count=4)
    assert r.instances > 0 and r.violations == 0, r.examples
