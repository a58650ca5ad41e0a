import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DH, program
from tracepi.config import SILENT_GRANULAR, JobConfig
from tracepi.errors import NonGroundGuard
from tracepi.frames import static_equiv
from tracepi.frames import test_holds as holds
from tracepi.parser import parse_process
from tracepi.sampling import LEMMAS, Gen, lemma_suite
from tracepi.semantics import (
    AliasOut,
    Engine,
    Input,
    internal_successors,
    is_maximal,
    labelled_successors,
    traces,
)
from tracepi.terms import FREE_ALGEBRA, Name, Var

DH_SYSTEM = (
    "(new a, kA. out(c, g(a)). in(d, x). {f(a,x)/kA})"
    " | (new b, kB. in(c, y). out(d, g(b)). {f(b,y)/kB})"
)
EAVESDROP = "out(c, #x1) . in(c, #x1) . out(d, #x2) . in(d, #x2)"
MITM = "out(c, #x1) . in(c, g(r)) . out(d, #x2) . in(d, g(s))"


def texts(states):
    return sorted(str(s) for s in states)


def test_conditional_then():
    assert texts(internal_successors(parse_process("if a = a then out(c, a) else out(d, a)"), FREE_ALGEBRA)) == [
        "out(c, a)"
    ]


def test_conditional_else_needs_ground_guard():
    assert texts(internal_successors(parse_process("if a = b then out(c, a) else out(d, a)"), FREE_ALGEBRA)) == [
        "out(d, a)"
    ]
    with pytest.raises(NonGroundGuard):
        internal_successors(parse_process("if x = a then out(c, a) else out(d, a)"), FREE_ALGEBRA)


def test_choice():
    assert texts(internal_successors(parse_process("out(c, a) + out(d, a)"), FREE_ALGEBRA)) == ["out(c, a)", "out(d, a)"]


def test_communication():
    succ = internal_successors(parse_process("out(a, n).out(b, n) | in(a, x).out(c, x)"), FREE_ALGEBRA)
    assert texts(succ) == ["out(b, n) | out(c, n)"]


def test_communication_modulo_theory(enc_rs):
    p = program("out(dec(enc(a,k),k), n) | in(a, x).out(c, x)").process
    assert texts(internal_successors(p, enc_rs)) == ["out(c, n)"]


def test_output_transition():
    ((act, s),) = labelled_successors(parse_process("out(a, n).out(b, n)"), None, FREE_ALGEBRA)
    assert act == AliasOut(Name("a"), "#x1")
    assert str(s) == "{n/#x1} | out(b, n)"


def test_input_transition():
    ((act, s),) = labelled_successors(parse_process("in(a, x).out(c, x)"), [Name("b")], FREE_ALGEBRA)
    assert act == Input(Name("a"), Name("b"))
    assert str(s) == "out(c, b)"


def test_traces_of_nil():
    assert [t.describe() for t in traces(parse_process("0"), 3, None, FREE_ALGEBRA)] == ["(empty)"]


def test_traces_of_choice_example():
    p = parse_process("out(a,s).out(b,s) + out(a,s).out(c,s)")
    seqs = {t.describe() for t in traces(p, 3, None, FREE_ALGEBRA)}
    assert seqs == {"(empty)", "out(a, #x1)", "out(a, #x1) . out(b, #x2)", "out(a, #x1) . out(c, #x2)"}


def test_silent_granular_records_tau():
    eng = Engine(FREE_ALGEBRA, JobConfig(max_trace_len=2, comparison_mode=SILENT_GRANULAR))
    seqs = [t.describe() for t in eng.traces(parse_process("out(a,s) + out(b,s)"))]
    assert seqs == ["(empty)", "tau", "tau", "tau . out(a, #x1)", "tau . out(b, #x1)"]


def test_is_maximal():
    assert is_maximal(parse_process("0"), None, FREE_ALGEBRA)
    assert is_maximal(parse_process("{a/x}"), None, FREE_ALGEBRA)
    assert not is_maximal(parse_process("in(a, x).0"), [Name("b")], FREE_ALGEBRA)


def test_replication_is_bounded():
    eng = Engine(FREE_ALGEBRA, JobConfig(max_trace_len=4, repl_bound=2))
    longest = max(len(t) for t in eng.traces(parse_process("!out(c, a)")))
    assert longest == 2


def _dh_traces():
    prog = program(DH_SYSTEM, DH)
    eng = Engine(prog.rs, JobConfig(max_trace_len=4, attacker_names=("r", "s")))
    return {t.describe(): t for t in eng.traces(prog.process)}


def test_dh_eavesdrop_and_mitm_traces():
    found = _dh_traces()
    for seq in (EAVESDROP, MITM):
        t = found[seq]
        phi = t.last.frame_obj()
        assert len(phi.names) == 2
        assert sorted(str(m) for _, m in phi.subst) == sorted(f"g({n})" for n in phi.names)


def test_dh_keys_agree_after_eavesdrop():
    # with kA and kB left public, both parties end up with the same key
    prog = program(DH_SYSTEM.replace("new a, kA.", "new a.").replace("new b, kB.", "new b."), DH)
    eng = Engine(prog.rs, JobConfig(max_trace_len=4, attacker_names=("r", "s")))
    found = {t.describe(): t for t in eng.traces(prog.process)}
    phi = found[EAVESDROP].last.frame_obj()
    assert holds(Var("kA"), Var("kB"), phi, prog.rs)
    assert not holds(Var("kA"), Var("kB"), found[MITM].last.frame_obj(), prog.rs)


def test_trace_jsonl_shape():
    eng = Engine(FREE_ALGEBRA, JobConfig(max_trace_len=2))
    t = list(eng.traces(parse_process("out(a, s).out(b, s)")))[-1]
    lines = t.to_jsonl().splitlines()
    assert len(lines) == 3
    assert '"alias": "#x2"' in lines[2] and '"#x1": "s"' in lines[2]


def _random_closed(seed):
    gen = Gen(random.Random(seed))
    return gen.plain(7, bang=True)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_traces_replay(enc_rs, seed):
    eng = Engine(enc_rs, JobConfig(max_trace_len=2, recipe_depth=0, fresh_pool_size=1))
    for t in eng.traces(_random_closed(seed)):
        assert eng.validate(t)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_silent_steps_keep_the_frame(enc_rs, seed):
    gen = Gen(random.Random(seed))
    sigma = gen.sigma(2)
    from tracepi.sampling import with_sigma

    p = gen.plain(7)
    eng = Engine(enc_rs, JobConfig())
    s = eng.initial(with_sigma(sigma, p))
    for nxt in eng.internal(s):
        assert static_equiv(s.frame_obj(), nxt.frame_obj(), enc_rs).equivalent


@pytest.mark.parametrize("name", sorted(LEMMAS))
def test_lemma_suite_small(name):
    r = lemma_suite(name, seed=11, count=60)
    assert r.instances == 60
    assert r.violations == 0, r.examples
