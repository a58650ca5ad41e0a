import random

import pytest

from tracepi.config import JobConfig
from tracepi.logic import Not, satisfies
from tracepi.parser import parse_process
from tracepi.sampling import (
    LEMMA_BUDGET,
    Gen,
    correspondence_suite,
    distinguishing_formula,
    lemma_suite,
    oracle_suite,
    process_size,
    run_selftest,
    secrecy_context_suite,
)
from tracepi.semantics import Engine
from tracepi.terms import FREE_ALGEBRA


def test_process_size_counts_nil():
    assert process_size(parse_process("0")) == 1
    assert process_size(parse_process("out(a, b)")) == 2
    assert process_size(parse_process("out(a, b) | in(c, x).0")) == 5


def test_generated_processes_respect_budget():
    gen = Gen(random.Random(0))
    for _ in range(300):
        assert process_size(gen.plain(LEMMA_BUDGET)) <= LEMMA_BUDGET


def test_suites_are_deterministic():
    a = lemma_suite("change-label", seed=5, count=30).to_dict()
    b = lemma_suite("change-label", seed=5, count=30).to_dict()
    a.pop("seconds"), b.pop("seconds")
    assert a == b


def test_oracle_suite_small():
    r = oracle_suite(seed=2, count=40)
    assert r.instances == 40 and r.violations == 0
    assert r.examples[0]["equivalent_pairs"] > 0


def test_distinguishing_formula():
    cfg = JobConfig(max_trace_len=2, recipe_depth=0, fresh_pool_size=1)
    a, b = parse_process("out(c, a).out(c, a)"), parse_process("out(c, a).out(c, b)")
    witness = [t for t in Engine(FREE_ALGEBRA, cfg).traces(a) if len(t) == 2][0]
    phi = distinguishing_formula(witness, b, cfg, FREE_ALGEBRA)
    assert not satisfies(a, Not(phi), cfg).holds
    assert satisfies(b, Not(phi), cfg).holds


def test_distinguishing_formula_requires_a_difference():
    cfg = JobConfig(max_trace_len=1)
    a = parse_process("out(c, a)")
    witness = list(Engine(FREE_ALGEBRA, cfg).traces(a))[-1]
    with pytest.raises(ValueError):
        distinguishing_formula(witness, a, cfg, FREE_ALGEBRA)


def test_correspondence_small():
    r = correspondence_suite(seed=1, count=8)
    assert r.violations == 0, r.examples


def test_secrecy_contexts_small():
    r = secrecy_context_suite(seed=0, count=1)
    assert r.instances > 0 and r.violations == 0, r.examples


def test_run_selftest_unknown_suite():
    with pytest.raises(ValueError):
        run_selftest("nope")
