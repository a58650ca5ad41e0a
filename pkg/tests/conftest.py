import pytest
from hypothesis import strategies as st

from tracepi.parser import parse_program, parse_theory
from tracepi.terms import App, Name, Var

DEC_ENC = "fun enc/2. fun dec/2. reduc dec(enc(X,K),K) -> X."
DH = "fun f/2. fun g/1. comm f via g."


@pytest.fixture(scope="session")
def enc_rs():
    return parse_theory(DEC_ENC)[1]


@pytest.fixture(scope="session")
def dh_rs():
    return parse_theory(DH)[1]


def program(text, theory=DEC_ENC):
    return parse_program(theory + "\n" + text)


def terms(names=("a", "b", "k"), variables=("x", "y"), depth=3):
    """Terms over enc/dec with the given leaves."""
    leaves = [Name(n) for n in names] + [Var(v) for v in variables]
    base = st.sampled_from(leaves)
    return st.recursive(
        base,
        lambda sub: st.builds(lambda s, l, r: App(s, [l, r]), st.sampled_from(["enc", "dec"]), sub, sub),
        max_leaves=2**depth,
    )


def ground_terms(names=("a", "b", "k"), depth=3):
    return terms(names, (), depth)


def pytest_terminal_summary(terminalreporter):
    lines = [
        value
        for reports in terminalreporter.stats.values()
        for rep in reports
        if getattr(rep, "when", None) == "call"
        for key, value in getattr(rep, "user_properties", ())
        if key == "acceptance"
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
