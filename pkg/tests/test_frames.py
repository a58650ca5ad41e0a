import random

from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import program
from tracepi.frames import Frame, deduce, evaluate, frame_of, static_equiv, static_equiv_oracle
from tracepi.frames import test_holds as holds
from tracepi.parser import parse_term
from tracepi.sampling import Gen


def fr(text):
    return frame_of(program(text).process)


def test_frame_of_plain_is_empty():
    assert fr("out(c, a)") == Frame()


def test_frame_of_restricted_substitution():
    phi = fr("new n. {enc(s,n)/x}")
    assert phi.names == {"n"}
    assert str(phi.mapping["x"]) == "enc(s, n)"


def test_frame_of_nested():
    phi = fr("new n. (out(c, a) | {n/x}) | {a/y}")
    assert phi.names == {"n"}
    assert {x: str(t) for x, t in phi.subst} == {"x": "n", "y": "a"}


def test_frame_of_splits_shadowed_names():
    phi = fr("new k. {enc(s,k)/x} | new k. {k/y}")
    assert len(phi.names) == 2
    assert phi.mapping["y"] != parse_term("k")


def test_frame_tests(enc_rs):
    assert holds(parse_term("x"), parse_term("a"), Frame.of({"x": parse_term("a")}), enc_rs)
    phi = fr("new k. ({enc(s,k)/x} | {k/y})")
    assert holds(parse_term("dec(x,y)"), parse_term("s"), phi, enc_rs)
    # the free k of the test is not the bound k of the frame
    psi = fr("new k. {enc(s,k)/x}")
    assert not holds(parse_term("x"), parse_term("enc(s,k)"), psi, enc_rs)
    assert not holds(parse_term("y"), parse_term("y"), psi, enc_rs)


def test_deduce(enc_rs):
    phi = fr("new k, s. ({enc(s,k)/x} | {k/y})")
    assert str(deduce(phi, parse_term("s"), enc_rs)) == "dec(x, y)"
    assert str(deduce(phi, parse_term("enc(s,a)"), enc_rs)) == "enc(dec(x, y), a)"
    assert deduce(Frame(), parse_term("a"), enc_rs) == parse_term("a")
    assert deduce(fr("new k. {enc(s,k)/x}"), parse_term("k"), enc_rs, depth=4) is None


def test_deduced_recipe_evaluates_to_target(enc_rs):
    phi = fr("new k, s. ({enc(s,k)/x} | {k/y})")
    r = deduce(phi, parse_term("s"), enc_rs)
    assert evaluate(r, phi, enc_rs) == parse_term("s")


def test_static_equiv_examples(enc_rs):
    e1, e2 = fr("new k. {enc(a,k)/x}"), fr("new k. {enc(b,k)/x}")
    assert static_equiv(e1, e2, enc_rs).equivalent
    assert static_equiv_oracle(e1, e2, enc_rs, 3).equivalent
    f1, f2 = Frame.of({"x": parse_term("a")}), Frame.of({"x": parse_term("b")})
    v = static_equiv(f1, f2, enc_rs)
    assert not v.equivalent and set(v.witness) == {parse_term("x"), parse_term("a")}
    assert static_equiv_oracle(f1, f2, enc_rs, 0).witness == v.witness
    assert static_equiv(Frame(), Frame(), enc_rs).equivalent


def test_static_equiv_domain_mismatch(enc_rs):
    v = static_equiv(Frame.of({"x": parse_term("a")}), Frame.of({"y": parse_term("a")}), enc_rs)
    assert not v.equivalent and v.reason == "domain-mismatch"


def test_static_equiv_key_revealed(enc_rs):
    # once the key is published the two ciphertexts open to different names
    v = static_equiv(fr("new k. ({enc(a,k)/x} | {k/y})"), fr("new k. ({enc(b,k)/x} | {k/y})"), enc_rs)
    assert not v.equivalent


def test_oracle_reflexive(enc_rs):
    phi = fr("new k. ({enc(a,k)/x} | {k/y})")
    for depth in range(4):
        assert static_equiv_oracle(phi, phi, enc_rs, depth).equivalent


def _frames(seed, n):
    gen = Gen(random.Random(seed))
    return [gen.frame() for _ in range(n)]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_static_equiv_reflexive_symmetric(enc_rs, seed):
    phi, psi = _frames(seed, 2)
    assert static_equiv(phi, phi, enc_rs).equivalent
    assert static_equiv(phi, psi, enc_rs).equivalent == static_equiv(psi, phi, enc_rs).equivalent


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_static_equiv_transitive_on_mutants(enc_rs, seed):
    gen = Gen(random.Random(seed))
    a = gen.frame()
    b, c = gen.mutate_frame(a), gen.mutate_frame(a)
    if static_equiv(a, b, enc_rs) and static_equiv(a, c, enc_rs):
        assert static_equiv(b, c, enc_rs).equivalent


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_alpha_renaming_preserves_verdict(enc_rs, seed):
    phi, psi = _frames(seed, 2)
    renamed = phi.rename_bound({n: f"q{i}" for i, n in enumerate(sorted(phi.names))})
    assert static_equiv(phi, psi, enc_rs).equivalent == static_equiv(renamed, psi, enc_rs).equivalent
    assert static_equiv(phi, renamed, enc_rs).equivalent


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_deduction_transfers_across_equivalent_frames(enc_rs, seed):
    gen = Gen(random.Random(seed))
    phi = gen.frame()
    psi = gen.mutate_frame(phi)
    if not static_equiv(phi, psi, enc_rs):
        return
    for _, t in phi.subst:
        r = deduce(phi, enc_rs.normalize(t), enc_rs)
        if r is not None:
            assert holds(r, r, psi, enc_rs)
            assert deduce(psi, evaluate(r, psi, enc_rs), enc_rs) is not None


def test_oracle_agrees_on_sample(enc_rs):
    gen = Gen(random.Random(7))
    for _ in range(40):
        phi = gen.frame()
        psi = gen.mutate_frame(phi)
        assert static_equiv(phi, psi, enc_rs).equivalent == static_equiv_oracle(phi, psi, enc_rs, 3).equivalent
