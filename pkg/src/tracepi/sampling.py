"""Randomized self-test suites.

Generators for small processes, frames and formulas, and the checks built on
them: the five transition lemmas, the static-equivalence oracle
differential, the logic/trace-equivalence correspondence, the congruence
spot-check and preservation of total secrecy under evaluation contexts.
Every suite takes an explicit seed and reports the number of instances
checked and the violations found.
"""

from __future__ import annotations

import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from .config import JobConfig, worker_count
from .equivalence import BOUNDED_EQUIVALENT, EQUIVALENT, INEQUIVALENT, matching_traces, trace_equiv
from .frames import Frame, static_equiv, static_equiv_oracle
from .logic import Eq, Evaluator, Formula, Future, InDom, Knows, Not, Or, Prev, Top, conj, satisfies
from .parser import parse_theory
from .process import NIL, Bang, Choice, If, In, New, NewVar, Out, Par, Process, Sub, par, substitute
from .properties import BOUNDED_HOLDS, HOLDS, total_secrecy
from .semantics import AliasOut, Engine, Input, State, Trace
from .terms import App, Name, RewriteSystem, Term, Var, substitute as subst_term, term_vars

DEC_ENC_TEXT = "fun enc/2. fun dec/2. reduc dec(enc(X,K),K) -> X."
PUBLIC = ("a", "b", "c")


def dec_enc() -> RewriteSystem:
    return parse_theory(DEC_ENC_TEXT)[1]


def process_size(p: Process) -> int:
    """AST nodes of a process (terms not counted, Nil counted)."""
    if isinstance(p, (Out, In)):
        return 1 + process_size(p.cont)
    if isinstance(p, (New, NewVar, Bang)):
        return 1 + process_size(p.body)
    if isinstance(p, If):
        return 1 + process_size(p.then) + process_size(p.else_)
    if isinstance(p, (Choice, Par)):
        return 1 + process_size(p.left) + process_size(p.right)
    return 1


# ---------------------------------------------------------------------------
# Generators


class Gen:
    """Random terms, plain processes and frames over a fixed small alphabet."""

    def __init__(self, rng: random.Random, names=PUBLIC, symbols=(("enc", 2), ("dec", 2))):
        self.rng = rng
        self.names = tuple(names)
        self.symbols = tuple(symbols)
        self._k = 0

    def fresh(self, prefix: str) -> str:
        self._k += 1
        return f"{prefix}{self._k}"

    def term(self, names, variables=(), depth: int = 1) -> Term:
        leaves = [Name(n) for n in names] + [Var(v) for v in variables]
        if depth <= 0 or not self.symbols or self.rng.random() < 0.6:
            return self.rng.choice(leaves)
        sym, arity = self.rng.choice(self.symbols)
        return App(sym, tuple(self.term(names, variables, depth - 1) for _ in range(arity)))

    def channel(self, names, variables=()) -> Term:
        if variables and self.rng.random() < 0.15:
            return Var(self.rng.choice(list(variables)))
        return Name(self.rng.choice(list(names)))

    def plain(self, budget: int, names=None, variables=(), bang: bool = False) -> Process:
        """A plain process of at most ``budget`` nodes whose free variables are among ``variables``."""
        names = list(names or self.names)
        variables = list(variables)
        rng = self.rng
        if budget <= 1:
            return NIL
        kinds = ["out", "out", "in", "in", "nil"]
        if budget >= 3:
            kinds += ["par", "choice", "new"]
        if budget >= 4:
            kinds.append("if")
        if bang and budget >= 3:
            kinds.append("bang")
        kind = rng.choice(kinds)
        if kind == "nil":
            return NIL
        if kind == "out":
            return Out(self.channel(names, variables), self.term(names, variables), self.plain(budget - 1, names, variables))
        if kind == "in":
            x = self.fresh("z")
            return In(self.channel(names, variables), x, self.plain(budget - 1, names, variables + [x]))
        if kind == "new":
            n = self.fresh("n")
            return New(n, self.plain(budget - 1, names + [n], variables))
        if kind == "bang":
            return Bang(self.plain(min(budget - 1, 3), names, variables))
        left = rng.randint(1, budget - 2)
        if kind == "if":
            then_budget = rng.randint(1, budget - 2)
            t1, t2 = self.term(names, variables), self.term(names, variables)
            if rng.random() < 0.3:
                t2 = t1
            return If(
                t1,
                t2,
                self.plain(then_budget, names, variables),
                self.plain(budget - 1 - then_budget, names, variables),
            )
        a = self.plain(left, names, variables)
        b = self.plain(budget - 1 - left, names, variables)
        return Par(a, b) if kind == "par" else Choice(a, b)

    def sigma(self, count: int, names=None, prefix: str = "y") -> dict[str, Term]:
        names = list(names or self.names)
        return {f"{prefix}{i + 1}": self.term(names, (), 2) for i in range(count)}

    def frame(self, max_dom: int = 3, bound=("n1", "n2"), public=("a", "b"), depth: int = 2, dom: int = 0) -> Frame:
        rng = self.rng
        names = [n for n in bound if rng.random() < 0.6]
        alphabet = list(public) + list(bound)
        dom = dom or rng.randint(1, max_dom)
        subst = {f"x{i + 1}": self.term(alphabet, (), rng.randint(0, depth)) for i in range(dom)}
        return Frame.of(subst, names)

    def mutate_frame(self, phi: Frame, public=("a", "b"), bound=("n1", "n2")) -> Frame:
        """A frame close to phi: bound names renamed, one image replaced, or images swapped."""
        rng = self.rng
        subst = phi.mapping
        names = set(phi.names)
        move = rng.randrange(4)
        if move == 0 and names:
            old = rng.choice(sorted(names))
            new = "n3" if old != "n3" else "n4"
            return phi.rename_bound({old: new})
        if move == 1:
            x = rng.choice(sorted(subst))
            subst[x] = self.term(list(public) + list(bound), (), rng.randint(0, 2))
        elif move == 2 and len(subst) > 1:
            xs = sorted(subst)
            i, j = rng.sample(range(len(xs)), 2)
            subst[xs[i]], subst[xs[j]] = subst[xs[j]], subst[xs[i]]
        else:
            n = rng.choice(list(bound))
            if n in names:
                names.discard(n)
            else:
                names.add(n)
        return Frame.of(subst, names)


def with_sigma(sigma: dict[str, Term], p: Process) -> Process:
    return par(*[Sub(x, t) for x, t in sorted(sigma.items())], p)


def subst_action(action, sigma: dict[str, Term]):
    if isinstance(action, Input):
        return Input(subst_term(action.channel, sigma), subst_term(action.payload, sigma))
    if isinstance(action, AliasOut):
        return AliasOut(subst_term(action.channel, sigma), action.alias)
    return action


def action_names(action) -> frozenset[str]:
    from .terms import term_names

    if isinstance(action, Input):
        return term_names(action.channel) | term_names(action.payload)
    if isinstance(action, AliasOut):
        return term_names(action.channel)
    return frozenset()


def _abstract(t: Term, sigma: dict[str, Term], rng: random.Random) -> Term:
    """Randomly fold occurrences of sigma's images back into their variables."""
    for x, m in sorted(sigma.items()):
        if t == m and rng.random() < 0.7:
            return Var(x)
    if isinstance(t, App):
        return App(t.symbol, tuple(_abstract(a, sigma, rng) for a in t.args))
    return t


# ---------------------------------------------------------------------------
# Lemma suites


@dataclass
class SuiteResult:
    suite: str
    seed: int
    instances: int = 0
    violations: int = 0
    skipped: int = 0
    examples: list = field(default_factory=list)
    seconds: float = 0.0

    def fail(self, detail: dict) -> None:
        self.violations += 1
        if len(self.examples) < 3:
            self.examples.append(detail)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "instances": self.instances,
            "violations": self.violations,
            "skipped": self.skipped,
            "examples": self.examples,
            "seconds": round(self.seconds, 3),
        }


LEMMA_BUDGET = 8
LEMMA_CFG = JobConfig(max_trace_len=1, recipe_depth=1, fresh_pool_size=1)


def _engine(rs: RewriteSystem) -> Engine:
    return Engine(rs, LEMMA_CFG)


def _pick(rng: random.Random, items):
    items = list(items)
    return rng.choice(items) if items else None


def _lemma_instance_drop_sigma(gen: Gen, rs: RewriteSystem):
    """P --(alpha sigma)--> A  implies  sigma | P --alpha--> sigma | A."""
    rng = gen.rng
    eng = _engine(rs)
    sigma = gen.sigma(rng.randint(1, 2))
    p = gen.plain(LEMMA_BUDGET)
    step = _pick(rng, eng.labelled(eng.initial(p)))
    if step is None:
        return None
    concrete, a = step
    alpha = concrete
    if isinstance(concrete, Input):
        alpha = Input(_abstract(concrete.channel, sigma, rng), _abstract(concrete.payload, sigma, rng))
    elif isinstance(concrete, AliasOut):
        alpha = AliasOut(_abstract(concrete.channel, sigma, rng), concrete.alias)
    assert subst_action(alpha, sigma) == concrete
    start = eng.initial(with_sigma(sigma, p))
    goal = eng.initial(with_sigma(sigma, a.to_process()))
    ok = goal in eng.steps_with_label(start, alpha)
    return ok, {"P": str(p), "sigma": _show(sigma), "alpha": str(alpha), "A": str(a)}


def _lemma_instance_drop_nu(gen: Gen, rs: RewriteSystem):
    """nu u.A --mu--> B  implies  A --mu--> B' with B == nu u.B'."""
    rng = gen.rng
    eng = _engine(rs)
    if rng.random() < 0.5:
        u = "m"
        sigma = gen.sigma(rng.randint(0, 1), list(PUBLIC) + [u])
        a = with_sigma(sigma, gen.plain(LEMMA_BUDGET, list(PUBLIC) + [u], sorted(sigma)))
        wrap: Callable[[Process], Process] = lambda q: New(u, q)
    else:
        u = "y1"
        sigma = gen.sigma(rng.randint(1, 2))
        a = with_sigma(sigma, gen.plain(LEMMA_BUDGET, None, sorted(sigma)))
        wrap = lambda q: NewVar(u, q)
    start = eng.initial(wrap(a))
    step = _pick(rng, eng.labelled(start))
    if step is None:
        return None
    mu, b = step
    if u in action_names(mu) or u in term_vars(getattr(mu, "channel", Name("a"))):
        return None
    candidates = eng.steps_with_label(eng.initial(a), mu)
    ok = any(eng.initial(wrap(b2.to_process())) == b for b2 in candidates)
    return ok, {"A": str(a), "u": u, "mu": str(mu), "B": str(b)}


def _same_value_recipe(gen: Gen, eng: Engine, s: State, recipe: Term) -> Term:
    """A different recipe with the same value under s's frame."""
    rng = gen.rng
    target = eng.evaluate(s, recipe)
    if rng.random() < 0.5:
        base = [Var(x) for x in sorted(s.domain)] + [Name(n) for n in PUBLIC]
        options = [r for r in base if r != recipe and eng.evaluate(s, r) == target]
        for sym in ("enc", "dec"):
            for r1 in base:
                for r2 in base:
                    r = App(sym, (r1, r2))
                    if r != recipe and eng.evaluate(s, r) == target:
                        options.append(r)
        if options:
            return rng.choice(options)
    key = Name(rng.choice(PUBLIC))
    return App("dec", (App("enc", (recipe, key)), key))


def _lemma_instance_change_label(gen: Gen, rs: RewriteSystem):
    """Closed normal nu n.(sigma | P): alpha sigma = beta sigma transfers the step to beta."""
    rng = gen.rng
    eng = _engine(rs)
    bound = [f"k{i + 1}" for i in range(rng.randint(0, 2))]
    sigma = gen.sigma(rng.randint(1, 2), list(PUBLIC) + bound)
    p = gen.plain(LEMMA_BUDGET, list(PUBLIC) + bound, sorted(sigma))
    proc: Process = with_sigma(sigma, p)
    for n in reversed(bound):
        proc = New(n, proc)
    s = eng.initial(proc)
    step = _pick(rng, eng.labelled(s))
    if step is None:
        return None
    alpha, a = step
    if isinstance(alpha, Input):
        beta = Input(_same_value_recipe(gen, eng, s, alpha.channel), _same_value_recipe(gen, eng, s, alpha.payload))
    elif isinstance(alpha, AliasOut):
        beta = AliasOut(_same_value_recipe(gen, eng, s, alpha.channel), alpha.alias)
    else:
        return None
    ok = a in eng.steps_with_label(s, beta)
    return ok, {"process": str(proc), "alpha": str(alpha), "beta": str(beta), "A": str(a)}


def _drop_frame(s: State, dom) -> Process:
    kept = tuple((x, t) for x, t in s.frame if x not in dom)
    return State(s.names, kept, s.procs, s.bangs, s.pending).to_process()


def _lemma_instance_erase_sigma(gen: Gen, rs: RewriteSystem):
    """sigma | A --mu--> sigma | B with fv(mu) outside dom(sigma)  implies  A sigma --mu--> B sigma."""
    rng = gen.rng
    eng = _engine(rs)
    sigma = gen.sigma(rng.randint(1, 2))
    variables = sorted(sigma)
    own: dict[str, Term] = {}
    if rng.random() < 0.4:
        own = {"w1": gen.term(PUBLIC, variables, 1)}
    a = with_sigma(own, gen.plain(LEMMA_BUDGET - len(own), None, variables + sorted(own)))
    steps = [(mu, s2) for mu, s2 in eng.labelled(eng.initial(with_sigma(sigma, a))) if not _fv(mu) & set(sigma)]
    step = _pick(rng, steps)
    if step is None:
        return None
    mu, s2 = step
    b = _drop_frame(s2, set(sigma))
    goal = eng.initial(b)
    ok = goal in eng.steps_with_label(eng.initial(substitute(a, sigma)), mu)
    return ok, {"A": str(a), "sigma": _show(sigma), "mu": str(mu), "B": str(b)}


def _lemma_instance_shift_sigma(gen: Gen, rs: RewriteSystem):
    """Closed normal sigma | P --mu--> B  implies  P sigma --(mu sigma)--> B' with B == sigma | B'."""
    rng = gen.rng
    eng = _engine(rs)
    sigma = gen.sigma(rng.randint(1, 2))
    p = gen.plain(LEMMA_BUDGET, None, sorted(sigma))
    step = _pick(rng, eng.labelled(eng.initial(with_sigma(sigma, p))))
    if step is None:
        return None
    mu, b = step
    candidates = eng.steps_with_label(eng.initial(substitute(p, sigma)), subst_action(mu, sigma))
    ok = any(eng.initial(with_sigma(sigma, b2.to_process())) == b for b2 in candidates)
    return ok, {"P": str(p), "sigma": _show(sigma), "mu": str(mu), "B": str(b)}


def _fv(action) -> set[str]:
    if isinstance(action, Input):
        return set(term_vars(action.channel) | term_vars(action.payload))
    if isinstance(action, AliasOut):
        return set(term_vars(action.channel))
    return set()


def _show(sigma: dict[str, Term]) -> str:
    return "{" + ", ".join(f"{t}/{x}" for x, t in sorted(sigma.items())) + "}"


LEMMAS = {
    "drop-sigma": _lemma_instance_drop_sigma,
    "drop-nu": _lemma_instance_drop_nu,
    "change-label": _lemma_instance_change_label,
    "erase-sigma": _lemma_instance_erase_sigma,
    "shift-sigma": _lemma_instance_shift_sigma,
}


def lemma_suite(name: str, seed: int = 0, count: int = 500, rs: RewriteSystem | None = None) -> SuiteResult:
    """Check one transition lemma on ``count`` random instances with a transition premise."""
    rs = rs or dec_enc()
    check = LEMMAS[name]
    res = SuiteResult(name, seed)
    rng = random.Random(f"{name}:{seed}")
    t0 = time.perf_counter()
    attempts = 0
    while res.instances < count and attempts < count * 50:
        attempts += 1
        gen = Gen(rng)
        out = check(gen, rs)
        if out is None:
            res.skipped += 1
            continue
        ok, detail = out
        res.instances += 1
        if not ok:
            res.fail(detail)
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# Static equivalence oracle differential


def oracle_suite(seed: int = 0, count: int = 1000, rs: RewriteSystem | None = None) -> SuiteResult:
    """static_equiv against the brute-force oracle (depth 3) on random frame pairs."""
    rs = rs or dec_enc()
    res = SuiteResult("oracle", seed)
    rng = random.Random(f"oracle:{seed}")
    gen = Gen(rng)
    t0 = time.perf_counter()
    agree_equiv = 0
    while res.instances < count:
        phi = gen.frame()
        psi = gen.mutate_frame(phi) if rng.random() < 0.6 else gen.frame(dom=len(phi.domain))
        fast = static_equiv(phi, psi, rs)
        slow = static_equiv_oracle(phi, psi, rs, 3, witness=False)
        res.instances += 1
        if fast.equivalent != slow.equivalent:
            res.fail({"phi": str(phi), "psi": str(psi), "fast": fast.equivalent, "oracle": slow.equivalent})
        elif fast.equivalent:
            agree_equiv += 1
    res.seconds = time.perf_counter() - t0
    res.examples.insert(0, {"equivalent_pairs": agree_equiv})
    return res


# ---------------------------------------------------------------------------
# Process pairs


def equivalent_variant(gen: Gen, p: Process) -> tuple[Process, Process]:
    """A pair around p that is trace equivalent by one of a few sound rewrites."""
    rng = gen.rng
    move = rng.randrange(6)
    c = Name(rng.choice(PUBLIC))
    if move == 0:
        return p, Choice(p, p)
    if move == 1:
        return p, New(gen.fresh("u"), p)
    if move == 2:
        a = Name(rng.choice(PUBLIC))
        return p, If(a, a, p, gen.plain(3))
    if move == 3:
        q = gen.plain(3)
        return Choice(p, q), Choice(q, p)
    if move == 4:
        k = gen.fresh("k")
        m1, m2 = rng.sample(PUBLIC, 2)
        return (
            New(k, Out(c, App("enc", (Name(m1), Name(k))), p)),
            New(k, Out(c, App("enc", (Name(m2), Name(k))), p)),
        )
    m = gen.term(PUBLIC)
    q = gen.plain(3)
    return Out(c, m, Choice(p, q)), Choice(Out(c, m, p), Out(c, m, q))


def sample_pair(gen: Gen, equivalent: bool, budget: int = 5) -> tuple[Process, Process]:
    """A replication-free closed pair; ``equivalent`` selects the sound-rewrite generator."""
    rng = gen.rng
    p = gen.plain(budget)
    if equivalent:
        return equivalent_variant(gen, p)
    move = rng.randrange(3)
    c = Name(rng.choice(PUBLIC))
    if move == 0:
        return p, gen.plain(budget)
    if move == 1:
        return Out(c, Name("a"), p), Out(c, Name("b"), p)
    return Out(c, Name("a"), p), Choice(Out(c, Name("a"), p), Out(c, Name("a"), NIL))


PAIR_CFG = JobConfig(max_trace_len=3, recipe_depth=0, fresh_pool_size=1)


# ---------------------------------------------------------------------------
# Correspondence: bounded trace equivalence against logical equivalence


def _atoms(names, aliases) -> list[Formula]:
    terms = [Var(x) for x in aliases] + [Name(n) for n in names]
    out: list[Formula] = [Top()]
    out += [InDom(Var(x)) for x in aliases]
    for i, m in enumerate(terms):
        for n in terms[i + 1 :]:
            out.append(Eq(m, n))
    return out


def random_formula(rng: random.Random, atoms: list[Formula], actions: list, depth: int = 3, knows: bool = True) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        return rng.choice(atoms)
    ops = ["not", "or", "F", "prev"] + (["K"] if knows else [])
    op = rng.choice(ops)
    if op == "not":
        return Not(random_formula(rng, atoms, actions, depth - 1, knows))
    if op == "or":
        return Or(random_formula(rng, atoms, actions, depth - 1, knows), random_formula(rng, atoms, actions, depth - 1, knows))
    if op == "F":
        return Future(random_formula(rng, atoms, actions, depth - 1, knows))
    if op == "K":
        return Knows(random_formula(rng, atoms, actions, depth - 1, knows))
    if not actions:
        return Future(random_formula(rng, atoms, actions, depth - 1, knows))
    return Prev(rng.choice(actions), random_formula(rng, atoms, actions, depth - 1, knows))


def _literal(test, holds_left: bool) -> Formula:
    m, n = test
    return Eq(m, n) if holds_left else Not(Eq(m, n))


def distinguishing_formula(witness: Trace, other: Process, cfg: JobConfig, rs: RewriteSystem) -> Formula:
    """F (d_n and <mu_n>-(d_{n-1} and ... <mu_1>- (d_0 and start))) true on the witness, false on other.

    The d_i collect, for every trace of ``other`` carrying the witness labels,
    a test separating its i-th frame from the witness's; ``start`` pins the
    innermost position to 0 by excluding every label ``other`` can perform.
    """
    eng = Engine(rs, cfg)
    literals: dict[int, list[Formula]] = {}
    k = len(witness)

    def add(i: int, f: Formula) -> None:
        if f not in literals.setdefault(i, []):
            literals[i].append(f)

    def separate(i: int, st: State) -> bool:
        w = witness.state(i)
        if w.domain != st.domain:
            x = sorted(w.domain ^ st.domain)[0]
            add(i, InDom(Var(x)) if x in w.domain else Not(InDom(Var(x))))
            return True
        v = static_equiv(w.frame_obj(), st.frame_obj(), rs)
        if v.equivalent:
            return False
        add(i, _literal(v.witness, v.holds_left))
        return True

    unmatched = []

    def dfs(i: int, st: State) -> None:
        if separate(i, st):
            return
        if i == k:
            unmatched.append(st)
            return
        for nxt in eng.steps_labelled(st, witness.actions[i]):
            dfs(i + 1, nxt)

    dfs(0, eng.initial(other))
    if unmatched:
        raise ValueError("the other process matches the witness trace")
    def layer(i: int, pin: Formula) -> Formula:
        body: Formula = Top()
        for f in literals.get(i, []):
            body = f if isinstance(body, Top) else conj(body, f)
        if i == 0:
            return pin if isinstance(body, Top) else conj(body, pin)
        return conj(body, Prev(witness.actions[i - 1], layer(i - 1, pin)))

    # the pin is true exactly at position 0: no label other can perform
    # (under the evaluator's attacker names) precedes it
    ev = Evaluator(other, rs, cfg, layer(k, Top()))
    pin: Formula = Top()
    for act in sorted({a for tr in ev.traces({}) for a in tr.actions}, key=str):
        lit = Not(Prev(act, Top()))
        pin = lit if isinstance(pin, Top) else conj(pin, lit)
    return Future(layer(k, pin))


def _pointwise_mismatch(a: Process, b: Process, phi: Formula, cfg: JobConfig, rs: RewriteSystem, limit: int = 8):
    """Each trace of a has a partner in b agreeing on phi at every position (first failure or None)."""
    ea, eb = Evaluator(a, rs, cfg, phi), Evaluator(b, rs, cfg, phi)
    start = eb.instance({})
    for n, tr in enumerate(ea.traces({})):
        if n >= limit:
            break
        partner = next(matching_traces(eb.engine, start, tr), None)
        if partner is None:
            return {"unmatched": tr.describe()}
        for i in range(len(tr) + 1):
            if ea.holds(phi, {}, tr, i) != eb.holds(phi, {}, partner, i):
                return {"trace": tr.describe(), "partner": partner.describe(), "index": i}
    return None


def correspondence_suite(seed: int = 0, count: int = 50, rs: RewriteSystem | None = None, formulas: int = 10) -> SuiteResult:
    rs = rs or dec_enc()
    cfg = PAIR_CFG
    res = SuiteResult("correspondence", seed)
    rng = random.Random(f"correspondence:{seed}")
    gen = Gen(rng)
    t0 = time.perf_counter()
    stats = {"equivalent": 0, "inequivalent": 0}
    while res.instances < count:
        a, b = sample_pair(gen, rng.random() < 0.5, 6)
        v = trace_equiv(a, b, cfg, rs)
        if v.result not in (EQUIVALENT, BOUNDED_EQUIVALENT, INEQUIVALENT):
            res.skipped += 1
            continue
        res.instances += 1
        if v.equivalent:
            stats["equivalent"] += 1
            eng = Engine(rs, cfg)
            actions = sorted({act for tr in eng.traces(a) for act in tr.actions}, key=str)[:6]
            atoms = _atoms(sorted(_names(a) | _names(b))[:3], ["#x1", "#x2"])
            for _ in range(formulas):
                phi = random_formula(rng, atoms, actions, 3)
                ra = satisfies(a, phi, cfg, rs).holds
                rb = satisfies(b, phi, cfg, rs).holds
                if ra != rb:
                    res.fail({"A": str(a), "B": str(b), "formula": str(phi), "A_holds": ra, "B_holds": rb})
                    break
                bad = _pointwise_mismatch(a, b, phi, cfg, rs) or _pointwise_mismatch(b, a, phi, cfg, rs)
                if bad:
                    res.fail({"A": str(a), "B": str(b), "formula": str(phi), **bad})
                    break
        else:
            stats["inequivalent"] += 1
            left, right = (a, b) if v.direction == "left-in-right" else (b, a)
            try:
                psi = distinguishing_formula(v.witness, right, cfg, rs)
            except ValueError as e:
                res.fail({"A": str(a), "B": str(b), "error": str(e)})
                continue
            neg = Not(psi)
            on_left = satisfies(left, neg, cfg, rs).holds
            on_right = satisfies(right, neg, cfg, rs).holds
            if on_left or not on_right:
                res.fail({"A": str(left), "B": str(right), "formula": str(psi), "left": on_left, "right": on_right})
    res.seconds = time.perf_counter() - t0
    res.examples.insert(0, stats)
    return res


def _names(p: Process) -> set[str]:
    from .process import free_names

    return set(free_names(p))


# ---------------------------------------------------------------------------
# Congruence spot-check


CONTEXTS = (
    Out(Name("c"), Name("a")),
    In(Name("c"), "u1", Out(Name("b"), Var("u1"))),
    New("e", Out(Name("a"), Name("e"))),
    In(Name("a"), "u2", If(Var("u2"), Name("b"), Out(Name("c"), Name("a")))),
    Choice(Out(Name("b"), Name("c")), In(Name("b"), "u3")),
)


def congruence_suite(seed: int = 0, count: int = 20, rs: RewriteSystem | None = None) -> SuiteResult:
    """Pairs found bounded-equivalent stay so in parallel with each small context."""
    rs = rs or dec_enc()
    cfg = PAIR_CFG
    res = SuiteResult("congruence", seed)
    rng = random.Random(f"congruence:{seed}")
    gen = Gen(rng)
    t0 = time.perf_counter()
    pairs = 0
    attempts = 0
    while pairs < count and attempts < count * 20:
        attempts += 1
        a, b = sample_pair(gen, True, 4)
        if not trace_equiv(a, b, cfg, rs).equivalent:
            res.skipped += 1
            continue
        pairs += 1
        for ctx in CONTEXTS:
            res.instances += 1
            v = trace_equiv(Par(a, ctx), Par(b, ctx), cfg, rs)
            if not v.equivalent:
                res.fail({"A": str(a), "B": str(b), "context": str(ctx), "verdict": v.to_dict()})
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# Total secrecy under evaluation contexts


SECRECY_CONTEXTS: tuple[Callable[[Process], Process], ...] = (
    lambda p: Par(p, Out(Name("c"), Name("a"))),
    lambda p: New("e", Par(p, In(Name("c"), "u1", Out(Name("d"), Var("u1"))))),
    lambda p: Par(p, In(Name("c"), "u2", If(Var("u2"), Name("a"), Out(Name("d"), Name("b"))))),
    lambda p: Par(p, Out(Name("d"), App("enc", (Name("a"), Name("b"))))),
    lambda p: New("e", Par(p, Out(Name("d"), Name("e")))),
)

SECRECY_TARGETS = (
    Out(Name("c"), Name("s")),
    New("k", Out(Name("c"), App("enc", (Var("x"), Name("k"))))),
)


def secrecy_context_suite(seed: int = 0, count: int = 3, rs: RewriteSystem | None = None) -> SuiteResult:
    """Total secrecy of x in A implies total secrecy of x in E[A] for sampled contexts E."""
    rs = rs or dec_enc()
    cfg = JobConfig(max_trace_len=3, recipe_depth=1, fresh_pool_size=1)
    res = SuiteResult("secrecy-contexts", seed)
    rng = random.Random(f"secrecy:{seed}")
    t0 = time.perf_counter()
    contexts = rng.sample(range(len(SECRECY_CONTEXTS)), min(count, len(SECRECY_CONTEXTS)))
    for target in SECRECY_TARGETS:
        base = total_secrecy(target, "x", (), cfg, rs)
        if base.verdict not in (HOLDS, BOUNDED_HOLDS):
            res.skipped += 1
            continue
        for idx in contexts:
            res.instances += 1
            wrapped = SECRECY_CONTEXTS[idx](target)
            r = total_secrecy(wrapped, "x", (), cfg, rs)
            if r.verdict not in (HOLDS, BOUNDED_HOLDS):
                res.fail({"process": str(wrapped), "verdict": r.verdict, "counterexample": r.counterexample})
    res.seconds = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# Driver


DEFAULT_COUNTS = {
    **{name: 500 for name in LEMMAS},
    "oracle": 1000,
    "correspondence": 50,
    "congruence": 20,
    "secrecy-contexts": 3,
}


def _run_one(args: tuple[str, int, int | None]) -> dict:
    suite, seed, count = args
    n = count or DEFAULT_COUNTS[suite]
    if suite in LEMMAS:
        r = lemma_suite(suite, seed, n)
    elif suite == "oracle":
        r = oracle_suite(seed, n)
    elif suite == "correspondence":
        r = correspondence_suite(seed, n)
    elif suite == "congruence":
        r = congruence_suite(seed, n)
    else:
        r = secrecy_context_suite(seed, n)
    return r.to_dict()


def run_selftest(suite: str = "all", seed: int = 0, count: int | None = None) -> list[dict]:
    """Run one suite, ``lemmas`` (all five) or ``all``; results keep the seed."""
    if suite == "all":
        names = list(DEFAULT_COUNTS)
    elif suite == "lemmas":
        names = list(LEMMAS)
    elif suite in DEFAULT_COUNTS:
        names = [suite]
    else:
        raise ValueError(f"unknown suite {suite!r}; choose from all, lemmas, {', '.join(DEFAULT_COUNTS)}")
    jobs = [(name, seed, count) for name in names]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_run_one, jobs))
    return [_run_one(j) for j in jobs]
