"""Epistemic temporal logic over traces: syntax and a bounded model checker.

Satisfaction is evaluated at a position of a trace of an instance A rho.
The knowledge operator K quantifies over every assignment rho' and every
trace of A rho' whose prefix up to the current position is statically
equivalent to the current one.  Assignments are taken up to renaming of the
names nobody can tell apart: one representative per class, mapping each
variable either to an anchor name (a name of A, of the formula or of the
observed prefix) or to a fresh name, with all partitions of the
fresh-mapped variables.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .config import JobConfig
from .equivalence import frame_cache, matching_traces
from .errors import TracepiError, UnboundVariable
from .frames import test_holds
from .process import Process, accounting, substitute
from .semantics import AliasOut, Engine, Input, Silent, State, Trace
from .terms import FREE_ALGEBRA, Name, RewriteSystem, Term, Var, substitute as subst_term, term_names, term_vars

# ---------------------------------------------------------------------------
# Syntax


class Formula:
    __slots__ = ()

    def __str__(self) -> str:
        from .printer import format_formula

        return format_formula(self)

    @property
    def is_static(self) -> bool:
        return all(c.is_static for c in self.children()) and not isinstance(self, (Prev, Future, Knows))

    def children(self) -> tuple["Formula", ...]:
        return ()


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Eq(Formula):
    left: Term
    right: Term


@dataclass(frozen=True)
class InDom(Formula):
    term: Term


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True)
class Not(Formula):
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Prev(Formula):
    action: object
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Future(Formula):
    body: Formula

    def children(self):
        return (self.body,)


@dataclass(frozen=True)
class Knows(Formula):
    body: Formula

    def children(self):
        return (self.body,)


# sugar, expanded exactly as the parser does
def false() -> Formula:
    return Not(Top())


def neq(m: Term, n: Term) -> Formula:
    return Not(Eq(m, n))


def conj(f: Formula, g: Formula) -> Formula:
    return Not(Or(Not(f), Not(g)))


def implies(f: Formula, g: Formula) -> Formula:
    return Or(Not(f), g)


def always(f: Formula) -> Formula:
    return Not(Future(Not(f)))


def possibly(f: Formula) -> Formula:
    return Not(Knows(Not(f)))


def formula_vars(f: Formula) -> frozenset[str]:
    out: set[str] = set()
    for t in formula_terms(f):
        out |= term_vars(t)
    return frozenset(out)


def formula_names(f: Formula) -> frozenset[str]:
    out: set[str] = set()
    for t in formula_terms(f):
        out |= term_names(t)
    return frozenset(out)


def formula_terms(f: Formula) -> Iterator[Term]:
    if isinstance(f, Eq):
        yield f.left
        yield f.right
    elif isinstance(f, InDom):
        yield f.term
    elif isinstance(f, Prev):
        a = f.action
        if isinstance(a, Input):
            yield a.channel
            yield a.payload
        elif isinstance(a, AliasOut):
            yield a.channel
    for c in f.children():
        yield from formula_terms(c)


def subst_formula(f: Formula, m: dict[str, Term]) -> Formula:
    if not m:
        return f
    if isinstance(f, Top):
        return f
    if isinstance(f, Eq):
        return Eq(subst_term(f.left, m), subst_term(f.right, m))
    if isinstance(f, InDom):
        return InDom(subst_term(f.term, m))
    if isinstance(f, Or):
        return Or(subst_formula(f.left, m), subst_formula(f.right, m))
    if isinstance(f, Not):
        return Not(subst_formula(f.body, m))
    if isinstance(f, Prev):
        a = f.action
        if isinstance(a, Input):
            a = Input(subst_term(a.channel, m), subst_term(a.payload, m))
        elif isinstance(a, AliasOut):
            a = AliasOut(subst_term(a.channel, m), a.alias)
        return Prev(a, subst_formula(f.body, m))
    if isinstance(f, Future):
        return Future(subst_formula(f.body, m))
    if isinstance(f, Knows):
        return Knows(subst_formula(f.body, m))
    raise TypeError(f"not a formula: {f!r}")


def modal_depth(f: Formula) -> int:
    inner = max((modal_depth(c) for c in f.children()), default=0)
    return inner + (1 if isinstance(f, (Prev, Future, Knows)) else 0)


def has_knows(f: Formula) -> bool:
    return isinstance(f, Knows) or any(has_knows(c) for c in f.children())


def looks_ahead(f: Formula) -> bool:
    """Whether the value at i may depend on the trace beyond i (an F not under K)."""
    if isinstance(f, Future):
        return True
    if isinstance(f, Knows):
        return False
    return any(looks_ahead(c) for c in f.children())


# ---------------------------------------------------------------------------
# Assignments


class AssignmentError(TracepiError):
    """An assignment is not admissible where knowledge is evaluated."""


def set_partitions(items: list) -> Iterator[list[list]]:
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def fresh_names(avoid: Iterable[str], count: int, prefix: str = "#v") -> list[str]:
    avoid = set(avoid)
    out, k = [], 1
    while len(out) < count:
        if f"{prefix}{k}" not in avoid:
            out.append(f"{prefix}{k}")
        k += 1
    return out


def assignment_representatives(
    variables: Iterable[str], anchors: Iterable[str], pool: Iterable[str] | None = None
) -> list[dict[str, Term]]:
    """One assignment per class of assignments equal up to a permutation fixing ``anchors``.

    Fresh names are taken from ``pool`` minus the anchors (default ``#v1``, ``#v2``, ...).
    """
    variables = sorted(variables)
    anchors = sorted(set(anchors))
    if pool is None:
        fresh = fresh_names(anchors, len(variables))
    else:
        fresh = sorted(set(pool) - set(anchors))
        if len(fresh) < len(variables):
            raise ValueError("the pool needs at least one fresh name per variable")
    out: list[dict[str, Term]] = []
    for mask in itertools.product([True, False], repeat=len(variables)):
        anchored = [v for v, a in zip(variables, mask) if a]
        free = [v for v, a in zip(variables, mask) if not a]
        for values in itertools.product(anchors, repeat=len(anchored)):
            base = {v: Name(n) for v, n in zip(anchored, values)}
            parts = sorted((sorted(b) for b in set_partitions(free)), key=lambda p: (len(p), p))
            for part in parts:
                rho = dict(base)
                for block, name in zip(sorted(part), fresh):
                    for v in block:
                        rho[v] = Name(name)
                out.append(dict(sorted(rho.items())))
    out.sort(key=lambda r: [(k, v.key()) for k, v in r.items()])
    return out


# ---------------------------------------------------------------------------
# Evaluation


@dataclass
class EvalStats:
    bounded: bool = False
    k_calls: int = 0


class Evaluator:
    """Model checker for one process; instances A rho share one engine."""

    def __init__(self, a: Process, rs: RewriteSystem = FREE_ALGEBRA, cfg: JobConfig | None = None, formula=None):
        self.a = a
        self.rs = rs
        rep = accounting(a)
        self.xvars = sorted(rep.fv - rep.dom)
        self.process_domain = rep.dom
        self.base_anchors = set(rep.fn)
        if formula is not None:
            self.base_anchors |= formula_names(formula)
        cfg = cfg or JobConfig()
        self.base_anchors |= set(cfg.attacker_names)
        extra = fresh_names(self.base_anchors, len(self.xvars))
        self.cfg = cfg.with_(attacker_names=tuple(sorted(self.base_anchors | set(extra))))
        self.engine = Engine(rs, self.cfg)
        self.frames = frame_cache(rs)
        self.stats = EvalStats()
        self._instances: dict = {}
        self._memo: dict = {}

    # -- instances --------------------------------------------------------
    def instance(self, rho: dict[str, Term]) -> State:
        key = tuple(sorted(rho.items()))
        hit = self._instances.get(key)
        if hit is None:
            missing = set(self.xvars) - rho.keys()
            if missing:
                raise UnboundVariable(f"assignment does not cover {sorted(missing)}")
            proc = substitute(self.a, {k: v for k, v in rho.items() if k in self.xvars})
            hit = self._instances[key] = self.engine.initial(proc)
        return hit

    def traces(self, rho: dict[str, Term]) -> Iterator[Trace]:
        max_len = self.cfg.max_trace_len
        for tr in self.engine.traces(self.instance(rho), max_len):
            if len(tr) == max_len and self.engine.steps(tr.last):
                self.stats.bounded = True
            yield tr
        if self.engine.bang_budget_hit:
            self.stats.bounded = True

    def extensions(self, tr: Trace) -> Iterator[Trace]:
        """tr and all its extensions up to the length bound."""
        level = [tr]
        while level:
            yield from level
            if len(level[0]) >= self.cfg.max_trace_len:
                if any(self.engine.steps(t.last) for t in level):
                    self.stats.bounded = True
                break
            level = [t.extend(a, s) for t in level for a, s in self.engine.steps(t.last)]

    # -- static part --------------------------------------------------------
    def _known_alias(self, v: str, tr: Trace) -> bool:
        if v.startswith("#x") or v in self.process_domain:
            return True
        return any(v in s.domain for s in tr.states)

    def _check_vars(self, terms: Iterable[Term], rho, tr: Trace, i: int) -> None:
        dom = tr.state(i).domain
        for t in terms:
            for v in term_vars(t):
                if v in rho or v in dom or self._known_alias(v, tr):
                    continue
                raise UnboundVariable(f"variable {v} is neither assigned nor in the domain")

    def static(self, f: Formula, rho: dict[str, Term], tr: Trace, i: int) -> bool:
        if isinstance(f, Top):
            return True
        if isinstance(f, Eq):
            self._check_vars((f.left, f.right), rho, tr, i)
            m, n = subst_term(f.left, rho), subst_term(f.right, rho)
            return test_holds(m, n, tr.state(i).frame_obj(), self.rs)
        if isinstance(f, InDom):
            return isinstance(f.term, Var) and f.term.id in tr.state(i).domain
        if isinstance(f, Or):
            return self.static(f.left, rho, tr, i) or self.static(f.right, rho, tr, i)
        if isinstance(f, Not):
            return not self.static(f.body, rho, tr, i)
        raise TypeError(f"not a static formula: {f}")

    # -- modal part -----------------------------------------------------------
    def holds(self, f: Formula, rho: dict[str, Term], tr: Trace, i: int) -> bool:
        if not 0 <= i <= len(tr):
            raise IndexError(f"position {i} outside trace of length {len(tr)}")
        if isinstance(f, (Top, Eq, InDom)):
            return self.static(f, rho, tr, i)
        if isinstance(f, Or):
            return self.holds(f.left, rho, tr, i) or self.holds(f.right, rho, tr, i)
        if isinstance(f, Not):
            return not self.holds(f.body, rho, tr, i)
        if isinstance(f, Prev):
            return i > 0 and self._label_is(f.action, rho, tr, i) and self.holds(f.body, rho, tr, i - 1)
        if isinstance(f, Future):
            return any(self.holds(f.body, rho, tr, j) for j in range(i, len(tr) + 1))
        if isinstance(f, Knows):
            return self.knows(f.body, rho, tr, i)
        raise TypeError(f"not a formula: {f!r}")

    def _label_is(self, mu, rho, tr: Trace, i: int) -> bool:
        """tr[i-1] ==mu==> tr[i]; aliases are positional so only channels and payloads are compared."""
        actual, _ = tr.steps[i - 1]
        if isinstance(mu, Silent) or isinstance(actual, Silent):
            return isinstance(mu, Silent) and isinstance(actual, Silent)
        if type(mu) is not type(actual):
            return False
        before = tr.state(i - 1)
        terms = [(mu.channel, actual.channel)]
        if isinstance(mu, Input):
            terms.append((mu.payload, actual.payload))
        for m, n in terms:
            m = subst_term(m, rho)
            if not term_vars(m) <= before.domain:
                return False
            if self.engine.evaluate(before, m) != self.engine.evaluate(before, n):
                return False
        return True

    def anchors_for(self, rho: dict[str, Term], tr: Trace, i: int, body: Formula) -> set[str]:
        out = set(self.base_anchors) | formula_names(body)
        for v in rho.values():
            out |= term_names(v)
        for s in tr.states[: i + 1]:
            out |= s.free_names()
        for a in tr.actions[:i]:
            if isinstance(a, Input):
                out |= term_names(a.channel) | term_names(a.payload)
            elif isinstance(a, AliasOut):
                out |= term_names(a.channel)
        return out

    def knows(self, body: Formula, rho: dict[str, Term], tr: Trace, i: int) -> bool:
        self.stats.k_calls += 1
        for v in rho.values():
            if not isinstance(v, Name):
                raise AssignmentError(f"knowledge is only evaluated under assignments to names, got {v}")
        prefix = tr.prefix(i)
        key = (body, prefix.steps, prefix.origin)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        result = True
        ahead = looks_ahead(body)
        for rho2 in assignment_representatives(self.xvars, self.anchors_for(rho, tr, i, body)):
            for match in matching_traces(self.engine, self.instance(rho2), prefix):
                candidates = self.extensions(match) if ahead else (match,)
                if not all(self.holds(body, rho2, t, i) for t in candidates):
                    result = False
                    break
            if not result:
                break
        self._memo[key] = result
        return result


def _tested_vars(f: Formula) -> set[str]:
    """Variables under equality tests; x in dom is meaningful for any x."""
    if isinstance(f, Eq):
        return set(term_vars(f.left) | term_vars(f.right))
    out: set[str] = set()
    for c in f.children():
        out |= _tested_vars(c)
    return out


def eval_static(
    delta: Formula, a: Process, rho: dict[str, Term], tr: Trace, i: int, rs: RewriteSystem = FREE_ALGEBRA
) -> bool:
    if not delta.is_static:
        from .errors import StaticContextViolation

        raise StaticContextViolation(f"{delta} is not a static formula")
    ev = Evaluator(a, rs, JobConfig())
    dom = tr.state(i).domain
    for v in _tested_vars(delta):
        if v not in rho and v not in dom:
            raise UnboundVariable(f"variable {v} is neither assigned nor in dom(tr[{i}])")
    return ev.static(delta, rho, tr, i)


def eval_modal(
    phi: Formula,
    a: Process,
    rho: dict[str, Term],
    tr: Trace,
    i: int,
    cfg: JobConfig | None = None,
    rs: RewriteSystem = FREE_ALGEBRA,
    evaluator: Evaluator | None = None,
) -> bool:
    ev = evaluator or Evaluator(a, rs, cfg, phi)
    return ev.holds(phi, rho, tr, i)


@dataclass
class SatVerdict:
    holds: bool
    bounded: bool
    assignment: dict[str, Term] | None = None
    trace: Trace | None = None
    extra: dict[str, Term] = field(default_factory=dict)

    @property
    def result(self) -> str:
        if not self.holds:
            return "fails"
        return "bounded-holds" if self.bounded else "holds"

    def to_dict(self) -> dict:
        d = {"result": self.result}
        if self.assignment is not None:
            d["assignment"] = {k: str(v) for k, v in self.assignment.items()}
        if self.trace is not None:
            d["trace"] = self.trace.describe()
            d["final"] = str(self.trace.last)
        if self.extra:
            d["universal"] = {k: str(v) for k, v in self.extra.items()}
        return d


def _extra_vars(ev: Evaluator, phi: Formula) -> list[str]:
    return sorted(v for v in formula_vars(phi) if v not in ev.xvars and not v.startswith("#x") and v not in ev.process_domain)


def satisfies(
    a: Process,
    phi: Formula,
    cfg: JobConfig | None = None,
    rs: RewriteSystem = FREE_ALGEBRA,
    at_end: bool = False,
    maximal_only: bool = False,
    evaluator: Evaluator | None = None,
) -> SatVerdict:
    """A |= phi over representative assignments and bounded traces.

    ``maximal_only`` restricts to maximal traces and ``at_end`` evaluates at
    the last position instead of 0 (both used by openness).  Variables of
    phi that are neither assigned nor aliases are read universally over the
    public names.
    """
    ev = evaluator or Evaluator(a, rs, cfg, phi)
    extra = _extra_vars(ev, phi)
    bounded = bool(extra)
    reps = assignment_representatives(ev.xvars, ev.base_anchors)
    extra_pool = [Name(n) for n in sorted(ev.base_anchors)] + [Name(f"#a{k}") for k in range(ev.cfg.fresh_pool_size)]
    for rho in reps:
        for tr in ev.traces(rho):
            if maximal_only and not ev.engine.is_maximal(tr.last):
                continue
            pos = len(tr) if at_end else 0
            for values in itertools.product(extra_pool, repeat=len(extra)):
                ext = dict(zip(extra, values))
                f = subst_formula(phi, ext)
                if not ev.holds(f, rho, tr, pos):
                    return SatVerdict(False, ev.stats.bounded or bounded, rho, tr, ext)
    if maximal_only and ev.stats.bounded:
        bounded = True
    return SatVerdict(True, ev.stats.bounded or bounded)


__all__ = [
    "Formula",
    "Top",
    "Eq",
    "InDom",
    "Or",
    "Not",
    "Prev",
    "Future",
    "Knows",
    "false",
    "neq",
    "conj",
    "implies",
    "always",
    "possibly",
    "assignment_representatives",
    "set_partitions",
    "Evaluator",
    "eval_static",
    "eval_modal",
    "satisfies",
    "SatVerdict",
    "AssignmentError",
    "formula_vars",
    "formula_names",
    "subst_formula",
    "modal_depth",
]
