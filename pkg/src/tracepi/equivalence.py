"""Trace-level static equivalence, trace matching, inclusion and equivalence.

Inclusion is decided by a subset construction: every trace of A is explored
breadth first together with the set of B-states reachable by a trace with
the same labels whose frames are statically equivalent index by index.  An
empty set is a witness.  Open processes are closed by every assignment of
their free variables to the free names of both sides plus two fresh names.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator

from .config import JobConfig
from .frames import static_equiv
from .process import Process, accounting, substitute
from .semantics import AliasOut, Engine, Input, State, Trace, action_to_json
from .terms import FREE_ALGEBRA, Name, RewriteSystem, Term, Var, substitute as subst_term

EQUIVALENT = "equivalent"
INEQUIVALENT = "inequivalent"
BOUNDED_EQUIVALENT = "bounded-equivalent"
INCONCLUSIVE = "inconclusive"

ASSIGNMENT_FRESH = ("#v1", "#v2")


class FrameCache:
    """Memoized static equivalence of state frames."""

    def __init__(self, rs: RewriteSystem):
        self.rs = rs
        self._memo: dict = {}

    def verdict(self, s1: State, s2: State):
        key = (s1.frame, s1.names, s2.frame, s2.names)
        hit = self._memo.get(key)
        if hit is None:
            hit = self._memo[key] = static_equiv(s1.frame_obj(), s2.frame_obj(), self.rs)
        return hit

    def equivalent(self, s1: State, s2: State) -> bool:
        if s1.frame == s2.frame and s1.names == s2.names:
            return True
        return self.verdict(s1, s2).equivalent


_CACHES: dict[int, FrameCache] = {}


def frame_cache(rs: RewriteSystem) -> FrameCache:
    cache = _CACHES.get(id(rs))
    if cache is None or cache.rs is not rs:
        cache = _CACHES[id(rs)] = FrameCache(rs)
    return cache


def canonical_actions(actions) -> tuple:
    """Rename output aliases positionally (#x1, #x2, ...) throughout a label sequence."""
    mapping: dict[str, Term] = {}
    out = []
    for a in actions:
        if isinstance(a, AliasOut):
            new = f"#x{len(mapping) + 1}"
            out.append(AliasOut(subst_term(a.channel, mapping), new))
            mapping[a.alias] = Var(new)
        elif isinstance(a, Input):
            out.append(Input(subst_term(a.channel, mapping), subst_term(a.payload, mapping)))
        else:
            out.append(a)
    return tuple(out)


@dataclass(frozen=True)
class StaticMismatch:
    index: int
    reason: str
    test: tuple[Term, Term] | None = None

    def to_dict(self) -> dict:
        d = {"index": self.index, "reason": self.reason}
        if self.test is not None:
            d["test"] = [str(self.test[0]), str(self.test[1])]
        return d


def trace_static_mismatch(t1: Trace, t2: Trace, rs: RewriteSystem = FREE_ALGEBRA) -> StaticMismatch | None:
    """First index where two traces differ in label or frame, or None when t1 ~t t2."""
    if len(t1) != len(t2):
        return StaticMismatch(min(len(t1), len(t2)), "length")
    a1, a2 = canonical_actions(t1.actions), canonical_actions(t2.actions)
    cache = frame_cache(rs)
    for i in range(len(t1) + 1):
        if i and a1[i - 1] != a2[i - 1]:
            return StaticMismatch(i, "label")
        v = cache.verdict(t1.state(i), t2.state(i))
        if not v.equivalent:
            return StaticMismatch(i, v.reason, v.witness)
    return None


def trace_static_equiv(t1: Trace, t2: Trace, rs: RewriteSystem = FREE_ALGEBRA) -> bool:
    return trace_static_mismatch(t1, t2, rs) is None


def matching_traces(engine: Engine, start: State, ref: Trace, upto: int | None = None) -> Iterator[Trace]:
    """Traces of ``start`` with the labels of ``ref[0, upto]`` and equivalent frames, least first."""
    upto = len(ref) if upto is None else upto
    cache = frame_cache(engine.rs)
    if not cache.equivalent(ref.origin, start):
        return

    def dfs(tr: Trace) -> Iterator[Trace]:
        i = len(tr)
        if i == upto:
            yield tr
            return
        action, target = ref.steps[i]
        for nxt in engine.steps_labelled(tr.last, action):
            if cache.equivalent(target, nxt):
                yield from dfs(tr.extend(action, nxt))

    yield from dfs(Trace(start))


def _engine_for(rs: RewriteSystem, cfg: JobConfig, *procs: Process) -> Engine:
    names = set(cfg.attacker_names)
    for p in procs:
        names |= accounting(p).fn
    return Engine(rs, cfg.with_(attacker_names=tuple(sorted(names))))


def trace_match(
    a: Process | State, ref: Trace, cfg: JobConfig | None = None, rs: RewriteSystem = FREE_ALGEBRA, engine=None
) -> Trace | None:
    """The least trace of ``a`` statically equivalent to ``ref``, or None."""
    cfg = cfg or JobConfig()
    engine = engine or Engine(rs, cfg)
    return next(matching_traces(engine, engine.initial(a), ref), None)


@dataclass
class EquivVerdict:
    result: str
    witness: Trace | None = None
    reason: StaticMismatch | str | None = None
    bounds: dict = field(default_factory=dict)
    assignment: dict[str, Term] | None = None
    direction: str | None = None

    @property
    def equivalent(self) -> bool:
        return self.result in (EQUIVALENT, BOUNDED_EQUIVALENT)

    def to_dict(self) -> dict:
        d = {"result": self.result, "bounds": self.bounds}
        if self.witness is not None:
            d["witness"] = {
                "actions": [action_to_json(x) for x in self.witness.actions],
                "trace": self.witness.describe(),
                "final": str(self.witness.last),
            }
        if isinstance(self.reason, StaticMismatch):
            d["reason"] = self.reason.to_dict()
        elif self.reason:
            d["reason"] = self.reason
        if self.assignment is not None:
            d["assignment"] = {k: str(v) for k, v in self.assignment.items()}
        if self.direction:
            d["direction"] = self.direction
        return d


def _bounds(cfg: JobConfig) -> dict:
    return {
        "max_trace_len": cfg.max_trace_len,
        "repl_bound": cfg.repl_bound,
        "recipe_depth": cfg.recipe_depth,
        "fresh_pool_size": cfg.fresh_pool_size,
        "comparison_mode": cfg.comparison_mode,
    }


def _explain(eng_b: Engine, tr: Trace, bset) -> StaticMismatch:
    """Why the last step of an unmatched trace has no partner."""
    action, target = tr.steps[-1]
    candidates = [s for b in bset for s in eng_b.steps_labelled(b, action)]
    if not candidates:
        return StaticMismatch(len(tr), "no-transition")
    best = min(candidates, key=State.key)
    v = frame_cache(eng_b.rs).verdict(target, best)
    return StaticMismatch(len(tr), v.reason or "frame", v.witness)


def _closed_inclusion(a: Process, b: Process, cfg: JobConfig, rs: RewriteSystem) -> EquivVerdict:
    eng_a = _engine_for(rs, cfg, a, b)
    eng_b = _engine_for(rs, cfg, a, b)
    cache = frame_cache(rs)
    a0, b0 = eng_a.initial(a), eng_b.initial(b)
    bounds = _bounds(cfg)
    if not cache.equivalent(a0, b0):
        v = cache.verdict(a0, b0)
        return EquivVerdict(INEQUIVALENT, Trace(a0), StaticMismatch(0, v.reason, v.witness), bounds)
    level = [(Trace(a0), frozenset([b0]))]
    seen = {(a0, frozenset([b0]))}
    for _ in range(cfg.max_trace_len):
        nxt = []
        for tr, bset in level:
            for action, a2 in eng_a.steps(tr.last):
                b2 = set()
                for b_state in bset:
                    for cand in eng_b.steps_labelled(b_state, action):
                        if cache.equivalent(a2, cand):
                            b2.add(cand)
                if not b2:
                    wit = tr.extend(action, a2)
                    result = INCONCLUSIVE if eng_b.bang_budget_hit else INEQUIVALENT
                    return EquivVerdict(result, wit, _explain(eng_b, wit, bset), bounds)
                key = (a2, frozenset(b2))
                if key not in seen:
                    seen.add(key)
                    nxt.append((tr.extend(action, a2), key[1]))
        level = nxt
        if not level:
            break
    truncated = any(eng_a.steps(tr.last) for tr, _ in level) if cfg.max_trace_len else bool(eng_a.steps(a0))
    bounded = truncated or eng_a.bang_budget_hit or eng_b.bang_budget_hit
    return EquivVerdict(BOUNDED_EQUIVALENT if bounded else EQUIVALENT, None, None, bounds)


def open_variables(*procs: Process) -> list[str]:
    out: set[str] = set()
    for p in procs:
        rep = accounting(p)
        out |= rep.fv - rep.dom
    return sorted(out)


def assignment_pool(*procs: Process, extra: int = 2) -> list[Term]:
    names: set[str] = set()
    for p in procs:
        names |= accounting(p).fn
    return [Name(n) for n in sorted(names)] + [Name(n) for n in ASSIGNMENT_FRESH[:extra]]


def assignments(variables: list[str], pool: list[Term]) -> Iterator[dict[str, Term]]:
    for combo in itertools.product(pool, repeat=len(variables)):
        yield dict(zip(variables, combo))


def trace_inclusion(
    a: Process, b: Process, cfg: JobConfig | None = None, rs: RewriteSystem = FREE_ALGEBRA
) -> EquivVerdict:
    """A included in B (bounded); open processes are closed by every pool assignment."""
    return _over_assignments(a, b, cfg or JobConfig(), rs, both=False)


def trace_equiv(a: Process, b: Process, cfg: JobConfig | None = None, rs: RewriteSystem = FREE_ALGEBRA) -> EquivVerdict:
    """Both inclusions, for every assignment of the open variables."""
    return _over_assignments(a, b, cfg or JobConfig(), rs, both=True)


def _over_assignments(a: Process, b: Process, cfg: JobConfig, rs: RewriteSystem, both: bool) -> EquivVerdict:
    variables = open_variables(a, b)
    pool = assignment_pool(a, b)
    bounded = bool(variables)
    inconclusive = None
    for rho in assignments(variables, pool):
        ai, bi = (substitute(a, rho), substitute(b, rho)) if rho else (a, b)
        checks = [("left-in-right", ai, bi)]
        if both:
            checks.append(("right-in-left", bi, ai))
        for direction, x, y in checks:
            v = _closed_inclusion(x, y, cfg, rs)
            if v.result == INEQUIVALENT:
                v.assignment = rho if variables else None
                v.direction = direction
                return v
            if v.result == INCONCLUSIVE and inconclusive is None:
                v.assignment = rho if variables else None
                v.direction = direction
                inconclusive = v
            bounded = bounded or v.result == BOUNDED_EQUIVALENT
    if inconclusive is not None:
        return inconclusive
    bounds = _bounds(cfg)
    if variables:
        bounds["assignment_pool"] = [str(t) for t in pool]
    return EquivVerdict(BOUNDED_EQUIVALENT if bounded else EQUIVALENT, None, None, bounds)
