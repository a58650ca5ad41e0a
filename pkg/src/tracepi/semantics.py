"""Operational semantics: canonical states, reductions, labelled steps, traces.

A closed extended process is kept in a canonical structural form
(:class:`State`): restricted names hoisted to the top and renamed by first
occurrence, the active substitutions merged into one fully applied frame,
and the plain components sorted.  Two processes with equal states are
structurally equivalent; the converse holds for everything the engine
produces itself except for replication unfolding, which is never done by
the canonicalizer.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .config import LABELLED_ONLY, JobConfig
from .errors import DomainClash, NonGroundGuard, RestrictNonDomainVar
from .frames import Frame, saturate
from .process import (
    NIL,
    Bang,
    Choice,
    If,
    In,
    New,
    NewVar,
    Nil,
    Out,
    Par,
    Process,
    Sub,
    news,
    par,
    rename_name,
    rename_var,
    substitute,
    uplus,
)
from .terms import App, Name, RewriteSystem, Term, Var, rename_names, substitute as subst_term, term_names, term_vars

# ---------------------------------------------------------------------------
# Actions


@dataclass(frozen=True)
class Silent:
    kind = "tau"

    def __str__(self) -> str:
        return "tau"


@dataclass(frozen=True)
class Input:
    channel: Term
    payload: Term
    kind = "in"

    def __str__(self) -> str:
        return f"in({self.channel}, {self.payload})"


@dataclass(frozen=True)
class AliasOut:
    channel: Term
    alias: str
    kind = "out"

    def __str__(self) -> str:
        return f"out({self.channel}, {self.alias})"


Action = Silent | Input | AliasOut
TAU = Silent()


def action_key(a: Action) -> tuple:
    if isinstance(a, Silent):
        return (0,)
    if isinstance(a, AliasOut):
        return (1, a.channel.key(), a.alias)
    return (2, a.channel.key(), a.payload.key())


def same_label(a: Action, b: Action) -> bool:
    """Label equality; output aliases are compared positionally, i.e. ignored here."""
    if isinstance(a, AliasOut) and isinstance(b, AliasOut):
        return a.channel == b.channel
    return a == b


def action_vars(a: Action) -> frozenset[str]:
    if isinstance(a, Input):
        return term_vars(a.channel) | term_vars(a.payload)
    if isinstance(a, AliasOut):
        return term_vars(a.channel)
    return frozenset()


def action_to_json(a: Action | None) -> dict | None:
    if a is None:
        return None
    if isinstance(a, Silent):
        return {"kind": "tau"}
    if isinstance(a, Input):
        return {"kind": "in", "channel": str(a.channel), "payload": str(a.payload)}
    return {"kind": "out", "channel": str(a.channel), "alias": a.alias}


# ---------------------------------------------------------------------------
# Structural helpers


def map_terms(p: Process, fn) -> Process:
    """Apply ``fn`` to every term (no binder handling; callers ensure safety)."""
    if isinstance(p, Nil):
        return p
    if isinstance(p, Out):
        return Out(fn(p.channel), fn(p.message), map_terms(p.cont, fn))
    if isinstance(p, In):
        return In(fn(p.channel), p.var, map_terms(p.cont, fn))
    if isinstance(p, New):
        return New(p.name, map_terms(p.body, fn))
    if isinstance(p, NewVar):
        return NewVar(p.var, map_terms(p.body, fn))
    if isinstance(p, If):
        return If(fn(p.left), fn(p.right), map_terms(p.then, fn), map_terms(p.else_, fn))
    if isinstance(p, Choice):
        return Choice(map_terms(p.left, fn), map_terms(p.right, fn))
    if isinstance(p, Par):
        return Par(map_terms(p.left, fn), map_terms(p.right, fn))
    if isinstance(p, Bang):
        return Bang(map_terms(p.body, fn))
    if isinstance(p, Sub):
        return Sub(p.var, fn(p.term))
    raise TypeError(f"not a process: {p!r}")


def _flatten(p: Process, cls) -> list[Process]:
    out, stack = [], [p]
    while stack:
        q = stack.pop()
        if isinstance(q, cls):
            stack.extend((q.right, q.left))
        else:
            out.append(q)
    return out


def _rebuild(items: list[Process], cls) -> Process:
    result = items[-1]
    for q in reversed(items[:-1]):
        result = cls(q, result)
    return result


def canon_plain(p: Process, depth: int = 0) -> Process:
    """Canonical representative of a component: binders renamed by depth, sums and compositions sorted."""
    if isinstance(p, Nil) or isinstance(p, Sub):
        return p
    if isinstance(p, Out):
        return Out(p.channel, p.message, canon_plain(p.cont, depth))
    if isinstance(p, In):
        v = f"#i{depth}"
        cont = p.cont if p.var == v else rename_var(p.cont, p.var, v)
        return In(p.channel, v, canon_plain(cont, depth + 1))
    if isinstance(p, New):
        n = f"#m{depth}"
        body = p.body if p.name == n else rename_name(p.body, p.name, n)
        return New(n, canon_plain(body, depth + 1))
    if isinstance(p, NewVar):
        v = f"#w{depth}"
        body = p.body if p.var == v else rename_var(p.body, p.var, v)
        return NewVar(v, canon_plain(body, depth + 1))
    if isinstance(p, If):
        left, right = (p.left, p.right) if p.left.key() <= p.right.key() else (p.right, p.left)
        return If(left, right, canon_plain(p.then, depth), canon_plain(p.else_, depth))
    if isinstance(p, Choice):
        items = sorted((canon_plain(q, depth) for q in _flatten(p, Choice)), key=str)
        return _rebuild(items, Choice)
    if isinstance(p, Par):
        items = [canon_plain(q, depth) for q in _flatten(p, Par)]
        items = sorted((q for q in items if not isinstance(q, Nil)), key=str)
        return _rebuild(items, Par) if items else NIL
    if isinstance(p, Bang):
        return Bang(canon_plain(p.body, depth))
    raise TypeError(f"not a process: {p!r}")


_BOUND_TOKEN = re.compile(r"#[nt]\d+")
_RVAR_TOKEN = re.compile(r"#[rq]\d+")


# ---------------------------------------------------------------------------
# States


@dataclass(frozen=True)
class State:
    """Canonical nu names.(frame | procs | !bangs)."""

    names: tuple[str, ...]
    frame: tuple[tuple[str, Term], ...]
    procs: tuple[Process, ...]
    bangs: tuple[tuple[Process, int], ...] = ()
    pending: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.names, self.frame, self.procs, self.bangs, self.pending)))
        object.__setattr__(self, "_text", None)

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return self is other or (
            isinstance(other, State)
            and self._hash == other._hash
            and self.frame == other.frame
            and self.procs == other.procs
            and self.names == other.names
            and self.bangs == other.bangs
            and self.pending == other.pending
        )

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(x for x, _ in self.frame)

    @property
    def subst(self) -> dict[str, Term]:
        return dict(self.frame)

    def frame_obj(self) -> Frame:
        used: set[str] = set()
        for _, t in self.frame:
            used |= term_names(t)
        return Frame(frozenset(n for n in self.names if n in used), self.frame)

    def next_alias(self) -> str:
        k = sum(1 for x, _ in self.frame if x.startswith("#x"))
        return f"#x{k + 1}"

    def to_process(self) -> Process:
        parts = [Sub(x, t) for x, t in self.frame]
        parts += list(self.procs)
        parts += [Bang(b) for b, _ in self.bangs]
        return news(self.names, _with_rvars(self.pending, par(*parts)))

    def free_names(self) -> frozenset[str]:
        out: set[str] = set()
        for _, t in self.frame:
            out |= term_names(t)
        for p in self.procs:
            out |= _process_names(p)
        for b, _ in self.bangs:
            out |= _process_names(b)
        return frozenset(out - set(self.names))

    def key(self) -> str:
        return str(self)

    def __str__(self) -> str:
        if self._text is None:
            object.__setattr__(self, "_text", str(self.to_process()))
        return self._text

    def __repr__(self) -> str:
        return f"State({self})"


def _with_rvars(rvars: Iterable[str], body: Process) -> Process:
    for r in reversed(list(rvars)):
        body = NewVar(r, body)
    return body


def _process_names(p: Process) -> frozenset[str]:
    from .process import free_names

    return free_names(p)


def _mask(p: Process, bound: set[str]) -> str:
    text = str(p)
    return _BOUND_TOKEN.sub(lambda m: "#_" if m.group(0) in bound else m.group(0), text)


def absorb(
    items: Iterable[Process],
    rs: RewriteSystem,
    names: Iterable[str] = (),
    frame: Iterable[tuple[str, Term]] = (),
    pending: Iterable[str] = (),
    bangs: Iterable[tuple[Process, int]] = (),
) -> State:
    """Canonical state of nu names.(frame | items | bangs)."""
    counter = itertools.count()
    work = list(items)
    plain: list[Process] = []
    subs: dict[str, Term] = {}
    new_names: list[str] = []
    rvars: list[str] = list(pending)
    bang_list = list(bangs)
    frame = dict(frame)
    while work:
        p = work.pop()
        if isinstance(p, Par):
            work.extend((p.right, p.left))
        elif isinstance(p, Nil):
            continue
        elif isinstance(p, New):
            t = f"#t{next(counter)}"
            new_names.append(t)
            work.append(rename_name(p.body, p.name, t))
        elif isinstance(p, NewVar):
            q = f"#q{next(counter)}"
            rvars.append(q)
            work.append(rename_var(p.body, p.var, q))
        elif isinstance(p, Sub):
            if p.var in frame or p.var in subs:
                raise DomainClash(f"variable {p.var} is defined twice")
            subs[p.var] = p.term
        elif isinstance(p, Bang):
            bang_list.append((p.body, 0))
        else:
            plain.append(p)
    resolved = uplus(frame, subs) if subs else frame
    restricted = set(rvars)
    still_pending = [r for r in rvars if r not in resolved]
    new_frame = {x: rs.normalize(t) for x, t in resolved.items() if x not in restricted}

    def finish(p: Process) -> Process:
        if subs:
            p = substitute(p, resolved)
        return canon_plain(map_terms(p, rs.normalize))

    plain = [finish(p) for p in plain]
    plain = [p for p in plain if not isinstance(p, Nil)]
    bang_list = [(finish(b), c) for b, c in bang_list]

    # garbage-collect and canonically rename bound names
    all_names = list(names) + new_names
    bound = set(all_names)
    used: set[str] = set()
    for t in new_frame.values():
        used |= term_names(t) & bound
    for p in plain:
        used |= _process_names(p) & bound
    for b, _ in bang_list:
        used |= _process_names(b) & bound
    order: list[str] = []
    seen: set[str] = set()

    def visit(text: str) -> None:
        for m in _BOUND_TOKEN.finditer(text):
            tok = m.group(0)
            if tok in used and tok not in seen:
                seen.add(tok)
                order.append(tok)

    for x in sorted(new_frame):
        visit(str(new_frame[x]))
    for p in sorted(plain, key=lambda q: _mask(q, bound)):
        visit(str(p))
    for b, c in sorted(bang_list, key=lambda bc: (_mask(bc[0], bound), bc[1])):
        visit(str(b))
    for n in sorted(used - seen):
        order.append(n)
    mapping = {old: f"#n{i}" for i, old in enumerate(order) if old != f"#n{i}"}
    rv_order: list[str] = []
    if still_pending:
        pend = set(still_pending)
        texts = [str(p) for p in sorted(plain, key=lambda q: _mask(q, bound))] + [str(b) for b, _ in bang_list]
        for text in texts:
            for m in _RVAR_TOKEN.finditer(text):
                tok = m.group(0)
                if tok in pend and tok not in rv_order:
                    rv_order.append(tok)
        rv_order += [r for r in still_pending if r not in rv_order]
    rv_map = {old: f"#r{i}" for i, old in enumerate(rv_order) if old != f"#r{i}"}
    if mapping or rv_map:

        def rn(t: Term) -> Term:
            t = rename_names(t, mapping)
            if rv_map and term_vars(t) & rv_map.keys():
                t = subst_term(t, {k: Var(v) for k, v in rv_map.items()})
            return t

        def rn_proc(p: Process) -> Process:
            p = map_terms(p, rn)
            return _rename_sub_targets(p, rv_map) if rv_map else p

        new_frame = {x: rename_names(t, mapping) for x, t in new_frame.items()}
        plain = [rn_proc(p) for p in plain]
        bang_list = [(rn_proc(b), c) for b, c in bang_list]
    procs = tuple(sorted(plain, key=str))
    bangs_t = tuple(sorted(bang_list, key=lambda bc: (str(bc[0]), bc[1])))
    return State(
        tuple(f"#n{i}" for i in range(len(order))),
        tuple(sorted(new_frame.items())),
        procs,
        bangs_t,
        tuple(f"#r{i}" for i in range(len(rv_order))),
    )


def _rename_sub_targets(p: Process, m: dict[str, str]) -> Process:
    """Simultaneously rename substitution targets."""
    if isinstance(p, Sub):
        return Sub(m.get(p.var, p.var), p.term)
    if isinstance(p, Out):
        return Out(p.channel, p.message, _rename_sub_targets(p.cont, m))
    if isinstance(p, In):
        return In(p.channel, p.var, _rename_sub_targets(p.cont, m))
    if isinstance(p, New):
        return New(p.name, _rename_sub_targets(p.body, m))
    if isinstance(p, NewVar):
        return NewVar(p.var, _rename_sub_targets(p.body, m))
    if isinstance(p, If):
        return If(p.left, p.right, _rename_sub_targets(p.then, m), _rename_sub_targets(p.else_, m))
    if isinstance(p, Choice):
        return Choice(_rename_sub_targets(p.left, m), _rename_sub_targets(p.right, m))
    if isinstance(p, Par):
        return Par(_rename_sub_targets(p.left, m), _rename_sub_targets(p.right, m))
    if isinstance(p, Bang):
        return Bang(_rename_sub_targets(p.body, m))
    return p


def initial_state(a: Process, rs: RewriteSystem) -> State:
    """Canonical state of a closed process."""
    _check_restrictions(a)
    return absorb([a], rs)


def _check_restrictions(a: Process) -> None:
    """``new x`` may only bind a variable that some substitution in its body defines."""

    def defined(p: Process) -> set[str]:
        out: set[str] = set()
        stack = [p]
        while stack:
            q = stack.pop()
            if isinstance(q, Sub):
                out.add(q.var)
            elif isinstance(q, (Out, In)):
                stack.append(q.cont)
            elif isinstance(q, (New, NewVar, Bang)):
                stack.append(q.body)
            elif isinstance(q, If):
                stack.extend((q.then, q.else_))
            elif isinstance(q, (Choice, Par)):
                stack.extend((q.left, q.right))
        return out

    stack = [a]
    while stack:
        q = stack.pop()
        if isinstance(q, NewVar):
            if q.var not in defined(q.body):
                raise RestrictNonDomainVar(f"new {q.var}: {q.var} is not defined by a substitution in its scope")
            stack.append(q.body)
        elif isinstance(q, (Out, In)):
            stack.append(q.cont)
        elif isinstance(q, (New, Bang)):
            stack.append(q.body)
        elif isinstance(q, If):
            stack.extend((q.then, q.else_))
        elif isinstance(q, (Choice, Par)):
            stack.extend((q.left, q.right))


# ---------------------------------------------------------------------------
# Traces


@dataclass(frozen=True)
class Trace:
    origin: State
    steps: tuple[tuple[Action, State], ...] = ()

    def __len__(self) -> int:
        return len(self.steps)

    def state(self, i: int) -> State:
        return self.origin if i == 0 else self.steps[i - 1][1]

    @property
    def states(self) -> list[State]:
        return [self.origin] + [s for _, s in self.steps]

    @property
    def actions(self) -> tuple[Action, ...]:
        return tuple(a for a, _ in self.steps)

    @property
    def last(self) -> State:
        return self.state(len(self.steps))

    def prefix(self, i: int) -> "Trace":
        return Trace(self.origin, self.steps[:i])

    def extend(self, action: Action, state: State) -> "Trace":
        return Trace(self.origin, self.steps + ((action, state),))

    def to_jsonl(self) -> str:
        lines = []
        for i, s in enumerate(self.states):
            fr = s.frame_obj()
            lines.append(
                json.dumps(
                    {
                        "step": i,
                        "action": action_to_json(self.steps[i - 1][0]) if i else None,
                        "frame": {"names": sorted(fr.names), "subst": {x: str(t) for x, t in fr.subst}},
                    }
                )
            )
        return "\n".join(lines)

    def describe(self) -> str:
        return " . ".join(str(a) for a in self.actions) or "(empty)"


# ---------------------------------------------------------------------------
# Engine


class Engine:
    """Successor functions and trace enumeration for one theory and configuration."""

    def __init__(self, rs: RewriteSystem, cfg: JobConfig | None = None, pool: Iterable[Term] | None = None):
        self.rs = rs
        self.cfg = cfg or JobConfig()
        if pool is None and self.cfg.input_pool:
            pool = self.cfg.input_pool
        self.explicit_pool = None if pool is None else tuple(pool)
        self.bang_budget_hit = False
        self._internal: dict = {}
        self._closure: dict = {}
        self._labelled: dict = {}
        self._weak: dict = {}
        self._pool: dict = {}
        self._sat: dict = {}
        self._expansions: dict = {}

    # -- construction --------------------------------------------------
    def initial(self, a: Process | State) -> State:
        return a if isinstance(a, State) else initial_state(a, self.rs)

    def _rebuild(self, s: State, keep: list[Process], new: list[Process]) -> State:
        return absorb(keep + new, self.rs, s.names, s.frame, s.pending, s.bangs)

    # -- replication -----------------------------------------------------
    def expansions(self, s: State) -> list[tuple[State, tuple[Process, ...], int]]:
        """States with up to two extra copies unfolded, with the fresh components and unfolding count."""
        hit = self._expansions.get(s)
        if hit is not None:
            return hit
        result = [(s, (), 0)]
        if s.bangs:
            frontier = [(s, ())]
            for depth in range(1, 3):
                nxt = []
                for st, fresh in frontier:
                    for j, (body, count) in enumerate(st.bangs):
                        if count >= self.cfg.repl_bound:
                            self.bang_budget_hit = True
                            continue
                        bangs = list(st.bangs)
                        bangs[j] = (body, count + 1)
                        un = absorb([body], self.rs, st.names, st.frame, st.pending, bangs)
                        added = _multiset_diff(un.procs, s.procs)
                        nxt.append((un, added))
                result.extend((st, fresh, depth) for st, fresh in nxt)
                frontier = nxt
        self._expansions[s] = result
        return result

    # -- internal reduction ----------------------------------------------
    def internal(self, s: State) -> tuple[State, ...]:
        hit = self._internal.get(s)
        if hit is not None:
            return hit
        out: set[State] = set()
        for st, fresh, k in self.expansions(s):
            out |= self._reductions(st, fresh, k > 0)
        result = tuple(sorted(out, key=State.key))
        self._internal[s] = result
        return result

    def _reductions(self, s: State, fresh: tuple, need_fresh: bool) -> set[State]:
        out: set[State] = set()
        procs = list(s.procs)
        fresh_set = list(fresh)

        def touches(*idx: int) -> bool:
            return not need_fresh or any(procs[i] in fresh_set for i in idx)

        for i, p in enumerate(procs):
            rest = procs[:i] + procs[i + 1 :]
            if isinstance(p, If) and touches(i):
                if self.rs.normalize(p.left) == self.rs.normalize(p.right):
                    out.add(self._rebuild(s, rest, [p.then]))
                else:
                    if term_vars(p.left) or term_vars(p.right):
                        raise NonGroundGuard(f"else-branch of a non-ground test {p.left} = {p.right}")
                    out.add(self._rebuild(s, rest, [p.else_]))
            elif isinstance(p, Choice) and touches(i):
                for branch in _flatten(p, Choice):
                    out.add(self._rebuild(s, rest, [branch]))
        for i, p in enumerate(procs):
            if not isinstance(p, Out):
                continue
            for j, q in enumerate(procs):
                if j == i or not isinstance(q, In) or not touches(i, j):
                    continue
                if self.rs.normalize(p.channel) != self.rs.normalize(q.channel):
                    continue
                rest = [r for k, r in enumerate(procs) if k not in (i, j)]
                received = substitute(q.cont, {q.var: p.message})
                out.add(self._rebuild(s, rest, [p.cont, received]))
        return out

    def closure(self, s: State) -> tuple[State, ...]:
        """All states reachable by internal reduction (including s)."""
        hit = self._closure.get(s)
        if hit is not None:
            return hit
        seen = {s}
        queue = [s]
        while queue:
            cur = queue.pop()
            for nxt in self.internal(cur):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        result = tuple(sorted(seen, key=State.key))
        self._closure[s] = result
        return result

    # -- attacker knowledge -------------------------------------------------
    def public_names(self, s: State) -> list[str]:
        names = set(s.free_names()) | set(self.cfg.attacker_names)
        names |= {f"#a{k}" for k in range(self.cfg.fresh_pool_size)}
        return sorted(names)

    def saturation(self, s: State):
        key = (s.frame, frozenset(self.public_names(s)))
        hit = self._sat.get(key)
        if hit is None:
            hit = self._sat[key] = saturate(s.frame_obj(), self.public_names(s), self.rs)
        return hit

    def channel_recipe(self, s: State, channel: Term) -> Term | None:
        """Least recipe for a channel, or None when the attacker cannot obtain it."""
        if not (term_names(channel) & set(s.names)) and not term_vars(channel):
            return channel
        return self.saturation(s).recipe_for(self.rs.normalize(channel), self.rs)

    def evaluate(self, s: State, recipe: Term) -> Term:
        return self.rs.normalize(subst_term(recipe, s.subst))

    def pool(self, s: State) -> list[tuple[Term, Term]]:
        """Input payloads as (recipe, value), one recipe per value."""
        names = tuple(self.public_names(s))
        key = (s.frame, names)
        hit = self._pool.get(key)
        if hit is not None:
            return hit
        dom = s.domain
        if self.explicit_pool is not None:
            recipes = [r for r in self.explicit_pool if term_vars(r) <= dom]
        else:
            recipes = [Var(x) for x in sorted(dom)] + [Name(n) for n in names]
            for _ in range(self.cfg.recipe_depth):
                grown = set(recipes)
                for sym, arity in self.rs.signature.symbols:
                    grown.update(App(sym, args) for args in itertools.product(recipes, repeat=arity))
                recipes = list(grown)
            recipes = sorted(set(recipes), key=lambda t: t.key())
        out: list[tuple[Term, Term]] = []
        seen: set[Term] = set()
        for r in recipes:
            v = self.evaluate(s, r)
            if v not in seen:
                seen.add(v)
                out.append((r, v))
        self._pool[key] = out
        return out

    # -- labelled transitions -------------------------------------------------
    def labelled(self, s: State) -> tuple[tuple[Action, State], ...]:
        """Single labelled steps (no silent closure)."""
        hit = self._labelled.get(s)
        if hit is not None:
            return hit
        out: set = set()
        for st, fresh, k in self.expansions(s):
            if k > 1:
                continue
            out |= self._labelled_from(st, fresh, k > 0)
        result = tuple(sorted(out, key=lambda t: (action_key(t[0]), t[1].key())))
        self._labelled[s] = result
        return result

    def _labelled_from(self, s: State, fresh: tuple, need_fresh: bool) -> set:
        out: set = set()
        procs = list(s.procs)
        for i, p in enumerate(procs):
            if need_fresh and p not in fresh:
                continue
            if not isinstance(p, (Out, In)):
                continue
            crec = self.channel_recipe(s, p.channel)
            if crec is None:
                continue
            rest = procs[:i] + procs[i + 1 :]
            if isinstance(p, Out):
                alias = s.next_alias()
                out.add((AliasOut(crec, alias), self._rebuild(s, rest, [p.cont, Sub(alias, p.message)])))
            else:
                for recipe, value in self.pool(s):
                    nxt = self._rebuild(s, rest, [substitute(p.cont, {p.var: value})])
                    out.add((Input(crec, recipe), nxt))
        return out

    def steps_with_label(self, s: State, action: Action) -> tuple[State, ...]:
        """Single steps carrying a given label (recipes evaluated under s's frame)."""
        if isinstance(action, Silent):
            return self.internal(s)
        if not action_vars(action) <= s.domain:
            return ()
        target = self.evaluate(s, action.channel)
        if term_names(action.channel) & set(s.names):
            return ()
        out: set[State] = set()
        for st, fresh, k in self.expansions(s):
            if k > 1:
                continue
            procs = list(st.procs)
            for i, p in enumerate(procs):
                if k and p not in fresh:
                    continue
                if isinstance(action, AliasOut) and isinstance(p, Out) or isinstance(action, Input) and isinstance(p, In):
                    if self.rs.normalize(p.channel) != target:
                        continue
                    rest = procs[:i] + procs[i + 1 :]
                    if isinstance(p, Out):
                        out.add(self._rebuild(st, rest, [p.cont, Sub(st.next_alias(), p.message)]))
                    else:
                        value = self.evaluate(st, action.payload)
                        out.add(self._rebuild(st, rest, [substitute(p.cont, {p.var: value})]))
        return tuple(sorted(out, key=State.key))

    def weak(self, s: State) -> tuple[tuple[Action, State], ...]:
        """s ==a==> s': silent closure around one labelled step."""
        hit = self._weak.get(s)
        if hit is not None:
            return hit
        out: set = set()
        for pre in self.closure(s):
            for action, mid in self.labelled(pre):
                for post in self.closure(mid):
                    out.add((action, post))
        result = tuple(sorted(out, key=lambda t: (action_key(t[0]), t[1].key())))
        self._weak[s] = result
        return result

    def weak_with_label(self, s: State, action: Action) -> tuple[State, ...]:
        out: set[State] = set()
        for pre in self.closure(s):
            for mid in self.steps_with_label(pre, action):
                out.update(self.closure(mid))
        return tuple(sorted(out, key=State.key))

    def steps(self, s: State) -> tuple[tuple[Action, State], ...]:
        """Trace steps under the configured comparison mode."""
        if self.cfg.comparison_mode == LABELLED_ONLY:
            return self.weak(s)
        single = [(TAU, t) for t in self.internal(s)] + list(self.labelled(s))
        return tuple(sorted(set(single), key=lambda t: (action_key(t[0]), t[1].key())))

    def steps_labelled(self, s: State, action: Action) -> tuple[State, ...]:
        if self.cfg.comparison_mode == LABELLED_ONLY:
            return self.weak_with_label(s, action)
        return self.steps_with_label(s, action)

    def is_maximal(self, s: State) -> bool:
        return not self.internal(s) and not self.labelled(s)

    # -- traces -----------------------------------------------------------------
    def traces(self, a: Process | State, max_len: int | None = None) -> Iterator[Trace]:
        """All traces up to max_len, shortest first, in a deterministic order."""
        max_len = self.cfg.max_trace_len if max_len is None else max_len
        level = [Trace(self.initial(a))]
        for n in range(max_len + 1):
            yield from level
            if n == max_len:
                break
            nxt = []
            for tr in level:
                for action, st in self.steps(tr.last):
                    nxt.append(tr.extend(action, st))
            level = nxt
            if not level:
                break

    def validate(self, tr: Trace) -> bool:
        """Replay a trace through the successor functions."""
        cur = tr.origin
        for action, st in tr.steps:
            if st not in self.steps_labelled(cur, action):
                return False
            cur = st
        return True


def _multiset_diff(a: tuple, b: tuple) -> tuple:
    rest = list(b)
    out = []
    for x in a:
        if x in rest:
            rest.remove(x)
        else:
            out.append(x)
    return tuple(out)


# ---------------------------------------------------------------------------
# Functional interface


def internal_successors(a: Process | State, rs: RewriteSystem, repl_bound: int = 2) -> tuple[State, ...]:
    eng = Engine(rs, JobConfig(repl_bound=repl_bound))
    return eng.internal(eng.initial(a))


def labelled_successors(
    a: Process | State, pool: Iterable[Term] | None, rs: RewriteSystem, repl_bound: int = 2, cfg: JobConfig | None = None
) -> tuple[tuple[Action, State], ...]:
    eng = Engine(rs, (cfg or JobConfig()).with_(repl_bound=repl_bound), pool)
    return eng.labelled(eng.initial(a))


def traces(
    a: Process | State,
    max_len: int,
    pool: Iterable[Term] | None,
    rs: RewriteSystem,
    repl_bound: int = 2,
    cfg: JobConfig | None = None,
) -> Iterator[Trace]:
    eng = Engine(rs, (cfg or JobConfig()).with_(repl_bound=repl_bound, max_trace_len=max_len), pool)
    return eng.traces(a, max_len)


def is_maximal(a: Process | State, pool: Iterable[Term] | None, rs: RewriteSystem, repl_bound: int = 2) -> bool:
    eng = Engine(rs, JobConfig(repl_bound=repl_bound), pool)
    return eng.is_maximal(eng.initial(a))


def structurally_equal(a: Process, b: Process, rs: RewriteSystem) -> bool:
    return initial_state(a, rs) == initial_state(b, rs)
