"""Frames, deduction and static equivalence.

``static_equiv`` is a saturation procedure for convergent subterm theories:
it computes the frame subterms the attacker can obtain (each with a
recipe), records every alternative way of reaching an already known
value as a test, and then checks all those tests in both frames.
``static_equiv_oracle`` is an independent brute-force baseline used for
differential testing.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .errors import UnsupportedTheory
from .process import Process, accounting, alpha_fresh, pnf
from .terms import (
    App,
    Name,
    RewriteSystem,
    Term,
    Var,
    app_depth,
    match,
    rename_names,
    substitute,
    subterms,
    term_names,
    term_vars,
)

FRESH_POOL = ("#f0", "#f1")


def _key(t: Term) -> tuple:
    return t.key()


@dataclass(frozen=True)
class Frame:
    """nu names.{M1/x1, ...}; images are fully applied (no domain variables)."""

    names: frozenset[str] = frozenset()
    subst: tuple[tuple[str, Term], ...] = ()

    @classmethod
    def of(cls, subst: Mapping[str, Term] | None = None, names: Iterable[str] = ()) -> "Frame":
        subst = dict(subst or {})
        return cls(frozenset(names), tuple(sorted(subst.items())))

    @property
    def mapping(self) -> dict[str, Term]:
        return dict(self.subst)

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(x for x, _ in self.subst)

    def free_names(self) -> frozenset[str]:
        out: set[str] = set()
        for _, t in self.subst:
            out |= term_names(t)
        return frozenset(out - self.names)

    def rename_bound(self, mapping: Mapping[str, str]) -> "Frame":
        names = frozenset(mapping.get(n, n) for n in self.names)
        return Frame(names, tuple((x, rename_names(t, mapping)) for x, t in self.subst))

    def apart_from(self, avoid: Iterable[str], prefix: str = "#b") -> "Frame":
        """Alpha-rename bound names that occur in ``avoid``."""
        avoid = set(avoid)
        clash = sorted(self.names & avoid)
        if not clash:
            return self
        used = avoid | set(self.names) | set(self.free_names())
        mapping = {}
        k = 0
        for n in clash:
            while f"{prefix}{k}" in used:
                k += 1
            mapping[n] = f"{prefix}{k}"
            used.add(mapping[n])
        return self.rename_bound(mapping)

    def __str__(self) -> str:
        body = ", ".join(f"{t}/{x}" for x, t in self.subst)
        prefix = f"new {', '.join(sorted(self.names))}. " if self.names else ""
        return prefix + "{" + body + "}"


def frame_of(a: Process) -> Frame:
    """fr(A) flattened into (bound names, substitution)."""
    report = accounting(a)
    form = pnf(alpha_fresh(a, report.fn | report.fv))
    subst = form.subst
    used = set()
    for t in subst.values():
        used |= term_names(t)
    names = frozenset(n for n in form.names if n in used)
    return Frame(names, tuple(sorted(subst.items())))


def _normalized(phi: Frame, rs: RewriteSystem) -> dict[str, Term]:
    return {x: rs.normalize(t) for x, t in phi.subst}


def evaluate(recipe: Term, phi: Frame, rs: RewriteSystem) -> Term:
    """Value of a recipe under the frame (bound names assumed apart)."""
    return rs.normalize(substitute(recipe, phi.mapping))


def test_holds(m: Term, n: Term, phi: Frame, rs: RewriteSystem) -> bool:
    """(M = N)phi."""
    dom = phi.domain
    if not (term_vars(m) | term_vars(n)) <= dom:
        return False
    phi = phi.apart_from(term_names(m) | term_names(n))
    sigma = phi.mapping
    return rs.normalize(substitute(m, sigma)) == rs.normalize(substitute(n, sigma))


# ---------------------------------------------------------------------------
# Saturation


def _check_theory(rs: RewriteSystem) -> None:
    comm_symbols = {s for pair in rs.signature.comm for s in pair}
    for lhs, _ in rs.rules:
        for s in subterms(lhs):
            if type(s) is App and s.symbol in comm_symbols:
                raise UnsupportedTheory(
                    f"rewrite rule mentions {s.symbol!r}, which also carries a commutation hook"
                )


@dataclass
class Saturation:
    """Deducible values of a frame, with recipes and the tests discovered on the way."""

    known: dict = field(default_factory=dict)  # value -> least recipe
    tests: set = field(default_factory=set)  # (recipe, recipe) with equal values here

    def recipe_for(self, value: Term, rs: RewriteSystem | None = None) -> Term | None:
        hit = self.known.get(value)
        if hit is not None:
            return hit
        if type(value) is App:
            args = [self.recipe_for(a, rs) for a in value.args]
            if all(r is not None for r in args):
                return App(value.symbol, args)
            if rs is not None:
                return self._dh_recipe(value, rs)
        return None

    def _dh_recipe(self, value: App, rs: RewriteSystem) -> Term | None:
        for f, g in rs.signature.comm:
            if value.symbol != f or len(value.args) != 2:
                continue
            first, second = value.args
            if type(second) is App and second.symbol == g:
                r_inner = self.recipe_for(second.args[0], rs)
                r_swapped = self.recipe_for(rs.normalize(App(g, (first,))), rs)
                if r_inner is not None and r_swapped is not None:
                    return App(f, (r_inner, r_swapped))
        return None


def _least(a: Term, b: Term) -> Term:
    return a if a.key() <= b.key() else b


def saturate(phi: Frame, public: Iterable[str], rs: RewriteSystem) -> Saturation:
    """Close the attacker's knowledge of ``phi`` under composition and rule application.

    ``public`` must be disjoint from ``phi.names``.
    """
    _check_theory(rs)
    sat = Saturation()
    known = sat.known
    changed = True

    def add(value: Term, recipe: Term) -> None:
        nonlocal changed
        old = known.get(value)
        if old is None:
            known[value] = recipe
            changed = True
            for s in subterms(value):
                if s not in pending_set:
                    pending_set.add(s)
                    pending.append(s)
        elif old != recipe:
            sat.tests.add((old, recipe) if old.key() <= recipe.key() else (recipe, old))
            if recipe.key() < old.key():
                known[value] = recipe

    pending: list[Term] = []
    pending_set: set[Term] = set()
    public = sorted(set(public))
    for n in public:
        add(Name(n), Name(n))
    sigma = _normalized(phi, rs)
    for x in sorted(sigma):
        add(sigma[x], Var(x))

    fresh = [n for n in public if n.startswith("#f")] or public[:2]
    comm = rs.signature.comm
    rules = rs.rules
    done_compose: set = set()
    while changed:
        changed = False
        # composition of known values into frame subterms
        for t in sorted(pending_set, key=_key):
            if type(t) is not App:
                continue
            recipes = [known.get(a) for a in t.args]
            if all(r is not None for r in recipes):
                recipe = App(t.symbol, recipes)
                if (t, recipe) not in done_compose:
                    done_compose.add((t, recipe))
                    add(t, recipe)
            for f, g in comm:
                if t.symbol == f and len(t.args) == 2:
                    first, second = t.args
                    if type(second) is App and second.symbol == g:
                        r_inner = known.get(second.args[0])
                        r_sw = known.get(rs.normalize(App(g, (first,))))
                        if r_inner is not None and r_sw is not None:
                            recipe = App(f, (r_inner, r_sw))
                            if (t, recipe) not in done_compose:
                                done_compose.add((t, recipe))
                                add(t, recipe)
        # rule application with attacker-built subpatterns
        for lhs, rhs in rules:
            for theta, recipe in _instances(lhs, known, rs, fresh):
                value = rs.normalize(substitute(rhs, theta))
                if (value, recipe) in done_compose:
                    continue
                done_compose.add((value, recipe))
                add(value, recipe)
    return sat


def _instances(lhs: Term, known: Mapping[Term, Term], rs: RewriteSystem, fresh: list[str]):
    """Ways the attacker can build an instance of ``lhs``.

    Yields (binding var -> value, recipe).  Each App position of the
    pattern is either matched against a known value or composed by the
    attacker; variables the attacker must supply are resolved at the end.
    """
    results = []
    values = sorted(known, key=_key)

    def build(p: Term, theta: dict, deferred: list):
        if type(p) is Var:
            yield theta, Var("?" + p.id), deferred + [p.id]
            return
        if type(p) is Name:
            r = known.get(p)
            if r is not None:
                yield theta, r, deferred
            return
        # matched against a known value
        for v in values:
            if type(v) is App and v.symbol == p.symbol:
                b = match(p, v, dict(theta))
                if b is not None:
                    yield b, known[v], deferred
        # composed by the attacker
        yield from build_args(p, 0, theta, [], deferred)

    def build_args(p: App, i: int, theta: dict, recipes: list, deferred: list):
        if i == len(p.args):
            yield theta, App(p.symbol, recipes), deferred
            return
        for th, r, d in build(p.args[i], theta, deferred):
            yield from build_args(p, i + 1, th, recipes + [r], d)

    seen = set()
    for theta, template, deferred in build(lhs, {}, []):
        theta = dict(theta)
        fill: dict[str, Term] = {}
        ok = True
        for v in deferred:
            if v in fill:
                continue
            if v in theta:
                r = _recipe_by_composition(theta[v], known)
                if r is None:
                    ok = False
                    break
                fill["?" + v] = r
            else:
                if not fresh:
                    ok = False
                    break
                theta[v] = Name(fresh[0])
                fill["?" + v] = Name(fresh[0])
        if not ok:
            continue
        recipe = substitute(template, fill)
        if recipe in seen:
            continue
        seen.add(recipe)
        results.append((theta, recipe))
    return results


def _recipe_by_composition(value: Term, known: Mapping[Term, Term]) -> Term | None:
    hit = known.get(value)
    if hit is not None:
        return hit
    if type(value) is App:
        args = [_recipe_by_composition(a, known) for a in value.args]
        if all(r is not None for r in args):
            return App(value.symbol, args)
    return None


# ---------------------------------------------------------------------------
# Deduction


def deduce(phi: Frame, target: Term, rs: RewriteSystem, depth: int = 3) -> Term | None:
    """A recipe R with R phi =E target and App-depth <= depth, or None."""
    public = (phi.free_names() | (term_names(target) - phi.names))
    sat = saturate(phi, public, rs)
    recipe = sat.recipe_for(rs.normalize(target), rs)
    if recipe is None or app_depth(recipe) > depth:
        return None
    return recipe


# ---------------------------------------------------------------------------
# Static equivalence


@dataclass(frozen=True)
class StaticVerdict:
    equivalent: bool
    witness: tuple[Term, Term] | None = None
    reason: str = ""
    holds_left: bool | None = None

    def __bool__(self) -> bool:
        return self.equivalent


def test_order(test: tuple[Term, Term]) -> tuple:
    m, n = test
    return (m.size + n.size, m.key(), n.key())


def _canon_test(m: Term, n: Term) -> tuple[Term, Term]:
    return (m, n) if m.key() <= n.key() else (n, m)


def _apart(phi: Frame, psi: Frame) -> tuple[Frame, Frame, list[str]]:
    public = phi.free_names() | psi.free_names()
    used = set(public) | set(FRESH_POOL)
    for fr in (phi, psi):
        for _, t in fr.subst:
            used |= term_names(t)
        used |= fr.names
    renamed = []
    k = 0
    for fr in (phi, psi):
        mapping = {}
        for n in sorted(fr.names):
            if n in public or n in FRESH_POOL or n.startswith("#f"):
                while f"#b{k}" in used:
                    k += 1
                mapping[n] = f"#b{k}"
                used.add(mapping[n])
        renamed.append(fr.rename_bound(mapping) if mapping else fr)
    pool = sorted(public) + list(FRESH_POOL)
    return renamed[0], renamed[1], pool


def candidate_tests(phi: Frame, psi: Frame, rs: RewriteSystem) -> list[tuple[Term, Term]]:
    """The finite test set checked by static_equiv (frames already apart)."""
    _, _, pool = _apart(phi, psi)
    tests: set = set()
    for fr in (phi, psi):
        sat = saturate(fr, pool, rs)
        recipes = sorted(set(sat.known.values()), key=_key)
        for i, m in enumerate(recipes):
            for n in recipes[i + 1 :]:
                tests.add(_canon_test(m, n))
        tests |= sat.tests
        for f, g in rs.signature.comm:
            gvals = [r for v, r in sat.known.items() if type(v) is App and v.symbol == g]
            for r1 in recipes:
                for r2 in gvals:
                    for r3 in recipes:
                        for r4 in gvals:
                            tests.add(_canon_test(App(f, (r1, r2)), App(f, (r3, r4))))
    return sorted(tests, key=test_order)


def static_equiv(phi: Frame, psi: Frame, rs: RewriteSystem) -> StaticVerdict:
    if phi.domain != psi.domain:
        return StaticVerdict(False, None, "domain-mismatch")
    phi, psi, _ = _apart(phi, psi)
    sig_phi, sig_psi = phi.mapping, psi.mapping
    for m, n in candidate_tests(phi, psi, rs):
        left = rs.normalize(substitute(m, sig_phi)) == rs.normalize(substitute(n, sig_phi))
        right = rs.normalize(substitute(m, sig_psi)) == rs.normalize(substitute(n, sig_psi))
        if left != right:
            return StaticVerdict(False, (m, n), "test", left)
    return StaticVerdict(True)


# ---------------------------------------------------------------------------
# Brute-force oracle


def static_equiv_oracle(
    phi: Frame, psi: Frame, rs: RewriteSystem, depth: int = 3, witness: bool = True
) -> StaticVerdict:
    """Search for a separating test among recipes of App-depth <= depth.

    Recipes are explored as pairs of values (phi-value, psi-value); a test
    separates the frames exactly when two recipes collide on one side
    only.  Up to depth 2 every composition is materialised.  At depth 3
    only compositions that can possibly collide are examined: those where
    some rule fires at the root on either side, and those rebuilding an
    already reachable value from reachable arguments.  Items are tuples
    (phi-value, psi-value, recipe, depth); a recipe is a leaf term or
    (symbol, argument items), built into a term only when reported.  With
    ``witness=False`` the search stops at the first collision and no test
    is returned.
    """
    if phi.domain != psi.domain:
        return StaticVerdict(False, None, "domain-mismatch")
    phi, psi, pool = _apart(phi, psi)
    s1, s2 = _normalized(phi, rs), _normalized(psi, rs)
    fwd: dict[Term, tuple] = {}  # phi-value -> item
    bwd: dict[Term, tuple] = {}
    found: list[tuple[object, object, bool]] = []

    def record(item: tuple) -> bool:
        """Insert an item; returns True if its value pair is new."""
        v1, v2 = item[0], item[1]
        hit = fwd.get(v1)
        if hit is not None:
            if hit[1] != v2:
                found.append((hit[2], item[2], True))
                if not witness:
                    raise _Separated
            return False
        hit = bwd.get(v2)
        if hit is not None:
            found.append((hit[2], item[2], False))
            if not witness:
                raise _Separated
            return False
        fwd[v1] = item
        bwd[v2] = item
        return True

    try:
        _oracle_search(rs, pool, s1, s2, depth, fwd, bwd, record)
    except _Separated:
        return StaticVerdict(False, None, "test")
    if found:
        tests = [(_recipe(m), _recipe(n), holds) for m, n, holds in found]
        m, n, holds_left = min(tests, key=lambda w: test_order(_canon_test(w[0], w[1])))
        return StaticVerdict(False, _canon_test(m, n), "test", holds_left)
    return StaticVerdict(True)


class _Separated(Exception):
    pass


def _oracle_search(rs, pool, s1, s2, depth, fwd, bwd, record) -> None:
    symbols = list(rs.signature.symbols)
    compose = rs.compose
    all_items = []
    for n in pool:
        item = (Name(n), Name(n), Name(n), 0, False)
        if record(item):
            all_items.append(item)
    for x in sorted(s1):
        item = (s1[x], s2[x], Var(x), 0, False)
        if record(item):
            all_items.append(item)
    for d in range(1, min(depth, 2) + 1):
        new = []
        older = [c for c in all_items if c[3] < d - 1]
        last = [c for c in all_items if c[3] == d - 1]
        for sym, arity in symbols:
            for combo in _combos_with(older, last, all_items, arity):
                item = _compose_item(compose, sym, combo, d)
                if record(item):
                    new.append(item)
        all_items.extend(new)
    if depth >= 3 and rs.signature.comm:
        # reorientation can merge arbitrary compositions: enumerate everything
        for sym, arity in symbols:
            for combo in itertools.product(all_items, repeat=arity):
                if any(c[3] == 2 for c in combo):
                    record(_compose_item(compose, sym, combo, 3))
    elif depth >= 3:
        _oracle_depth3(rs, all_items, fwd, bwd, record)


def _combos_with(older: list, last: list, every: list, arity: int):
    """Argument tuples over ``every`` with at least one item from ``last``, each once.

    ``older`` and ``last`` partition ``every``; position i holds the first
    ``last`` item, so earlier positions range over ``older``.
    """
    if arity == 0:
        return
    for i in range(arity):
        yield from itertools.product(*([older] * i + [last] + [every] * (arity - i - 1)))


def _compose_item(compose, sym: str, combo, depth: int) -> tuple:
    a1 = tuple([c[0] for c in combo])
    a2 = tuple([c[1] for c in combo])
    v1, v2 = compose(sym, a1), compose(sym, a2)
    plain = type(v1) is App and v1.args is a1 and type(v2) is App and v2.args is a2
    return (v1, v2, (sym, tuple(combo)), depth, plain)


def _bind(p: Term, item: tuple, binding: dict) -> bool:
    """Match a rule pattern against an item's recipe structure (not its values)."""
    if type(p) is Var:
        prev = binding.setdefault(p.id, item)
        return prev is item
    spec = item[2]
    if type(p) is not App or isinstance(spec, Term) or spec[0] != p.symbol or not item[4]:
        return False
    return all(_bind(q, c, binding) for q, c in zip(p.args, spec[1]))


def _collapses(lhs: App, rhs: Term, combo) -> bool:
    """The rule rewrites lhs(combo) on both sides to an argument item already recorded."""
    if type(rhs) is not Var:
        return False
    binding: dict = {}
    return all(_bind(q, c, binding) for q, c in zip(lhs.args, combo))


def _recipe(spec) -> Term:
    if isinstance(spec, Term):
        return spec
    sym, combo = spec
    return App(sym, tuple(_recipe(c[2]) for c in combo))


def _oracle_depth3(rs, items, fwd, bwd, record) -> None:
    by_v1 = {it[0]: it for it in items}
    by_v2 = {it[1]: it for it in items}
    seen: set = set()
    compose = rs.compose

    def run(sym, combo):
        key = (sym, tuple(id(c) for c in combo))
        if key in seen:
            return
        seen.add(key)
        record(_compose_item(compose, sym, combo, 3))

    # compositions whose root rewrites on either side
    for lhs, rhs in rs.rules:
        for index, table in ((0, by_v1), (1, by_v2)):
            for combo in _root_matches(lhs, table, items, index):
                if not _collapses(lhs, rhs, combo):
                    run(lhs.symbol, combo)
    # compositions that rebuild an already reachable value; any other
    # non-rewriting composition yields a pair that is new on both sides
    for table, reach in ((by_v1, fwd), (by_v2, bwd)):
        for value, item in list(reach.items()):
            if type(value) is App:
                args = [table.get(a) for a in value.args]
                if not all(a is not None for a in args):
                    continue
                if item[4] and all(a is c for a, c in zip(args, item[2][1])):
                    continue  # the item itself
                run(value.symbol, args)


def _root_matches(lhs: App, table: dict, items: list, index: int):
    """Argument tuples (from items) whose side-``index`` values make lhs match at the root."""
    arg_options = []
    for p in lhs.args:
        if type(p) is Var:
            arg_options.append(None)
        else:
            opts = [it for it in items if match(p, it[index]) is not None]
            arg_options.append(opts)
    var_positions = [i for i, o in enumerate(arg_options) if o is None]
    fixed = [o if o is not None else [None] for o in arg_options]
    for choice in itertools.product(*fixed):
        theta: dict | None = {}
        for p, it in zip(lhs.args, choice):
            if it is None:
                continue
            theta = match(p, it[index], theta)
            if theta is None:
                break
        if theta is None:
            continue
        # variable argument positions must be filled with a value equal to theta's binding
        fill = []
        ok = True
        for i in var_positions:
            var = lhs.args[i].id
            if var in theta:
                it = table.get(theta[var])
                if it is None:
                    ok = False
                    break
                fill.append((i, [it]))
            else:
                # unconstrained: two distinct choices expose any dependence on it
                fill.append((i, items[:2]))
        if not ok:
            continue
        for extra in itertools.product(*(opts for _, opts in fill)):
            args = list(choice)
            for (i, _), it in zip(fill, extra):
                args[i] = it
            yield args
