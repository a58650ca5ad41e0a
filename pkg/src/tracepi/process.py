"""Extended processes: syntax, binder accounting, substitution, pnf.

Identifiers starting with ``#`` are reserved for machine-generated fresh
names and variables; the parser rejects them in user input, so anything
drawn from that namespace is collision-free by construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import Cyclic, DomainClash
from .terms import (
    Term,
    Var,
    rename_names,
    substitute as subst_term,
    term_names,
    term_vars,
)


class Process:
    __slots__ = ("_hash", "_text")

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = self._hash = hash(self._fields())
        return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if type(other) is not type(self) or hash(self) != hash(other):
            return False
        return self._fields() == other._fields()

    def _fields(self) -> tuple:
        raise NotImplementedError

    def __str__(self) -> str:
        if self._text is None:
            from .printer import format_process

            self._text = format_process(self)
        return self._text

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self}>"

    def __lt__(self, other: "Process") -> bool:
        return sort_key(self) < sort_key(other)


def sort_key(p: Process) -> tuple:
    return (type(p).__name__, str(p))


class Nil(Process):
    __slots__ = ()

    def __init__(self):
        self._hash = None
        self._text = None

    def _fields(self):
        return ("nil",)


NIL = Nil()


class Out(Process):
    __slots__ = ("channel", "message", "cont")

    def __init__(self, channel: Term, message: Term, cont: Process = NIL):
        self.channel, self.message, self.cont = channel, message, cont
        self._hash = self._text = None

    def _fields(self):
        return ("out", self.channel, self.message, self.cont)


class In(Process):
    __slots__ = ("channel", "var", "cont")

    def __init__(self, channel: Term, var: str, cont: Process = NIL):
        self.channel, self.var, self.cont = channel, var, cont
        self._hash = self._text = None

    def _fields(self):
        return ("in", self.channel, self.var, self.cont)


class New(Process):
    __slots__ = ("name", "body")

    def __init__(self, name: str, body: Process):
        self.name, self.body = name, body
        self._hash = self._text = None

    def _fields(self):
        return ("new", self.name, self.body)


class NewVar(Process):
    __slots__ = ("var", "body")

    def __init__(self, var: str, body: Process):
        self.var, self.body = var, body
        self._hash = self._text = None

    def _fields(self):
        return ("newvar", self.var, self.body)


class If(Process):
    __slots__ = ("left", "right", "then", "else_")

    def __init__(self, left: Term, right: Term, then: Process, else_: Process = NIL):
        self.left, self.right, self.then, self.else_ = left, right, then, else_
        self._hash = self._text = None

    def _fields(self):
        return ("if", self.left, self.right, self.then, self.else_)


class Choice(Process):
    __slots__ = ("left", "right")

    def __init__(self, left: Process, right: Process):
        self.left, self.right = left, right
        self._hash = self._text = None

    def _fields(self):
        return ("choice", self.left, self.right)


class Par(Process):
    __slots__ = ("left", "right")

    def __init__(self, left: Process, right: Process):
        self.left, self.right = left, right
        self._hash = self._text = None

    def _fields(self):
        return ("par", self.left, self.right)


class Bang(Process):
    __slots__ = ("body",)

    def __init__(self, body: Process):
        self.body = body
        self._hash = self._text = None

    def _fields(self):
        return ("bang", self.body)


class Sub(Process):
    """Active substitution {term/var}."""

    __slots__ = ("var", "term")

    def __init__(self, var: str, term: Term):
        self.var, self.term = var, term
        self._hash = self._text = None

    def _fields(self):
        return ("sub", self.var, self.term)


def par(*procs: Process) -> Process:
    """Right-nested parallel composition, dropping nils."""
    items = [p for p in procs if not isinstance(p, Nil)]
    if not items:
        return NIL
    result = items[-1]
    for p in reversed(items[:-1]):
        result = Par(p, result)
    return result


def news(names: Iterable[str], body: Process) -> Process:
    for n in reversed(list(names)):
        body = New(n, body)
    return body


def subst_process(mapping: Mapping[str, Term]) -> Process:
    """The active substitution {M1/x1} | ... as a process (sorted by variable)."""
    return par(*(Sub(x, mapping[x]) for x in sorted(mapping)))


# ---------------------------------------------------------------------------
# Binder accounting


@dataclass(frozen=True)
class BinderReport:
    fn: frozenset[str]
    fv: frozenset[str]
    bn: frozenset[str]
    rv: frozenset[str]
    dom: frozenset[str]


_EMPTY: frozenset[str] = frozenset()


def accounting(a: Process) -> BinderReport:
    if isinstance(a, Nil):
        return BinderReport(_EMPTY, _EMPTY, _EMPTY, _EMPTY, _EMPTY)
    if isinstance(a, Out):
        c = accounting(a.cont)
        fn = term_names(a.channel) | term_names(a.message) | c.fn
        fv = term_vars(a.channel) | term_vars(a.message) | c.fv
        return BinderReport(fn, fv, c.bn, c.rv, _EMPTY)
    if isinstance(a, In):
        c = accounting(a.cont)
        return BinderReport(
            term_names(a.channel) | c.fn,
            term_vars(a.channel) | (c.fv - {a.var}),
            c.bn,
            c.rv,
            _EMPTY,
        )
    if isinstance(a, New):
        b = accounting(a.body)
        return BinderReport(b.fn - {a.name}, b.fv, b.bn | {a.name}, b.rv, b.dom)
    if isinstance(a, NewVar):
        b = accounting(a.body)
        return BinderReport(b.fn, b.fv - {a.var}, b.bn, b.rv | {a.var}, b.dom - {a.var})
    if isinstance(a, If):
        t, e = accounting(a.then), accounting(a.else_)
        return BinderReport(
            term_names(a.left) | term_names(a.right) | t.fn | e.fn,
            term_vars(a.left) | term_vars(a.right) | t.fv | e.fv,
            t.bn | e.bn,
            t.rv | e.rv,
            _EMPTY,
        )
    if isinstance(a, (Choice, Par)):
        l, r = accounting(a.left), accounting(a.right)
        dom = l.dom | r.dom if isinstance(a, Par) else _EMPTY
        return BinderReport(l.fn | r.fn, l.fv | r.fv, l.bn | r.bn, l.rv | r.rv, dom)
    if isinstance(a, Bang):
        b = accounting(a.body)
        return BinderReport(b.fn, b.fv, b.bn, b.rv, _EMPTY)
    if isinstance(a, Sub):
        return BinderReport(term_names(a.term), term_vars(a.term) | {a.var}, _EMPTY, _EMPTY, frozenset((a.var,)))
    raise TypeError(f"not a process: {a!r}")


def free_names(a: Process) -> frozenset[str]:
    return accounting(a).fn


def free_vars(a: Process) -> frozenset[str]:
    return accounting(a).fv


def domain(a: Process) -> frozenset[str]:
    return accounting(a).dom


def is_closed(a: Process) -> bool:
    r = accounting(a)
    return r.fv == r.dom


def all_identifiers(a: Process) -> set[str]:
    """Every name or variable occurring anywhere, bound or free."""
    out: set[str] = set()
    stack = [a]
    while stack:
        p = stack.pop()
        if isinstance(p, Out):
            out |= term_names(p.channel) | term_vars(p.channel) | term_names(p.message) | term_vars(p.message)
            stack.append(p.cont)
        elif isinstance(p, In):
            out |= term_names(p.channel) | term_vars(p.channel)
            out.add(p.var)
            stack.append(p.cont)
        elif isinstance(p, New):
            out.add(p.name)
            stack.append(p.body)
        elif isinstance(p, NewVar):
            out.add(p.var)
            stack.append(p.body)
        elif isinstance(p, If):
            out |= term_names(p.left) | term_vars(p.left) | term_names(p.right) | term_vars(p.right)
            stack.extend((p.then, p.else_))
        elif isinstance(p, (Choice, Par)):
            stack.extend((p.left, p.right))
        elif isinstance(p, Bang):
            stack.append(p.body)
        elif isinstance(p, Sub):
            out.add(p.var)
            out |= term_names(p.term) | term_vars(p.term)
    return out


def fresh_identifier(prefix: str, used: set[str]) -> str:
    k = 0
    while f"{prefix}{k}" in used:
        k += 1
    ident = f"{prefix}{k}"
    used.add(ident)
    return ident


# ---------------------------------------------------------------------------
# Substitution and renaming


def substitute(a: Process, mapping: Mapping[str, Term], _used: set[str] | None = None) -> Process:
    """Capture-avoiding substitution of terms for free variables."""
    mapping = {k: v for k, v in mapping.items() if not (type(v) is Var and v.id == k)}
    if not mapping:
        return a
    if _used is None:
        _used = all_identifiers(a)
        for v in mapping.values():
            _used |= term_names(v) | term_vars(v)
        _used |= set(mapping)
    return _subst(a, mapping, _used)


def _incoming(mapping: Mapping[str, Term]) -> tuple[frozenset[str], frozenset[str]]:
    names: frozenset[str] = frozenset()
    vs: frozenset[str] = frozenset()
    for v in mapping.values():
        names |= term_names(v)
        vs |= term_vars(v)
    return names, vs


def _subst(a: Process, mapping: dict[str, Term], used: set[str]) -> Process:
    if not mapping or isinstance(a, Nil):
        return a
    if isinstance(a, Out):
        return Out(subst_term(a.channel, mapping), subst_term(a.message, mapping), _subst(a.cont, mapping, used))
    if isinstance(a, In):
        inner = {k: v for k, v in mapping.items() if k != a.var}
        var, cont = a.var, a.cont
        if inner and var in _incoming(inner)[1] and var in free_vars(cont):
            new = fresh_identifier("#v", used)
            cont = _subst(cont, {var: Var(new)}, used)
            var = new
        return In(subst_term(a.channel, mapping), var, _subst(cont, inner, used))
    if isinstance(a, New):
        name, body = a.name, a.body
        if name in _incoming(mapping)[0]:
            new = fresh_identifier("#n", used)
            body = rename_name(body, name, new)
            name = new
        return New(name, _subst(body, mapping, used))
    if isinstance(a, NewVar):
        inner = {k: v for k, v in mapping.items() if k != a.var}
        var, body = a.var, a.body
        if inner and var in _incoming(inner)[1]:
            new = fresh_identifier("#r", used)
            body = rename_var(body, var, new)
            var = new
        return NewVar(var, _subst(body, inner, used))
    if isinstance(a, If):
        return If(
            subst_term(a.left, mapping),
            subst_term(a.right, mapping),
            _subst(a.then, mapping, used),
            _subst(a.else_, mapping, used),
        )
    if isinstance(a, Choice):
        return Choice(_subst(a.left, mapping, used), _subst(a.right, mapping, used))
    if isinstance(a, Par):
        return Par(_subst(a.left, mapping, used), _subst(a.right, mapping, used))
    if isinstance(a, Bang):
        return Bang(_subst(a.body, mapping, used))
    if isinstance(a, Sub):
        return Sub(a.var, subst_term(a.term, mapping))
    raise TypeError(f"not a process: {a!r}")


def rename_name(a: Process, old: str, new: str) -> Process:
    """Rename free occurrences of a name (the new name must be fresh)."""
    m = {old: new}
    if isinstance(a, Nil):
        return a
    if isinstance(a, Out):
        return Out(rename_names(a.channel, m), rename_names(a.message, m), rename_name(a.cont, old, new))
    if isinstance(a, In):
        return In(rename_names(a.channel, m), a.var, rename_name(a.cont, old, new))
    if isinstance(a, New):
        if a.name == old:
            return a
        return New(a.name, rename_name(a.body, old, new))
    if isinstance(a, NewVar):
        return NewVar(a.var, rename_name(a.body, old, new))
    if isinstance(a, If):
        return If(
            rename_names(a.left, m),
            rename_names(a.right, m),
            rename_name(a.then, old, new),
            rename_name(a.else_, old, new),
        )
    if isinstance(a, Choice):
        return Choice(rename_name(a.left, old, new), rename_name(a.right, old, new))
    if isinstance(a, Par):
        return Par(rename_name(a.left, old, new), rename_name(a.right, old, new))
    if isinstance(a, Bang):
        return Bang(rename_name(a.body, old, new))
    if isinstance(a, Sub):
        return Sub(a.var, rename_names(a.term, m))
    raise TypeError(f"not a process: {a!r}")


def rename_var(a: Process, old: str, new: str) -> Process:
    """Rename a variable everywhere it occurs free, including domain positions."""
    if isinstance(a, Sub):
        return Sub(new if a.var == old else a.var, subst_term(a.term, {old: Var(new)}))
    if isinstance(a, NewVar):
        if a.var == old:
            return a
        return NewVar(a.var, rename_var(a.body, old, new))
    if isinstance(a, Par):
        return Par(rename_var(a.left, old, new), rename_var(a.right, old, new))
    if isinstance(a, New):
        return New(a.name, rename_var(a.body, old, new))
    if isinstance(a, Nil):
        return a
    if isinstance(a, Out):
        m = {old: Var(new)}
        return Out(subst_term(a.channel, m), subst_term(a.message, m), rename_var(a.cont, old, new))
    if isinstance(a, In):
        ch = subst_term(a.channel, {old: Var(new)})
        return In(ch, a.var, a.cont if a.var == old else rename_var(a.cont, old, new))
    if isinstance(a, If):
        m = {old: Var(new)}
        return If(
            subst_term(a.left, m),
            subst_term(a.right, m),
            rename_var(a.then, old, new),
            rename_var(a.else_, old, new),
        )
    if isinstance(a, Choice):
        return Choice(rename_var(a.left, old, new), rename_var(a.right, old, new))
    if isinstance(a, Bang):
        return Bang(rename_var(a.body, old, new))
    raise TypeError(f"not a process: {a!r}")


# ---------------------------------------------------------------------------
# Alpha conversion


def alpha_fresh(a: Process, avoid: Iterable[str] = ()) -> Process:
    """Alpha-variant that is name- and variable-distinct with binders outside ``avoid``.

    Binders are renamed only when needed, to ``#n<k>`` / ``#r<k>``.
    """
    avoid = set(avoid)
    report = accounting(a)
    used = all_identifiers(a) | avoid
    taken_names = set(report.fn) | avoid
    taken_vars = set(report.fv) | avoid
    return _alpha(a, taken_names, taken_vars, used)


def _alpha(a: Process, taken_names: set[str], taken_vars: set[str], used: set[str]) -> Process:
    if isinstance(a, New):
        name, body = a.name, a.body
        if name in taken_names:
            new = fresh_identifier("#n", used)
            body = rename_name(body, name, new)
            name = new
        taken_names.add(name)
        return New(name, _alpha(body, taken_names, taken_vars, used))
    if isinstance(a, NewVar):
        var, body = a.var, a.body
        if var in taken_vars:
            new = fresh_identifier("#r", used)
            body = rename_var(body, var, new)
            var = new
        taken_vars.add(var)
        return NewVar(var, _alpha(body, taken_names, taken_vars, used))
    if isinstance(a, Out):
        return Out(a.channel, a.message, _alpha(a.cont, taken_names, taken_vars, used))
    if isinstance(a, In):
        return In(a.channel, a.var, _alpha(a.cont, taken_names, taken_vars, used))
    if isinstance(a, If):
        return If(
            a.left,
            a.right,
            _alpha(a.then, taken_names, taken_vars, used),
            _alpha(a.else_, taken_names, taken_vars, used),
        )
    if isinstance(a, Choice):
        return Choice(_alpha(a.left, taken_names, taken_vars, used), _alpha(a.right, taken_names, taken_vars, used))
    if isinstance(a, Par):
        return Par(_alpha(a.left, taken_names, taken_vars, used), _alpha(a.right, taken_names, taken_vars, used))
    if isinstance(a, Bang):
        return Bang(_alpha(a.body, taken_names, taken_vars, used))
    return a


# ---------------------------------------------------------------------------
# Substitutions: cycle-freeness, composition, partial normal form


def cycle_free_check(subst: Mapping[str, Term]) -> list[str] | None:
    """Order the domain so each image only uses variables defined earlier.

    Returns the order (dependencies first) or ``None`` when the
    substitution is cyclic.
    """
    dom = set(subst)
    deps = {x: set(term_vars(m)) & dom for x, m in subst.items()}
    order: list[str] = []
    done: set[str] = set()
    remaining = sorted(dom)
    while remaining:
        ready = [x for x in remaining if deps[x] <= done]
        if not ready:
            return None
        x = ready[0]
        order.append(x)
        done.add(x)
        remaining.remove(x)
    return order


def uplus(sigma: Mapping[str, Term], rho: Mapping[str, Term]) -> dict[str, Term]:
    """Compose two active substitutions into a fully applied one."""
    clash = set(sigma) & set(rho)
    if clash:
        raise DomainClash(f"substitutions share domain variables {sorted(clash)}")
    combined = {**sigma, **rho}
    order = cycle_free_check(combined)
    if order is None:
        raise Cyclic(f"substitution over {sorted(combined)} is cyclic")
    resolved: dict[str, Term] = {}
    for x in order:
        resolved[x] = subst_term(combined[x], resolved)
    return {x: resolved[x] for x in sorted(resolved)}


@dataclass(frozen=True)
class PartialNormalForm:
    names: tuple[str, ...]
    subst: dict
    plain: Process

    def to_process(self) -> Process:
        return news(self.names, par(subst_process(self.subst), self.plain))


def pnf(a: Process) -> PartialNormalForm:
    """Partial normal form nu n~.(sigma | P) with P plain.

    The input should be name/variable distinct (see alpha_fresh).
    """
    if isinstance(a, Sub):
        return PartialNormalForm((), {a.var: a.term}, NIL)
    if isinstance(a, New):
        inner = pnf(a.body)
        return PartialNormalForm((a.name,) + inner.names, inner.subst, inner.plain)
    if isinstance(a, NewVar):
        inner = pnf(a.body)
        return PartialNormalForm(inner.names, {k: v for k, v in inner.subst.items() if k != a.var}, inner.plain)
    if isinstance(a, Par):
        left, right = pnf(a.left), pnf(a.right)
        combined = uplus(left.subst, right.subst)
        plain = substitute(par(left.plain, right.plain), combined)
        return PartialNormalForm(left.names + right.names, combined, plain)
    return PartialNormalForm((), {}, a)
