"""Terms over a signature and equality modulo a convergent subterm theory.

Terms are immutable and hash-consed lazily: every node caches its hash,
size and sort key, so they can be used freely as dictionary keys by the
semantics engine.  Names and variables live in disjoint classes.

The only extension beyond subterm rules is the Diffie-Hellman hook
``comm f via g``: after rewriting, ``f(A, g(B))`` is reoriented so that the
smaller of ``A``/``B`` (in the total term order) comes first, which
realises ``f(x, g(y)) = f(y, g(x))`` as a canonical form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import ArityMismatch, NotSubterm, TheoryError, UnknownSymbol

_NAME, _VAR, _APP = 0, 1, 2


class Term:
    __slots__ = ("_hash",)

    size: int

    def key(self) -> tuple:
        raise NotImplementedError

    def __lt__(self, other: "Term") -> bool:
        return self.key() < other.key()

    def __le__(self, other: "Term") -> bool:
        return self.key() <= other.key()

    def __hash__(self) -> int:
        return self._hash


class Name(Term):
    __slots__ = ("id",)
    size = 1

    def __init__(self, id: str):
        self.id = id
        self._hash = hash((_NAME, id))

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (type(other) is Name and other.id == self.id)

    def key(self) -> tuple:
        return (1, _NAME, self.id, ())

    def __repr__(self) -> str:
        return f"Name({self.id!r})"

    def __str__(self) -> str:
        return self.id


class Var(Term):
    __slots__ = ("id",)
    size = 1

    def __init__(self, id: str):
        self.id = id
        self._hash = hash((_VAR, id))

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        return self is other or (type(other) is Var and other.id == self.id)

    def key(self) -> tuple:
        return (1, _VAR, self.id, ())

    def __repr__(self) -> str:
        return f"Var({self.id!r})"

    def __str__(self) -> str:
        return self.id


class App(Term):
    __slots__ = ("symbol", "args", "size", "_key", "_names", "_vars")

    def __init__(self, symbol: str, args: Iterable[Term] = ()):
        self.symbol = symbol
        self.args = tuple(args)
        size = 1
        for a in self.args:
            size += a.size
        self.size = size
        self._hash = hash((_APP, symbol, self.args))
        self._key = None
        self._names = None
        self._vars = None

    __hash__ = Term.__hash__

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        return (
            type(other) is App
            and self._hash == other._hash
            and self.symbol == other.symbol
            and self.args == other.args
        )

    def key(self) -> tuple:
        if self._key is None:
            self._key = (self.size, _APP, self.symbol, tuple(a.key() for a in self.args))
        return self._key

    def __repr__(self) -> str:
        return f"App({self.symbol!r}, {list(self.args)!r})"

    def __str__(self) -> str:
        return f"{self.symbol}({', '.join(str(a) for a in self.args)})"


def term_names(t: Term) -> frozenset[str]:
    if type(t) is Name:
        return frozenset((t.id,))
    if type(t) is Var:
        return frozenset()
    if t._names is None:
        t._names = frozenset().union(*(term_names(a) for a in t.args))
    return t._names


def term_vars(t: Term) -> frozenset[str]:
    if type(t) is Var:
        return frozenset((t.id,))
    if type(t) is Name:
        return frozenset()
    if t._vars is None:
        t._vars = frozenset().union(*(term_vars(a) for a in t.args))
    return t._vars


def is_ground(t: Term) -> bool:
    return not term_vars(t)


def subterms(t: Term) -> Iterator[Term]:
    """Pre-order traversal, the term itself first."""
    yield t
    if type(t) is App:
        for a in t.args:
            yield from subterms(a)


@dataclass(frozen=True)
class TermMeta:
    names: frozenset[str]
    vars: frozenset[str]
    ground: bool
    subterms: tuple[Term, ...]


def term_meta(t: Term) -> TermMeta:
    vs = term_vars(t)
    return TermMeta(term_names(t), vs, not vs, tuple(subterms(t)))


def substitute(t: Term, mapping: Mapping[str, Term]) -> Term:
    """Replace variables by terms (simultaneously)."""
    if not mapping:
        return t
    if type(t) is Var:
        return mapping.get(t.id, t)
    if type(t) is Name:
        return t
    if not (term_vars(t) & mapping.keys()):
        return t
    return App(t.symbol, [substitute(a, mapping) for a in t.args])


def rename_names(t: Term, mapping: Mapping[str, str]) -> Term:
    if not mapping:
        return t
    if type(t) is Name:
        new = mapping.get(t.id)
        return t if new is None else Name(new)
    if type(t) is Var:
        return t
    if not (term_names(t) & mapping.keys()):
        return t
    return App(t.symbol, [rename_names(a, mapping) for a in t.args])


def replace_names(t: Term, mapping: Mapping[str, Term]) -> Term:
    """Replace names by arbitrary terms."""
    if not mapping:
        return t
    if type(t) is Name:
        return mapping.get(t.id, t)
    if type(t) is Var:
        return t
    if not (term_names(t) & mapping.keys()):
        return t
    return App(t.symbol, [replace_names(a, mapping) for a in t.args])


def match(pattern: Term, t: Term, binding: dict | None = None) -> dict | None:
    """Syntactic matching of a rule pattern (variables bind, names are literal)."""
    binding = {} if binding is None else binding
    stack = [(pattern, t)]
    while stack:
        p, u = stack.pop()
        if type(p) is Var:
            bound = binding.get(p.id)
            if bound is None:
                binding[p.id] = u
            elif bound != u:
                return None
        elif type(p) is Name:
            if p != u:
                return None
        else:
            if type(u) is not App or u.symbol != p.symbol or len(u.args) != len(p.args):
                return None
            stack.extend(zip(p.args, u.args))
    return binding


@dataclass(frozen=True)
class Signature:
    """Function symbols with arities, plus Diffie-Hellman style commutation flags."""

    symbols: tuple[tuple[str, int], ...] = ()
    comm: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, symbols: Mapping[str, int] | Iterable[tuple[str, int]] = (), comm=()) -> "Signature":
        items = list(symbols.items()) if isinstance(symbols, Mapping) else list(symbols)
        seen = set()
        for name, arity in items:
            if name in seen:
                raise TheoryError(f"duplicate declaration of symbol {name!r}")
            if arity < 0:
                raise TheoryError(f"negative arity for {name!r}")
            seen.add(name)
        return cls(tuple(items), tuple(comm))

    @property
    def arities(self) -> dict[str, int]:
        return dict(self.symbols)

    def arity(self, symbol: str) -> int:
        for name, arity in self.symbols:
            if name == symbol:
                return arity
        raise UnknownSymbol(f"unknown function symbol {symbol!r}")

    def check_term(self, t: Term) -> None:
        ar = self.arities
        for s in subterms(t):
            if type(s) is App:
                if s.symbol not in ar:
                    raise UnknownSymbol(f"unknown function symbol {s.symbol!r}")
                if ar[s.symbol] != len(s.args):
                    raise ArityMismatch(
                        f"{s.symbol} expects {ar[s.symbol]} arguments, got {len(s.args)}"
                    )


def _is_proper_subterm(small: Term, big: Term) -> bool:
    if type(big) is not App:
        return False
    return any(small == s for a in big.args for s in subterms(a))


@dataclass(frozen=True, eq=False)
class RewriteSystem:
    """A validated convergent subterm rewrite system (optionally with DH hooks)."""

    signature: Signature
    rules: tuple[tuple[Term, Term], ...] = ()
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _by_symbol: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for lhs, rhs in self.rules:
            self._by_symbol.setdefault(lhs.symbol, []).append((lhs, rhs))

    @property
    def comm(self) -> dict[str, str]:
        return dict(self.signature.comm)

    @property
    def max_lhs_depth(self) -> int:
        return max((_depth(lhs) for lhs, _ in self.rules), default=0)

    def normalize(self, t: Term) -> Term:
        if type(t) is not App:
            return t
        cache = self._cache
        hit = cache.get(t)
        if hit is not None:
            return hit
        args = tuple(self.normalize(a) for a in t.args)
        u = t if all(x is y for x, y in zip(args, t.args)) else App(t.symbol, args)
        result = None
        for lhs, rhs in self._by_symbol.get(u.symbol, ()):
            b = match(lhs, u)
            if b is not None:
                result = substitute(rhs, b)
                break
        if result is None:
            result = self._reorient(u)
        if len(cache) > 200_000:
            cache.clear()
        cache[t] = result
        cache[result] = result
        return result

    def compose(self, symbol: str, args: tuple[Term, ...]) -> Term:
        """Normal form of symbol(args) for arguments already in normal form."""
        if self.signature.comm:
            return self.normalize(App(symbol, args))
        rules = self._by_symbol.get(symbol)
        if not rules:
            return App(symbol, args)
        for lhs, rhs in rules:
            b: dict | None = {}
            for p, a in zip(lhs.args, args):
                if type(p) is App and (type(a) is not App or a.symbol != p.symbol):
                    break
                b = match(p, a, b)
                if b is None:
                    break
            else:
                # the instance is a subterm of normal arguments, hence normal
                return substitute(rhs, b)
        return App(symbol, args)

    def _reorient(self, u: App) -> Term:
        for f, g in self.signature.comm:
            if u.symbol != f or len(u.args) != 2:
                continue
            first, second = u.args
            if type(second) is App and second.symbol == g and len(second.args) == 1:
                inner = second.args[0]
                if inner.key() < first.key():
                    return App(f, (inner, self.normalize(App(g, (first,)))))
        return u

    def equal(self, m: Term, n: Term) -> bool:
        return self.normalize(m) == self.normalize(n)

    def __hash__(self) -> int:
        return id(self)

    def __eq__(self, other) -> bool:
        return self is other


def _depth(t: Term) -> int:
    if type(t) is not App:
        return 0
    return 1 + max((_depth(a) for a in t.args), default=0)


def app_depth(t: Term) -> int:
    """Nesting depth of function applications (atoms have depth 0)."""
    return _depth(t)


def check_subterm_convergent(rules: Iterable[tuple[Term, Term]], sig: Signature) -> RewriteSystem:
    """Validate rules syntactically and build the rewrite system."""
    rules = tuple(rules)
    for index, (lhs, rhs) in enumerate(rules):
        if type(lhs) is not App:
            raise NotSubterm(index, f"rule {index}: left-hand side must not be a variable or name")
        sig.check_term(lhs)
        sig.check_term(rhs)
        if not term_vars(rhs) <= term_vars(lhs):
            raise NotSubterm(index, f"rule {index}: right-hand side has variables not in the left-hand side")
        if not _is_proper_subterm(rhs, lhs):
            raise NotSubterm(index)
    for f, g in sig.comm:
        if sig.arity(f) != 2 or sig.arity(g) != 1:
            raise TheoryError(f"comm {f} via {g}: needs {f}/2 and {g}/1")
    return RewriteSystem(sig, rules)


def normalize(t: Term, rs: RewriteSystem) -> Term:
    return rs.normalize(t)


def eq_mod_e(m: Term, n: Term, rs: RewriteSystem) -> bool:
    return rs.normalize(m) == rs.normalize(n)


FREE_ALGEBRA = RewriteSystem(Signature())
