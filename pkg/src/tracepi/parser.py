"""Concrete syntax for theories, processes and formulas.

Theory declarations::

    fun enc/2. fun dec/2.
    reduc dec(enc(X,K),K) -> X.
    comm f via g.

Processes (``|`` binds loosest, then ``+``, then prefixes)::

    new a, kA. out(c, g(a)). in(d, x). {f(a,x)/kA}
    if x = a then out(c, s) else out(d, s)

A process file may start with theory declarations and with ``var`` /
``name`` declarations.  An identifier is a variable when it is bound by an
input, is the target of an active substitution, is declared with ``var``,
or (if free and undeclared) starts with x, y, z or w.  Everything else is a
name.  ``new u`` restricts a variable exactly when ``u`` is the target of
an active substitution in its scope.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import ArityMismatch, Cyclic, DomainClash, ParseError, TheoryError, UnknownSymbol
from .process import (
    NIL,
    Bang,
    Choice,
    If,
    In,
    New,
    NewVar,
    Out,
    Par,
    Process,
    Sub,
    accounting,
    alpha_fresh,
    cycle_free_check,
    pnf,
)
from .terms import App, Name, RewriteSystem, Signature, Term, Var, check_subterm_convergent

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|\(\*.*?\*\)|//[^\n]*)
  | (?P<ident>\#?[A-Za-z_][A-Za-z0-9_']*)
  | (?P<int>\d+)
  | (?P<op>->|!=|[()\[\]{},./|+!=<>\-])
    """,
    re.VERBOSE | re.DOTALL,
)

VAR_PREFIXES = ("x", "y", "z", "w")
PROCESS_KEYWORDS = {"new", "out", "in", "if", "then", "else", "fun", "reduc", "comm", "via", "var", "name"}
FORMULA_KEYWORDS = {"true", "false", "not", "or", "and", "in", "dom", "G", "F", "K", "P", "tau", "out"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str, allow_reserved: bool = False) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        value = m.group(0)
        if kind != "ws":
            col = pos - line_start + 1
            if kind == "ident" and value.startswith("#") and not allow_reserved:
                raise ParseError(f"identifiers starting with '#' are reserved: {value}", line, col)
            tokens.append(Token(kind, value, line, col))
        nl = value.count("\n")
        if nl:
            line += nl
            line_start = pos + value.rfind("\n") + 1
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Stream:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def at(self, *texts: str) -> bool:
        t = self.tok
        return t.kind in ("op", "ident") and t.text in texts

    def next(self) -> Token:
        t = self.tok
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.tok
        if t.text != text or t.kind == "eof":
            self.error(f"expected {text!r}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def ident(self, what: str = "identifier") -> Token:
        t = self.tok
        if t.kind != "ident":
            self.error(f"expected {what}, found {t.text or 'end of input'!r}")
        self.i += 1
        return t

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(message, tok.line, tok.col)


# ---------------------------------------------------------------------------
# Raw syntax (identifiers unresolved)


@dataclass(frozen=True)
class RawId:
    name: str
    tok: Token = field(compare=False, hash=False, repr=False)


@dataclass(frozen=True)
class RawApp:
    symbol: str
    args: tuple
    tok: Token = field(compare=False, hash=False, repr=False)


def _raw_term(st: _Stream, arities: dict[str, int] | None):
    tok = st.ident("term")
    if tok.text in PROCESS_KEYWORDS - {"var", "name"}:
        st.error(f"keyword {tok.text!r} cannot be used as a term", tok)
    if st.at("("):
        st.next()
        args = []
        if not st.at(")"):
            args.append(_raw_term(st, arities))
            while st.at(","):
                st.next()
                args.append(_raw_term(st, arities))
        st.expect(")")
        return RawApp(tok.text, tuple(args), tok)
    if arities is not None and arities.get(tok.text) == 0:
        return RawApp(tok.text, (), tok)
    return RawId(tok.text, tok)


def _check_app(raw: RawApp, arities: dict[str, int] | None) -> None:
    if arities is None:
        return
    if raw.symbol not in arities:
        raise UnknownSymbol(f"unknown function symbol {raw.symbol!r} at {raw.tok.line}:{raw.tok.col}")
    if arities[raw.symbol] != len(raw.args):
        raise ArityMismatch(
            f"{raw.symbol} expects {arities[raw.symbol]} arguments, got {len(raw.args)}"
            f" at {raw.tok.line}:{raw.tok.col}"
        )


# ---------------------------------------------------------------------------
# Theories


@dataclass
class Declarations:
    symbols: list = field(default_factory=list)
    rules: list = field(default_factory=list)
    comm: list = field(default_factory=list)
    variables: set = field(default_factory=set)
    names: set = field(default_factory=set)

    def arities(self) -> dict[str, int]:
        return dict(self.symbols)


def _parse_declarations(st: _Stream, decls: Declarations) -> None:
    while st.tok.kind == "ident" and st.tok.text in ("fun", "reduc", "comm", "var", "name"):
        kw = st.next()
        if kw.text == "fun":
            name = st.ident("function symbol")
            st.expect("/")
            num = st.tok
            if num.kind != "int":
                st.error("expected arity")
            st.next()
            if name.text in dict(decls.symbols):
                raise TheoryError(f"duplicate declaration of symbol {name.text!r} at {name.line}:{name.col}")
            decls.symbols.append((name.text, int(num.text)))
        elif kw.text == "reduc":
            ar = decls.arities()
            lhs = _rule_term(_raw_term(st, ar), ar)
            st.expect("->")
            rhs = _rule_term(_raw_term(st, ar), ar)
            decls.rules.append((lhs, rhs))
        elif kw.text == "comm":
            f = st.ident("function symbol")
            via = st.ident("'via'")
            if via.text != "via":
                st.error("expected 'via'", via)
            g = st.ident("function symbol")
            decls.comm.append((f.text, g.text))
        else:
            target = decls.variables if kw.text == "var" else decls.names
            target.add(st.ident().text)
            while st.at(","):
                st.next()
                target.add(st.ident().text)
        st.expect(".")


def _rule_term(raw, arities) -> Term:
    if isinstance(raw, RawId):
        return Var(raw.name)
    _check_app(raw, arities)
    return App(raw.symbol, [_rule_term(a, arities) for a in raw.args])


def _theory_of(decls: Declarations) -> RewriteSystem:
    sig = Signature.of(decls.symbols, decls.comm)
    for f, g in decls.comm:
        for s in (f, g):
            if s not in sig.arities:
                raise UnknownSymbol(f"comm mentions undeclared symbol {s!r}")
    return check_subterm_convergent(decls.rules, sig)


def parse_theory(text: str) -> tuple[Signature, RewriteSystem]:
    st = _Stream(tokenize(text))
    decls = Declarations()
    _parse_declarations(st, decls)
    if st.tok.kind != "eof":
        st.error(f"unexpected {st.tok.text!r} in theory")
    rs = _theory_of(decls)
    return rs.signature, rs


# ---------------------------------------------------------------------------
# Processes


@dataclass(frozen=True)
class _RP:
    """Raw process node."""

    kind: str
    parts: tuple
    tok: Token = field(compare=False, hash=False, repr=False, default=None)


def _raw_process(st: _Stream, ar) -> _RP:
    items = [_raw_choice(st, ar)]
    while st.at("|"):
        st.next()
        items.append(_raw_choice(st, ar))
    return _nest("par", items)


def _nest(kind: str, items: list) -> _RP:
    result = items[-1]
    for it in reversed(items[:-1]):
        result = _RP(kind, (it, result))
    return result


def _raw_choice(st: _Stream, ar) -> _RP:
    items = [_raw_unit(st, ar)]
    while st.at("+"):
        st.next()
        items.append(_raw_unit(st, ar))
    return _nest("choice", items)


def _raw_cont(st: _Stream, ar) -> _RP:
    if st.at("."):
        st.next()
        return _raw_unit(st, ar)
    return _RP("nil", ())


def _raw_unit(st: _Stream, ar) -> _RP:
    tok = st.tok
    if tok.kind == "int" and tok.text == "0":
        st.next()
        return _RP("nil", (), tok)
    if st.at("("):
        st.next()
        p = _raw_process(st, ar)
        st.expect(")")
        return p
    if st.at("!"):
        st.next()
        return _RP("bang", (_raw_unit(st, ar),), tok)
    if st.at("{"):
        st.next()
        term = _raw_term(st, ar)
        st.expect("/")
        var = st.ident("variable")
        st.expect("}")
        return _RP("sub", (term, var.text), tok)
    if tok.kind == "ident" and tok.text == "new":
        st.next()
        binders = [st.ident("name or variable")]
        while st.at(","):
            st.next()
            binders.append(st.ident("name or variable"))
        st.expect(".")
        body = _raw_unit(st, ar)
        for b in reversed(binders):
            body = _RP("new", (b.text, body), b)
        return body
    if tok.kind == "ident" and tok.text == "out" and st.peek().text == "(":
        st.next()
        st.expect("(")
        ch = _raw_term(st, ar)
        st.expect(",")
        msg = _raw_term(st, ar)
        st.expect(")")
        return _RP("out", (ch, msg, _raw_cont(st, ar)), tok)
    if tok.kind == "ident" and tok.text == "in" and st.peek().text == "(":
        st.next()
        st.expect("(")
        ch = _raw_term(st, ar)
        st.expect(",")
        var = st.ident("variable")
        st.expect(")")
        return _RP("in", (ch, var.text, _raw_cont(st, ar)), tok)
    if tok.kind == "ident" and tok.text == "if":
        st.next()
        left = _raw_term(st, ar)
        st.expect("=")
        right = _raw_term(st, ar)
        kw = st.ident("'then'")
        if kw.text != "then":
            st.error("expected 'then'", kw)
        then = _raw_unit(st, ar)
        else_ = _RP("nil", ())
        if st.tok.kind == "ident" and st.tok.text == "else":
            st.next()
            else_ = _raw_unit(st, ar)
        return _RP("if", (left, right, then, else_), tok)
    st.error(f"expected a process, found {tok.text or 'end of input'!r}")


def _sub_targets(p: _RP) -> set[str]:
    out: set[str] = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if q.kind == "sub":
            out.add(q.parts[1])
        for part in q.parts:
            if isinstance(part, _RP):
                stack.append(part)
    return out


class _Resolver:
    def __init__(self, arities, declared_vars, declared_names, global_vars):
        self.arities = arities
        self.declared_vars = declared_vars
        self.declared_names = declared_names
        self.global_vars = global_vars

    def is_var(self, ident: str, env: dict) -> bool:
        if ident in env:
            return env[ident] == "var"
        if ident in self.declared_vars or ident in self.global_vars:
            return True
        if ident in self.declared_names:
            return False
        return ident.startswith(VAR_PREFIXES) or ident.startswith("#x")

    def term(self, raw, env: dict) -> Term:
        if isinstance(raw, RawId):
            return Var(raw.name) if self.is_var(raw.name, env) else Name(raw.name)
        _check_app(raw, self.arities)
        return App(raw.symbol, [self.term(a, env) for a in raw.args])

    def process(self, p: _RP, env: dict) -> Process:
        k, parts = p.kind, p.parts
        if k == "nil":
            return NIL
        if k == "par":
            return Par(self.process(parts[0], env), self.process(parts[1], env))
        if k == "choice":
            return Choice(self.process(parts[0], env), self.process(parts[1], env))
        if k == "bang":
            return Bang(self.process(parts[0], env))
        if k == "sub":
            return Sub(parts[1], self.term(parts[0], env))
        if k == "out":
            return Out(self.term(parts[0], env), self.term(parts[1], env), self.process(parts[2], env))
        if k == "in":
            inner = {**env, parts[1]: "var"}
            return In(self.term(parts[0], env), parts[1], self.process(parts[2], inner))
        if k == "if":
            return If(
                self.term(parts[0], env),
                self.term(parts[1], env),
                self.process(parts[2], env),
                self.process(parts[3], env),
            )
        if k == "new":
            ident, body = parts
            if ident in _sub_targets(body):
                return NewVar(ident, self.process(body, {**env, ident: "var"}))
            return New(ident, self.process(body, {**env, ident: "name"}))
        raise AssertionError(k)


@dataclass
class Program:
    """A parsed process file: theory, declarations and the process itself."""

    rs: RewriteSystem
    process: Process
    variables: frozenset[str] = frozenset()
    names: frozenset[str] = frozenset()


def _check_wellformed(p: Process) -> None:
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Par):
            clash = accounting(q.left).dom & accounting(q.right).dom
            if clash:
                raise DomainClash(f"parallel components both define {sorted(clash)}")
            stack.extend((q.left, q.right))
        elif isinstance(q, (New, NewVar, Bang)):
            stack.append(q.body)
        elif isinstance(q, Choice):
            stack.extend((q.left, q.right))
        elif isinstance(q, If):
            stack.extend((q.then, q.else_))
        elif isinstance(q, (Out, In)):
            stack.append(q.cont)
    report = accounting(p)
    form = pnf(alpha_fresh(p, report.fn | report.fv))
    if cycle_free_check(form.subst) is None:
        raise Cyclic("active substitutions are cyclic")


def parse_program(text: str, rs: RewriteSystem | None = None) -> Program:
    """Parse optional declarations followed by a process."""
    st = _Stream(tokenize(text))
    decls = Declarations()
    if rs is not None:
        decls.symbols = list(rs.signature.symbols)
        decls.rules = list(rs.rules)
        decls.comm = list(rs.signature.comm)
    n_before = (len(decls.symbols), len(decls.rules), len(decls.comm))
    _parse_declarations(st, decls)
    if rs is None or (len(decls.symbols), len(decls.rules), len(decls.comm)) != n_before:
        rs = _theory_of(decls)
    raw = _raw_process(st, rs.signature.arities)
    if st.tok.kind != "eof":
        st.error(f"unexpected {st.tok.text!r} after process")
    resolver = _Resolver(rs.signature.arities, decls.variables, decls.names, _sub_targets(raw))
    proc = resolver.process(raw, {})
    _check_wellformed(proc)
    return Program(rs, proc, frozenset(decls.variables), frozenset(decls.names))


def parse_process(text: str, theory: Signature | RewriteSystem | None = None) -> Process:
    if isinstance(theory, Signature):
        theory = RewriteSystem(theory)
    return parse_program(text, theory).process


def parse_term(
    text: str, theory: Signature | RewriteSystem | None = None, variables=(), allow_reserved: bool = True
) -> Term:
    arities = _arities(theory)
    st = _Stream(tokenize(text, allow_reserved=allow_reserved))
    raw = _raw_term(st, arities)
    if st.tok.kind != "eof":
        st.error(f"unexpected {st.tok.text!r} after term")
    return _Resolver(arities, set(variables), set(), set()).term(raw, {})


def _arities(theory) -> dict[str, int] | None:
    if theory is None:
        return None
    if isinstance(theory, RewriteSystem):
        theory = theory.signature
    return theory.arities


# ---------------------------------------------------------------------------
# Formulas


def _formula_term(st: _Stream, fp: "_FormulaParser"):
    return fp.resolver.term(_raw_term(st, fp.arities), {})


class _FormulaParser:
    def __init__(self, st: _Stream, arities, variables, static_only: bool):
        self.st = st
        self.arities = arities
        self.resolver = _Resolver(arities, set(variables), set(), set())
        self.static_only = static_only

    def modal(self, tok: Token, what: str) -> None:
        if self.static_only:
            from .errors import StaticContextViolation

            raise StaticContextViolation(f"{what} not allowed in a static formula at {tok.line}:{tok.col}")

    def imp(self):
        from . import logic as L

        left = self.disj()
        if self.st.at("->"):
            self.st.next()
            right = self.imp()
            return L.Or(L.Not(left), right)
        return left

    def disj(self):
        from . import logic as L

        f = self.conj()
        while self.st.tok.kind == "ident" and self.st.tok.text == "or":
            self.st.next()
            f = L.Or(f, self.conj())
        return f

    def conj(self):
        from . import logic as L

        f = self.unary()
        while self.st.tok.kind == "ident" and self.st.tok.text == "and":
            self.st.next()
            g = self.unary()
            f = L.Not(L.Or(L.Not(f), L.Not(g)))
        return f

    def unary(self):
        from . import logic as L

        st = self.st
        tok = st.tok
        if tok.kind == "ident" and tok.text == "not":
            st.next()
            return L.Not(self.unary())
        if tok.kind == "ident" and tok.text in ("G", "F", "K", "P"):
            st.next()
            self.modal(tok, tok.text)
            body = self.unary()
            if tok.text == "F":
                return L.Future(body)
            if tok.text == "K":
                return L.Knows(body)
            if tok.text == "G":
                return L.Not(L.Future(L.Not(body)))
            return L.Not(L.Knows(L.Not(body)))
        if st.at("<"):
            st.next()
            self.modal(tok, "<action>-")
            action = self.action()
            st.expect(">")
            st.expect("-")
            return L.Prev(action, self.unary())
        return self.atom()

    def action(self):
        from .semantics import TAU, AliasOut, Input

        st = self.st
        tok = st.ident("action")
        if tok.text == "tau":
            return TAU
        if tok.text not in ("in", "out"):
            st.error("expected in(...), out(...) or tau", tok)
        st.expect("(")
        ch = _formula_term(st, self)
        st.expect(",")
        if tok.text == "out":
            alias = st.ident("alias variable")
            st.expect(")")
            return AliasOut(ch, alias.text)
        payload = _formula_term(st, self)
        st.expect(")")
        return Input(ch, payload)

    def atom(self):
        from . import logic as L

        st = self.st
        tok = st.tok
        if tok.kind == "ident" and tok.text == "true":
            st.next()
            return L.Top()
        if tok.kind == "ident" and tok.text == "false":
            st.next()
            return L.Not(L.Top())
        if st.at("("):
            st.next()
            f = self.imp()
            st.expect(")")
            return f
        if tok.kind != "ident" or tok.text in FORMULA_KEYWORDS - {"in", "out"}:
            st.error(f"expected a formula, found {tok.text or 'end of input'!r}")
        left = _formula_term(st, self)
        if st.at("="):
            st.next()
            return L.Eq(left, _formula_term(st, self))
        if st.at("!="):
            st.next()
            return L.Not(L.Eq(left, _formula_term(st, self)))
        if st.tok.kind == "ident" and st.tok.text == "in":
            st.next()
            kw = st.ident("'dom'")
            if kw.text != "dom":
                st.error("expected 'dom'", kw)
            return L.InDom(left)
        st.error(f"expected '=', '!=' or 'in dom', found {st.tok.text or 'end of input'!r}")


def parse_formula(
    text: str,
    theory: Signature | RewriteSystem | None = None,
    variables=(),
    static: bool = False,
):
    """Parse a formula; G, P, and, ->, != and false are expanded to core constructors."""
    st = _Stream(tokenize(text, allow_reserved=True))
    fp = _FormulaParser(st, _arities(theory), variables, static)
    f = fp.imp()
    if st.tok.kind != "eof":
        st.error(f"unexpected {st.tok.text!r} after formula")
    return f


def parse_action(text: str, theory: Signature | RewriteSystem | None = None, variables=()):
    st = _Stream(tokenize(text, allow_reserved=True))
    fp = _FormulaParser(st, _arities(theory), variables, False)
    a = fp.action()
    if st.tok.kind != "eof":
        st.error(f"unexpected {st.tok.text!r} after action")
    return a


def format_program(p: Process, rs: RewriteSystem | None = None) -> str:
    """Process text with whatever declarations are needed to parse it back identically."""
    from .printer import format_process

    lines = []
    if rs is not None:
        for sym, ar in rs.signature.symbols:
            lines.append(f"fun {sym}/{ar}.")
        for lhs, rhs in rs.rules:
            lines.append(f"reduc {_rule_text(lhs)} -> {_rule_text(rhs)}.")
        for f, g in rs.signature.comm:
            lines.append(f"comm {f} via {g}.")
    report = accounting(p)
    odd_vars = sorted(v for v in report.fv if not v.startswith(VAR_PREFIXES))
    odd_names = sorted(n for n in report.fn if n.startswith(VAR_PREFIXES))
    if odd_vars:
        lines.append(f"var {', '.join(odd_vars)}.")
    if odd_names:
        lines.append(f"name {', '.join(odd_names)}.")
    lines.append(format_process(p))
    return "\n".join(lines)


def _rule_text(t: Term) -> str:
    return str(t)
