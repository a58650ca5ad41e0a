"""Pretty-printers for terms, processes and formulas.

The output is accepted by :mod:`tracepi.parser`; parse(print(x)) == x on
canonical forms.  Unary process forms (prefixes, ``new``, ``!``, ``if``)
bind tighter than ``+``, which binds tighter than ``|``.
"""

from __future__ import annotations

from .terms import Term


def format_term(t: Term) -> str:
    return str(t)


def _unit(p) -> str:
    """Render at prefix level, parenthesizing sums and compositions."""
    from .process import Choice, Par

    text = format_process(p)
    return f"({text})" if isinstance(p, (Choice, Par)) else text


def _cont(p) -> str:
    from .process import Nil

    return "" if isinstance(p, Nil) else "." + _unit(p)


def _open_if(p) -> bool:
    """Whether p prints ending in an else-less if, which would capture a following else."""
    from .process import Bang, If, In, New, NewVar, Nil, Out

    while True:
        if isinstance(p, (Out, In)):
            p = p.cont
        elif isinstance(p, (New, NewVar, Bang)):
            p = p.body
        elif isinstance(p, If):
            if isinstance(p.else_, Nil):
                return True
            p = p.else_
        else:
            return False


def format_process(p) -> str:
    from .process import Bang, Choice, If, In, New, NewVar, Nil, Out, Par, Sub

    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Out):
        return f"out({p.channel}, {p.message}){_cont(p.cont)}"
    if isinstance(p, In):
        return f"in({p.channel}, {p.var}){_cont(p.cont)}"
    if isinstance(p, (New, NewVar)):
        binders = []
        while isinstance(p, (New, NewVar)):
            binders.append(p.name if isinstance(p, New) else p.var)
            p = p.body
        return f"new {', '.join(binders)}. {_unit(p)}"
    if isinstance(p, If):
        wrap = isinstance(p.then, If) or (not isinstance(p.else_, Nil) and _open_if(p.then))
        then = f"({format_process(p.then)})" if wrap else _unit(p.then)
        text = f"if {p.left} = {p.right} then {then}"
        if not isinstance(p.else_, Nil):
            text += f" else {_unit(p.else_)}"
        return text
    if isinstance(p, Choice):
        right = format_process(p.right) if isinstance(p.right, Choice) else _unit(p.right)
        return f"{_unit(p.left)} + {right}"
    if isinstance(p, Par):
        left = format_process(p.left)
        if isinstance(p.left, Par):
            left = f"({left})"
        return f"{left} | {format_process(p.right)}"
    if isinstance(p, Bang):
        return f"!{_unit(p.body)}"
    if isinstance(p, Sub):
        return f"{{{p.term}/{p.var}}}"
    raise TypeError(f"not a process: {p!r}")


def format_action(a) -> str:
    from .semantics import AliasOut, Input, Silent

    if isinstance(a, Silent):
        return "tau"
    if isinstance(a, Input):
        return f"in({a.channel}, {a.payload})"
    if isinstance(a, AliasOut):
        return f"out({a.channel}, {a.alias})"
    raise TypeError(f"not an action: {a!r}")


def format_formula(f) -> str:
    from . import logic as L

    if isinstance(f, L.Top):
        return "true"
    if isinstance(f, L.Eq):
        return f"{f.left} = {f.right}"
    if isinstance(f, L.InDom):
        return f"{f.term} in dom"
    if isinstance(f, L.Not):
        g = f.body
        if isinstance(g, L.Top):
            return "false"
        if isinstance(g, L.Eq):
            return f"{g.left} != {g.right}"
        if isinstance(g, L.Future) and isinstance(g.body, L.Not):
            return f"G {_funit(g.body.body)}"
        if isinstance(g, L.Knows) and isinstance(g.body, L.Not):
            return f"P {_funit(g.body.body)}"
        if isinstance(g, L.Or) and isinstance(g.left, L.Not) and isinstance(g.right, L.Not):
            return f"({format_formula(g.left.body)} and {format_formula(g.right.body)})"
        return f"not {_funit(g)}"
    if isinstance(f, L.Or):
        if isinstance(f.left, L.Not) and not _is_and(f.left.body) and not isinstance(f.left.body, L.Top):
            return f"({format_formula(f.left.body)} -> {format_formula(f.right)})"
        return f"({format_formula(f.left)} or {format_formula(f.right)})"
    if isinstance(f, L.Prev):
        return f"<{format_action(f.action)}>- {_funit(f.body)}"
    if isinstance(f, L.Future):
        return f"F {_funit(f.body)}"
    if isinstance(f, L.Knows):
        return f"K {_funit(f.body)}"
    raise TypeError(f"not a formula: {f!r}")


def _is_and(g) -> bool:
    from . import logic as L

    return isinstance(g, L.Or) and isinstance(g.left, L.Not) and isinstance(g.right, L.Not)


def _funit(f) -> str:
    from . import logic as L

    text = format_formula(f)
    if isinstance(f, (L.Eq, L.InDom)) or (isinstance(f, L.Not) and isinstance(f.body, L.Eq)):
        return f"({text})"
    return text
