"""Security properties: minimal and total secrecy, role interchangeability, openness.

Each check returns a :class:`PropertyReport`.  Minimal secrecy and openness
are evaluated directly in the logic; total secrecy and role
interchangeability go through their trace-equivalence characterizations.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .config import JobConfig
from .equivalence import BOUNDED_EQUIVALENT, EQUIVALENT, INCONCLUSIVE, EquivVerdict, trace_equiv
from .logic import (
    Evaluator,
    Formula,
    Future,
    Knows,
    Not,
    SatVerdict,
    Top,
    always,
    conj,
    implies,
    possibly,
    satisfies,
    subst_formula,
)
from .process import Process, accounting, all_identifiers, fresh_identifier, substitute
from .semantics import Trace
from .terms import FREE_ALGEBRA, RewriteSystem, Var

HOLDS = "holds"
FAILS = "fails"
BOUNDED_HOLDS = "bounded-holds"

DIRECT = "direct-logic"
CHARACTERIZATION = "equivalence-characterization"


@dataclass
class PropertyReport:
    property: str
    target: list[str]
    verdict: str
    method: str
    counterexample: dict | None = None
    bounds: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    trace: Trace | None = field(default=None, repr=False)

    @property
    def holds(self) -> bool:
        return self.verdict in (HOLDS, BOUNDED_HOLDS)

    def to_dict(self) -> dict:
        d = {
            "property": self.property,
            "target": self.target,
            "verdict": self.verdict,
            "method": self.method,
            "bounds": self.bounds,
        }
        if self.counterexample is not None:
            d["counterexample"] = self.counterexample
        if self.notes:
            d["notes"] = self.notes
        return d


def _bounds(cfg: JobConfig) -> dict:
    d = cfg.to_dict()
    d.pop("seed", None)
    return d


def _place(delta: Formula, var: str, placeholder: str | None) -> Formula:
    """delta(x): substitute the placeholder variable, if any, by x."""
    if placeholder is None or placeholder == var:
        return delta
    return subst_formula(delta, {placeholder: Var(var)})


def _require_static(delta: Formula) -> None:
    if not delta.is_static:
        from .errors import StaticContextViolation

        raise StaticContextViolation(f"{delta} must be a static formula")


def _from_sat(v: SatVerdict, ev: Evaluator, phi: Formula, at_end: bool) -> dict | None:
    if v.holds:
        return None
    tr = v.trace
    index = len(tr) if at_end else _failing_index(ev, phi, v, tr)
    d = v.to_dict()
    d.pop("result", None)
    d["index"] = index
    d["actions"] = [str(a) for a in tr.actions]
    return d


def _failing_index(ev: Evaluator, phi: Formula, v: SatVerdict, tr: Trace) -> int:
    """For G(psi): the first position where psi fails."""
    inner = None
    if isinstance(phi, Not) and isinstance(phi.body, Future) and isinstance(phi.body.body, Not):
        inner = phi.body.body.body
    if inner is None:
        return 0
    inner = subst_formula(inner, v.extra)
    for j in range(len(tr) + 1):
        if not ev.holds(inner, v.assignment, tr, j):
            return j
    return 0


def minimal_secrecy(
    a: Process,
    x: str,
    delta: Formula,
    cfg: JobConfig | None = None,
    rs: RewriteSystem = FREE_ALGEBRA,
    placeholder: str | None = None,
) -> PropertyReport:
    """x is minimally secret w.r.t. delta in a: a |= G(delta(x) -> P(not delta(x)))."""
    cfg = cfg or JobConfig()
    _require_static(delta)
    d = _place(delta, x, placeholder)
    phi = always(implies(d, possibly(Not(d))))
    ev = Evaluator(a, rs, cfg, phi)
    v = satisfies(a, phi, cfg, rs, evaluator=ev)
    return PropertyReport(
        "minimal-secrecy", [x], v.result, DIRECT, _from_sat(v, ev, phi, False), _bounds(cfg), trace=v.trace
    )


def openness(
    a: Process,
    x: str,
    delta: Formula,
    cfg: JobConfig | None = None,
    rs: RewriteSystem = FREE_ALGEBRA,
    placeholder: str | None = None,
) -> PropertyReport:
    """x is open w.r.t. delta in a: every maximal trace ends satisfying delta(x) -> K delta(x)."""
    cfg = cfg or JobConfig()
    _require_static(delta)
    d = _place(delta, x, placeholder)
    phi = implies(d, Knows(d))
    ev = Evaluator(a, rs, cfg, phi)
    v = satisfies(a, phi, cfg, rs, at_end=True, maximal_only=True, evaluator=ev)
    notes = []
    if v.bounded:
        notes.append("maximality-bounded: traces cut at the length or replication bound are not certified maximal")
    return PropertyReport(
        "openness", [x], v.result, DIRECT, _from_sat(v, ev, phi, True), _bounds(cfg), notes, trace=v.trace
    )


def _verdict_of(ev: EquivVerdict) -> str:
    if ev.result == EQUIVALENT:
        return HOLDS
    if ev.result == BOUNDED_EQUIVALENT:
        return BOUNDED_HOLDS
    if ev.result == INCONCLUSIVE:
        return INCONCLUSIVE
    return FAILS


def _equiv_counterexample(ev: EquivVerdict) -> dict | None:
    if ev.equivalent:
        return None
    d = ev.to_dict()
    d.pop("bounds", None)
    d.pop("result", None)
    return d


def total_secrecy(
    a: Process, x: str, ys=(), cfg: JobConfig | None = None, rs: RewriteSystem = FREE_ALGEBRA
) -> PropertyReport:
    """x is totally secret in A(x, ys) iff A(x, ys) and A(x', ys) are trace equivalent."""
    cfg = cfg or JobConfig()
    rep = accounting(a)
    stray = set(ys) - rep.fv
    if stray:
        raise ValueError(f"{sorted(stray)} are not free variables of the process")
    x2 = fresh_identifier(x + "'", all_identifiers(a))
    other = substitute(a, {x: Var(x2)})
    ev = trace_equiv(a, other, cfg, rs)
    notes = [f"compared against the copy with {x} renamed to {x2}"]
    return PropertyReport(
        "total-secrecy",
        [x, *ys],
        _verdict_of(ev),
        CHARACTERIZATION,
        _equiv_counterexample(ev),
        ev.bounds,
        notes,
        trace=ev.witness,
    )


def swap_vars(a: Process, u: str, v: str) -> Process:
    """A with free variables u and v exchanged."""
    return substitute(a, {u: Var(v), v: Var(u)})


def role_formula(xs: list[str], i: int, k_delta: Formula, deltas: list[Formula], placeholder: str = "z") -> Formula:
    """G(dk(xi) -> AND_l AND_j (dj(xl) -> P(dk(xl) and dj(xi))))."""
    xi = xs[i]
    body = None
    for xl in xs:
        for dj in deltas:
            clause = implies(
                _place(dj, xl, placeholder),
                possibly(conj(_place(k_delta, xl, placeholder), _place(dj, xi, placeholder))),
            )
            body = clause if body is None else conj(body, clause)
    if body is None:
        body = Top()
    return always(implies(_place(k_delta, xi, placeholder), body))


def role_interchangeability(
    a: Process,
    i: int | str,
    k_delta: Formula | None = None,
    deltas: list[Formula] | None = None,
    cfg: JobConfig | None = None,
    rs: RewriteSystem = FREE_ALGEBRA,
    variables: list[str] | None = None,
    placeholder: str = "z",
) -> PropertyReport:
    """(x_i, delta_k) role interchangeable w.r.t. deltas in a.

    Sufficient: a is trace equivalent to every swap of x_i with another x_l.
    With two variables this is also necessary (for all deltas).  Otherwise,
    when it fails, the defining formula is checked directly for the given
    deltas.
    """
    cfg = cfg or JobConfig()
    rep = accounting(a)
    xs = list(variables) if variables is not None else sorted(rep.fv - rep.dom)
    idx = xs.index(i) if isinstance(i, str) else i
    xi = xs[idx]
    failed: EquivVerdict | None = None
    bounded = False
    swapped_with = None
    for xl in xs:
        if xl == xi:
            continue
        ev = trace_equiv(a, swap_vars(a, xi, xl), cfg, rs)
        if not ev.equivalent:
            failed, swapped_with = ev, xl
            break
        bounded = bounded or ev.result == BOUNDED_EQUIVALENT
    bounds = _bounds(cfg)
    if failed is None:
        return PropertyReport(
            "role-interchangeability", [xi], BOUNDED_HOLDS if bounded else HOLDS, CHARACTERIZATION, None, bounds
        )
    cex = _equiv_counterexample(failed)
    cex["swapped"] = [xi, swapped_with]
    notes = ["sufficient-condition-failed"]
    if k_delta is not None:
        for d in [k_delta, *(deltas or [])]:
            _require_static(d)
        phi = role_formula(xs, idx, k_delta, list(deltas or [k_delta]), placeholder)
        evaluator = Evaluator(a, rs, cfg, phi)
        v = satisfies(a, phi, cfg, rs, evaluator=evaluator)
        notes.append(f"direct check {v.result}")
        return PropertyReport(
            "role-interchangeability",
            [xi],
            v.result,
            DIRECT,
            _from_sat(v, evaluator, phi, False),
            bounds,
            notes,
            trace=v.trace,
        )
    if len(xs) == 2:
        notes.append("with two variables the swap condition is also necessary")
        return PropertyReport(
            "role-interchangeability", [xi], FAILS, CHARACTERIZATION, cex, bounds, notes, trace=failed.witness
        )
    notes.append("no deltas given for a direct check")
    return PropertyReport(
        "role-interchangeability", [xi], INCONCLUSIVE, CHARACTERIZATION, cex, bounds, notes, trace=failed.witness
    )
