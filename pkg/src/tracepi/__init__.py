"""Applied pi calculus toolkit: terms, frames, traces, equivalences, epistemic logic."""

from .config import LABELLED_ONLY, SILENT_GRANULAR, JobConfig
from .equivalence import EquivVerdict, trace_equiv, trace_inclusion, trace_match, trace_static_equiv
from .errors import TracepiError
from .frames import Frame, deduce, frame_of, static_equiv, static_equiv_oracle, test_holds
from .logic import assignment_representatives, eval_modal, eval_static, satisfies
from .parser import parse_action, parse_formula, parse_process, parse_program, parse_term, parse_theory
from .process import accounting, alpha_fresh, cycle_free_check, pnf, substitute, uplus
from .properties import PropertyReport, minimal_secrecy, openness, role_interchangeability, total_secrecy
from .semantics import Engine, Trace, internal_successors, is_maximal, labelled_successors, traces
from .terms import FREE_ALGEBRA, App, Name, RewriteSystem, Signature, Var, check_subterm_convergent, eq_mod_e, normalize, term_meta

__version__ = "0.1.0"

__all__ = [
    "App",
    "Engine",
    "EquivVerdict",
    "FREE_ALGEBRA",
    "Frame",
    "JobConfig",
    "LABELLED_ONLY",
    "Name",
    "PropertyReport",
    "RewriteSystem",
    "SILENT_GRANULAR",
    "Signature",
    "Trace",
    "TracepiError",
    "Var",
    "accounting",
    "alpha_fresh",
    "assignment_representatives",
    "check_subterm_convergent",
    "cycle_free_check",
    "deduce",
    "eq_mod_e",
    "eval_modal",
    "eval_static",
    "frame_of",
    "internal_successors",
    "is_maximal",
    "labelled_successors",
    "minimal_secrecy",
    "normalize",
    "openness",
    "parse_action",
    "parse_formula",
    "parse_process",
    "parse_program",
    "parse_term",
    "parse_theory",
    "pnf",
    "role_interchangeability",
    "satisfies",
    "static_equiv",
    "static_equiv_oracle",
    "substitute",
    "term_meta",
    "test_holds",
    "total_secrecy",
    "trace_equiv",
    "trace_inclusion",
    "trace_match",
    "trace_static_equiv",
    "traces",
    "uplus",
]
