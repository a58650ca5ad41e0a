"""Command line interface.

Every subcommand prints one JSON report (schema ``tracepi-report/1``) and
exits with 0 (equivalent / holds / found), 1 (inequivalent / fails / not
found), 2 (bounded or inconclusive) or 3 (usage or input error).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .config import LABELLED_ONLY, SILENT_GRANULAR, JobConfig
from .equivalence import EQUIVALENT, INEQUIVALENT, trace_equiv, trace_match
from .errors import TracepiError
from .frames import frame_of, static_equiv
from .logic import satisfies
from .parser import parse_action, parse_formula, parse_program, parse_term
from .properties import FAILS, HOLDS, minimal_secrecy, openness, role_interchangeability, total_secrecy
from .semantics import Engine, Trace, action_to_json

SCHEMA = "tracepi-report/1"


class UsageError(Exception):
    pass


def _add_bounds(p: argparse.ArgumentParser) -> None:
    p.add_argument("--theory", help="theory file (.thy) prepended to every process file")
    p.add_argument("--max-len", type=int, default=4, help="maximum trace length")
    p.add_argument("--repl-bound", type=int, default=2, help="unfoldings per replication")
    p.add_argument("--recipe-depth", type=int, default=1, help="depth of generated input recipes")
    p.add_argument("--fresh", type=int, default=2, help="fresh attacker constants")
    p.add_argument("--mode", choices=[LABELLED_ONLY, SILENT_GRANULAR], default=LABELLED_ONLY)
    p.add_argument("--attacker", default="", help="comma separated attacker names")
    p.add_argument("--pool", default="", help="explicit comma separated input recipes")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tracepi", description="Applied pi calculus verification toolkit")
    ap.add_argument("--version", action="version", version=f"tracepi {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("equiv", help="bounded trace equivalence of two processes")
    p.add_argument("left")
    p.add_argument("right")
    _add_bounds(p)

    p = sub.add_parser("static-equiv", help="static equivalence of two frames")
    p.add_argument("left")
    p.add_argument("right")
    p.add_argument("--theory")

    p = sub.add_parser("trace", help="enumerate bounded traces")
    p.add_argument("process")
    p.add_argument("--limit", type=int, default=0, help="stop after this many traces (0: all)")
    p.add_argument("--maximal", action="store_true", help="only maximal traces")
    p.add_argument("--jsonl", action="store_true", help="include per-step frames")
    _add_bounds(p)

    p = sub.add_parser("match", help="find a trace statically equivalent to a reference trace")
    p.add_argument("process")
    p.add_argument("--ref", required=True, help="process whose trace is the reference")
    p.add_argument("--actions", default="", help="semicolon separated actions of the reference trace")
    _add_bounds(p)

    p = sub.add_parser("eval", help="check A |= phi")
    p.add_argument("process")
    p.add_argument("--formula", required=True)
    p.add_argument("--at-end", action="store_true", help="evaluate at the last position")
    p.add_argument("--maximal", action="store_true", help="only maximal traces")
    _add_bounds(p)

    p = sub.add_parser("property", help="check a security property")
    p.add_argument("process")
    p.add_argument(
        "--check", required=True, choices=["minimal-secrecy", "total-secrecy", "role-interchangeability", "openness"]
    )
    p.add_argument("--var", required=True, help="target variable")
    p.add_argument("--delta", help="static formula over the target variable")
    p.add_argument("--ys", default="", help="total secrecy: other parameters")
    p.add_argument("--vars", default="", help="role interchangeability: ordered variables")
    p.add_argument("--deltas", default="", help="role interchangeability: ';' separated formulas over z")
    _add_bounds(p)

    p = sub.add_parser("selftest", help="run the randomized suites")
    p.add_argument("--suite", default="all")
    p.add_argument("--count", type=int, default=0, help="instances per suite (0: default)")
    p.add_argument("--seed", type=int, default=0)
    return ap


def _config(args) -> JobConfig:
    attackers = tuple(n.strip() for n in args.attacker.split(",") if n.strip())
    pool = ()
    if args.pool:
        pool = tuple(parse_term(t.strip()) for t in _split_top(args.pool, ",") if t.strip())
    try:
        return JobConfig(
            max_trace_len=args.max_len,
            repl_bound=args.repl_bound,
            recipe_depth=args.recipe_depth,
            fresh_pool_size=args.fresh,
            comparison_mode=args.mode,
            seed=args.seed,
            attacker_names=attackers,
            input_pool=pool,
        )
    except ValueError as e:
        raise UsageError(str(e)) from e


def _split_top(text: str, sep: str) -> list[str]:
    """Split on sep outside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch in "(<":
            depth += 1
        elif ch in ")>":
            depth -= 1
        if ch == sep and depth == 0:
            out.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur))
    return out


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from e


def _program(path: str, theory: str | None):
    text = _read(path)
    if theory:
        text = _read(theory) + "\n" + text
    return parse_program(text)


def _trace_dict(tr: Trace) -> dict:
    return {
        "actions": [action_to_json(a) for a in tr.actions],
        "text": tr.describe(),
        "final": str(tr.last),
    }


def _equiv_code(result: str) -> int:
    return {EQUIVALENT: 0, INEQUIVALENT: 1}.get(result, 2)


def _prop_code(verdict: str) -> int:
    return {HOLDS: 0, FAILS: 1}.get(verdict, 2)


def cmd_equiv(args):
    cfg = _config(args)
    a = _program(args.left, args.theory)
    b = _program(args.right, args.theory)
    rs = a.rs if a.rs.rules or a.rs.signature.symbols else b.rs
    v = trace_equiv(a.process, b.process, cfg, rs)
    return _equiv_code(v.result), {"verdict": v.to_dict(), "config": cfg.to_dict()}


def cmd_static(args):
    a = _program(args.left, args.theory)
    b = _program(args.right, args.theory)
    v = static_equiv(frame_of(a.process), frame_of(b.process), a.rs)
    report = {"equivalent": v.equivalent, "reason": v.reason or None}
    if v.witness is not None:
        report["witness"] = [str(v.witness[0]), str(v.witness[1])]
        report["holds_left"] = v.holds_left
    return (0 if v.equivalent else 1), report


def cmd_trace(args):
    cfg = _config(args)
    prog = _program(args.process, args.theory)
    eng = Engine(prog.rs, cfg)
    out = []
    for tr in eng.traces(prog.process):
        if args.maximal and not eng.is_maximal(tr.last):
            continue
        d = _trace_dict(tr)
        if args.jsonl:
            d["steps"] = [json.loads(line) for line in tr.to_jsonl().splitlines()]
        out.append(d)
        if args.limit and len(out) >= args.limit:
            break
    return 0, {"count": len(out), "traces": out, "config": cfg.to_dict()}


def _replay(eng: Engine, start, actions) -> Trace | None:
    tr = Trace(start)
    for act in actions:
        nxt = eng.steps_labelled(tr.last, act)
        if not nxt:
            return None
        tr = tr.extend(act, nxt[0])
    return tr


def cmd_match(args):
    cfg = _config(args)
    prog = _program(args.process, args.theory)
    ref = _program(args.ref, args.theory)
    eng = Engine(ref.rs, cfg)
    acts = [parse_action(t.strip(), ref.rs) for t in _split_top(args.actions, ";") if t.strip()]
    ref_tr = _replay(eng, eng.initial(ref.process), acts)
    if ref_tr is None:
        raise UsageError("the reference process cannot perform the given actions")
    found = trace_match(prog.process, ref_tr, cfg, prog.rs)
    report = {"reference": _trace_dict(ref_tr), "match": _trace_dict(found) if found else None}
    return (0 if found else 1), report


def cmd_eval(args):
    cfg = _config(args)
    prog = _program(args.process, args.theory)
    phi = parse_formula(args.formula, prog.rs)
    v = satisfies(prog.process, phi, cfg, prog.rs, at_end=args.at_end, maximal_only=args.maximal)
    return _prop_code(v.result), {"formula": str(phi), "verdict": v.to_dict(), "config": cfg.to_dict()}


def cmd_property(args):
    cfg = _config(args)
    prog = _program(args.process, args.theory)
    delta = parse_formula(args.delta, prog.rs, static=True) if args.delta else None
    if args.check in ("minimal-secrecy", "openness") and delta is None:
        raise UsageError(f"--delta is required for {args.check}")
    if args.check == "minimal-secrecy":
        r = minimal_secrecy(prog.process, args.var, delta, cfg, prog.rs)
    elif args.check == "openness":
        r = openness(prog.process, args.var, delta, cfg, prog.rs)
    elif args.check == "total-secrecy":
        ys = tuple(y.strip() for y in args.ys.split(",") if y.strip())
        r = total_secrecy(prog.process, args.var, ys, cfg, prog.rs)
    else:
        xs = [v.strip() for v in args.vars.split(",") if v.strip()] or None
        deltas = [parse_formula(t, prog.rs, static=True) for t in args.deltas.split(";") if t.strip()]
        r = role_interchangeability(prog.process, args.var, delta, deltas or None, cfg, prog.rs, xs)
    return _prop_code(r.verdict), {"report": r.to_dict()}


def cmd_selftest(args):
    from .sampling import run_selftest

    results = run_selftest(args.suite, args.seed, args.count or None)
    ok = all(r["violations"] == 0 for r in results)
    return (0 if ok else 1), {"seed": args.seed, "suites": results}


COMMANDS = {
    "equiv": cmd_equiv,
    "static-equiv": cmd_static,
    "trace": cmd_trace,
    "match": cmd_match,
    "eval": cmd_eval,
    "property": cmd_property,
    "selftest": cmd_selftest,
}


def run_command(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 3
    try:
        code, body = COMMANDS[args.command](args)
    except (UsageError, TracepiError, ValueError) as e:
        json.dump({"schema": SCHEMA, "command": args.command, "error": str(e), "exit": 3}, out, indent=2)
        out.write("\n")
        return 3
    report = {"schema": SCHEMA, "command": args.command, "exit": code, **body}
    json.dump(report, out, indent=2)
    out.write("\n")
    return code


def main() -> None:
    sys.exit(run_command())
