"""Command-line front end: soverify check | solve | fmt."""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, field
from typing import Optional

from .combine.tsoa import TheoryContext, tsoa_sat, tsoa_sat_universal
from .errors import NOT_GROUND, SoverifyError, Unsupported
from .lang.format import render_spec
from .lang.parser import parse_solve, parse_spec_file
from .lang.sexpr import SpecError
from .lang.wellformed import check_wellformedness, errors
from .logic.syntax import SortError, conj
from .report import (
    INVARIANT, SCENARIO, check_document, check_exit_code, dump_json, render_check_text,
    render_solve_text, run_tasks, select_tasks, solve_document, solve_exit_code,
)
from .smt.model import UNSUPPORTED, Verdict

EXIT_USAGE = 2

KIND_FILTERS = {
    "all": {SCENARIO, INVARIANT},
    "executability": {SCENARIO},
    "invariant": {INVARIANT},
}


@dataclass
class RunConfig:
    paths: list[str]
    scenarios: list[str] = field(default_factory=list)
    invariants: list[str] = field(default_factory=list)
    mode: Optional[str] = None
    horn_depth: Optional[int] = None
    trace: bool = False
    output: str = "text"  # text | json
    jobs: int = 1
    seed: Optional[int] = None
    system: Optional[str] = None

    def __post_init__(self) -> None:
        if self.output not in ("text", "json"):
            raise ValueError("output is text or json")
        if self.horn_depth is not None and self.horn_depth < 0:
            raise ValueError("--horn-depth must be at least 0")
        if self.jobs < 1:
            raise ValueError("--jobs must be at least 1")


def _diag(msg: str) -> None:
    print(f"soverify: {msg}", file=sys.stderr)


def _load(path: str):
    try:
        return parse_spec_file(path)
    except OSError as e:
        raise _UsageError(f"{path}: {e.strerror or e}")
    except (SpecError, SortError, SoverifyError, ValueError) as e:
        raise _UsageError(f"{path}: {e}")


class _UsageError(Exception):
    pass


# ---------------------------------------------------------------- commands


def cmd_check(cfg: RunConfig) -> int:
    kinds = KIND_FILTERS[cfg.mode or "all"]
    tasks = []
    found: set[str] = set()
    for path in cfg.paths:
        spec = _load(path)
        for s in spec.systems.values():
            diags = check_wellformedness(s)
            for d in diags:
                _diag(f"{path}: {d.severity} {d.code}: {d.message}")
            if errors(diags):
                raise _UsageError(f"{path}: system {s.name} is not well formed")
        found |= {t.name for t in spec.scenarios} | {t.name for t in spec.invariants}
        tasks += select_tasks(path, spec, cfg.scenarios, cfg.invariants, kinds, cfg.horn_depth, cfg.trace)
    missing = [n for n in cfg.scenarios + cfg.invariants if n not in found]
    if missing:
        raise _UsageError("no task named " + ", ".join(repr(n) for n in missing))
    results = run_tasks(tasks, cfg.jobs)
    for _, lines in results:
        for ln in lines:
            print(ln, file=sys.stderr)
    reports = [r for r, _ in results]
    doc = check_document(reports, cfg.seed)
    sys.stdout.write(dump_json(doc) if cfg.output == "json" else render_check_text(doc))
    for r in reports:
        if r["verdict"] == UNSUPPORTED and "reason" in r:
            _diag(f"{r.get('scenario') or r.get('task')}: unsupported [{r['reason']}] {r['detail']}")
    return check_exit_code(reports)


def solve_query(system, text: str, mode: Optional[str] = None, horn_depth: Optional[int] = None,
                trace=None) -> Verdict:
    q = parse_solve(text, system)
    ctx = TheoryContext.from_system(system, q.sig, q.rules, mode or q.mode, horn_depth)
    try:
        if q.universal:
            return tsoa_sat_universal(conj(q.formula, *q.universal), ctx, trace=trace)
        return tsoa_sat(q.formula, ctx, trace=trace)
    except Unsupported as e:
        return Verdict(UNSUPPORTED, reason=e.code, detail=e.detail)


def cmd_solve(cfg: RunConfig, formula_path: str) -> int:
    spec = _load(cfg.paths[0])
    try:
        system = spec.system(cfg.system)
    except KeyError as e:
        raise _UsageError(str(e.args[0]) if e.args else "unknown system")
    try:
        with open(formula_path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise _UsageError(f"{formula_path}: {e.strerror or e}")
    trace = (lambda ln: print(ln, file=sys.stderr)) if cfg.trace else None
    try:
        v = solve_query(system, text, cfg.mode, cfg.horn_depth, trace)
    except (SpecError, SortError) as e:
        raise _UsageError(f"{formula_path}: {e}")
    except ValueError as e:
        # the ground procedure rejects quantified input without assert-forall
        v = Verdict(UNSUPPORTED, reason=NOT_GROUND, detail=str(e))
    doc = solve_document(v, text.strip())
    sys.stdout.write(dump_json(doc) if cfg.output == "json" else render_solve_text(doc))
    return solve_exit_code(v.status)


def cmd_fmt(paths: list[str]) -> int:
    for p in paths:
        sys.stdout.write(render_spec(_load(p)))
    return 0


# ---------------------------------------------------------------- argv


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="soverify", description="Verify two-level service-oriented systems.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--horn-depth", type=int, default=None, metavar="K", help="term-depth bound for Horn saturation")
        p.add_argument("--trace", action="store_true", help="combination-loop JSON lines on standard error")
        p.add_argument("--json", action="store_true", help="JSON report on standard output")
        p.add_argument("--seed", type=int, default=None, help="recorded in the report")

    c = sub.add_parser("check", help="run scenarios and invariant tasks")
    c.add_argument("specs", nargs="+")
    c.add_argument("--scenario", action="append", default=[], metavar="NAME")
    c.add_argument("--invariant", action="append", default=[], metavar="NAME")
    c.add_argument("--mode", choices=sorted(KIND_FILTERS), default=None, help="which kind of task to run")
    c.add_argument("--jobs", type=int, default=1)
    common(c)

    s = sub.add_parser("solve", help="decide satisfiability of a formula file against a system")
    s.add_argument("spec")
    s.add_argument("formula")
    s.add_argument("--system", default=None)
    s.add_argument("--mode", choices=["edt", "equiv"], default=None, help="override the Id substrate")
    common(s)

    f = sub.add_parser("fmt", help="print specs in canonical form")
    f.add_argument("specs", nargs="+")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0
    try:
        if ns.command == "fmt":
            return cmd_fmt(ns.specs)
        paths = ns.specs if ns.command == "check" else [ns.spec]
        cfg = RunConfig(
            paths=paths,
            scenarios=getattr(ns, "scenario", []),
            invariants=getattr(ns, "invariant", []),
            mode=ns.mode,
            horn_depth=ns.horn_depth,
            trace=ns.trace,
            output="json" if ns.json else "text",
            jobs=getattr(ns, "jobs", 1),
            seed=ns.seed,
            system=getattr(ns, "system", None),
        )
        if ns.command == "check":
            return cmd_check(cfg)
        return cmd_solve(cfg, ns.formula)
    except (_UsageError, ValueError) as e:
        _diag(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
