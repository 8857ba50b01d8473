"""Running check tasks and rendering their reports.

A task is one scenario or one invariant of a spec file.  Tasks are
independent, so they may run in worker processes; results are always
assembled in declaration order.
"""
from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from .invcheck import ESTABLISHED, VALID, check_task
from .lang.parser import parse_spec_file
from .smt.model import SAT, UNSAT, UNSUPPORTED
from .symexec import run_scenario

CHECK_SCHEMA = "soverify.check/1"
SOLVE_SCHEMA = "soverify.solve/1"

SCENARIO = "scenario"
INVARIANT = "invariant"


@dataclass(frozen=True)
class Task:
    path: str
    kind: str  # scenario | invariant
    name: str
    horn_depth: Optional[int] = None
    trace: bool = False


def select_tasks(path: str, spec, scenarios: list, invariants: list, kinds: set,
                 horn_depth: Optional[int] = None, trace: bool = False) -> list[Task]:
    """Tasks of one spec in declaration order.  With name filters only the
    named tasks are kept."""
    filtered = bool(scenarios or invariants)
    out = []
    for s in spec.scenarios:
        if SCENARIO in kinds and (not filtered or s.name in scenarios):
            out.append(Task(path, SCENARIO, s.name, horn_depth, trace))
    for t in spec.invariants:
        if INVARIANT in kinds and (not filtered or t.name in invariants):
            out.append(Task(path, INVARIANT, t.name, horn_depth, trace))
    return out


_SPECS: dict = {}


def _load(path: str):
    if path not in _SPECS:
        _SPECS[path] = parse_spec_file(path)
    return _SPECS[path]


def run_task(task: Task) -> tuple[dict, list[str]]:
    """The task's report and its trace lines."""
    spec = _load(task.path)
    lines: list[str] = []
    sink = lines.append if task.trace else None
    if task.kind == SCENARIO:
        sc = spec.scenario(task.name)
        rep = run_scenario(spec.system(sc.system), sc, horn_depth=task.horn_depth, trace=sink)
    else:
        inv = spec.invariant(task.name)
        rep = check_task(spec.system(inv.system), inv, horn_depth=task.horn_depth, trace=sink)
    rep = {"kind": task.kind, "spec": task.path, **rep}
    return rep, lines


def run_tasks(tasks: list[Task], jobs: int = 1) -> list[tuple[dict, list[str]]]:
    if jobs <= 1 or len(tasks) <= 1:
        return [run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        # map keeps submission order whatever the completion order
        return list(ex.map(run_task, tasks))


# ---------------------------------------------------------------- outcome


def task_outcome(rep: dict) -> str:
    """ok | failed | unsupported"""
    v = rep["verdict"]
    if v == UNSUPPORTED:
        return UNSUPPORTED
    if v in (VALID, ESTABLISHED):
        return "ok"
    return "failed"


def check_document(reports: list[dict], seed: Optional[int] = None) -> dict:
    outcomes = [task_outcome(r) for r in reports]
    summary = {
        "tasks": len(reports),
        "ok": outcomes.count("ok"),
        "failed": outcomes.count("failed"),
        "unsupported": outcomes.count(UNSUPPORTED),
    }
    doc = {"schema": CHECK_SCHEMA, "tasks": reports, "summary": summary}
    if seed is not None:
        doc["seed"] = seed
    return doc


def check_exit_code(reports: list[dict]) -> int:
    outcomes = {task_outcome(r) for r in reports}
    if UNSUPPORTED in outcomes:
        return 3
    if "failed" in outcomes:
        return 1
    return 0


def dump_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# ---------------------------------------------------------------- text


def _fmt_witness(w: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in sorted(w.items()))


def _fmt_model(m: dict) -> list[str]:
    out = []
    for name, rows in m.get("functions", {}).items():
        if name.startswith("pur."):
            continue
        # enumerated constants denote themselves
        rows = [(a, v) for a, v in rows if a or v != name]
        cells = ", ".join((f"{name}({', '.join(a)})" if a else name) + f" = {v}" for a, v in rows)
        if cells:
            out.append(cells)
    for name, rows in m.get("predicates", {}).items():
        out.append(f"{name}: " + (", ".join("(" + ", ".join(r) + ")" for r in rows) if rows else "empty"))
    return out


def render_scenario(rep: dict) -> list[str]:
    out = [f"scenario {rep['scenario']} ({rep['system']}): {rep['verdict']}"]
    if "reason" in rep:
        out.append(f"  [{rep['reason']}] {rep['detail']}")
    for st in rep["steps"]:
        en = st["enabled"]
        en_s = UNSUPPORTED if en == UNSUPPORTED else ("enabled" if en else "DISABLED")
        line = f"  step {st['index']} {st['transition']}: {en_s}, triple {st['triple']}"
        if st.get("witness"):
            line += f", witness {_fmt_witness(st['witness'])}"
        out.append(line)
        if "reason" in st:
            out.append(f"    [{st['reason']}] {st['detail']}")
        if "countermodel" in st:
            cm = st["countermodel"]
            out.append(f"    countermodel, witness {_fmt_witness(cm['witness'])}")
            out.extend("      " + x for x in _fmt_model(cm["model"]))
            out.append(f"    obligation: {st['obligation']}")
    return out


def render_invariant(rep: dict) -> list[str]:
    out = [f"invariant {rep['task']} ({rep['system']}): {rep['verdict']}"]
    if "reason" in rep:
        out.append(f"  [{rep['reason']}] {rep['detail']}")
    for ob in rep["obligations"]:
        head = ob["kind"] + (f" {ob['transition']}" if "transition" in ob else "")
        out.append(f"  {head}: {ob['verdict']}")
        if "reason" in ob:
            out.append(f"    [{ob['reason']}] {ob['detail']}")
        for label in ("counterexample", "counterexample-to-induction"):
            if label in ob:
                cx = ob[label]
                out.append(f"    {label.replace('-', ' ')}: " + _fmt_witness(cx["skolems"]))
                out.extend("      " + x for x in _fmt_model(cx["model"]))
    if "note" in rep:
        out.append(f"  note: {rep['note']}")
    return out


def render_check_text(doc: dict) -> str:
    lines: list[str] = []
    for rep in doc["tasks"]:
        lines.extend(render_scenario(rep) if rep["kind"] == SCENARIO else render_invariant(rep))
    s = doc["summary"]
    lines.append(f"{s['tasks']} tasks: {s['ok']} ok, {s['failed']} failed, {s['unsupported']} unsupported")
    return "\n".join(lines) + "\n"


def solve_document(verdict, formula_text: str) -> dict:
    doc = {"schema": SOLVE_SCHEMA, "formula": formula_text, **verdict.to_json()}
    if "representatives" in verdict.stats:
        doc["representatives"] = verdict.stats["representatives"]
    return doc


def render_solve_text(doc: dict) -> str:
    lines = [doc["status"]]
    if "reason" in doc:
        lines.append(f"[{doc['reason']}] {doc.get('detail', '')}")
    if doc["status"] == SAT and "model" in doc:
        lines.extend("  " + x for x in _fmt_model(doc["model"]))
    if doc["status"] == UNSAT and "core" in doc:
        lines.append("core:")
        lines.extend("  " + c for c in doc["core"])
    return "\n".join(lines) + "\n"


def solve_exit_code(status: str) -> int:
    return {SAT: 0, UNSAT: 1}.get(status, 3)

