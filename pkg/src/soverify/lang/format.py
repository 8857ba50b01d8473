"""Canonical rendering of spec files; parse(render(x)) == x."""
from __future__ import annotations

from ..logic.printer import pretty_block, pretty_formula, pretty_term
from ..logic.syntax import ENUMERATED, PM, SUBSTRATE, WF
from .system import InvariantTask, Rule, Scenario, SpecFile, TwoLevelSystem


def render_rule(r: Rule) -> str:
    parts = [pretty_formula(r.head)] + [pretty_formula(b) for b in r.body]
    return f"(rule {r.name} " + " ".join(parts) + ")"


def _decls(items: list[str], head: str, ind: str) -> list[str]:
    if not items:
        return []
    return [f"{ind}({head}"] + [f"{ind}  {i}" for i in items[:-1]] + [f"{ind}  {items[-1]})"]


def render_system(s: TwoLevelSystem) -> str:
    sig = s.sig
    lines = [f"(system {s.name}"]
    sub = []
    for name in s.substrate.sorts:
        so = sig.sorts[name]
        if so.kind == ENUMERATED:
            sub.append(f"(enum {name} " + " ".join(so.constants) + ")")
        else:
            cs = [d.name for d in sig.funs.values() if d.tag == SUBSTRATE and d.result == name and not d.args]
            sub.append(f"(equiv {name}" + "".join(" " + c for c in cs) + ")")
    lines += _decls(sub, "substrate", "  ")

    def theory_block(tag: str) -> list[str]:
        out = []
        sorts = [n for n, so in sig.sorts.items() if so.tag == tag]
        if sorts:
            out.append("    (sorts " + " ".join(sorts) + ")")
        funs = [
            "(" + " ".join((d.name,) + d.args + (d.result,)) + ")"
            for d in sig.funs.values() if d.tag == tag
        ]
        out += _decls(funs, "funs", "    ")
        preds = ["(" + " ".join((d.name,) + d.args) + ")" for d in sig.preds.values() if d.tag == tag]
        out += _decls(preds, "preds", "    ")
        return out

    wf = theory_block(WF)
    if s.wf_axioms:
        wf.append("    (axioms")
        for a in s.wf_axioms:
            wf.append(f"      (axiom {a.name}")
            wf.append(pretty_block(a.formula, 8) + ")")
        wf[-1] += ")"
    if wf:
        lines.append("  (wf")
        lines += wf
        lines[-1] += ")"
    pm = []
    pm.append(f"    (mode {s.pm.mode}" + (f" {s.pm.depth})" if s.pm.mode == "horn" else ")"))
    pm += theory_block(PM)
    rules = [render_rule(r) for r in s.pm.rules]
    pm += _decls(rules, "rules", "    ")
    lines.append("  (pm")
    lines += pm
    lines[-1] += ")"
    svs = [f"({x} {sig.funs[x].result})" for x in s.state_vars]
    lines += _decls(svs, "statevars", "  ")
    sps = ["(" + " ".join((p,) + sig.preds[p].args) + ")" for p in s.state_preds]
    lines += _decls(sps, "statepreds", "  ")
    init = ["  (init"]
    if s.init.id_vars:
        init.append("    (ids " + " ".join(f"({v.name} {v.sort})" for v in s.init.id_vars) + ")")
    init.append("    (wf")
    init.append(pretty_block(s.init.wf_part, 6) + ")")
    for p, u in s.init.pm_parts:
        init.append(f"    (pred {p} (" + " ".join(v.name for v in u.params) + ")")
        init.append(pretty_block(u.body, 6) + ")")
    init[-1] += ")"
    lines += init
    for t in s.transitions:
        tl = [f"  (transition {t.name}"]
        if t.id_vars:
            tl.append("    (ids " + " ".join(f"({v.name} {v.sort})" for v in t.id_vars) + ")")
        if t.data_vars:
            tl.append("    (data " + " ".join(f"({v.name} {v.sort})" for v in t.data_vars) + ")")
        tl.append("    (guard")
        tl.append(pretty_block(t.guard, 6) + ")")
        for x, term in t.wf_updates:
            tl.append(f"    (update {x} {pretty_term(term)})")
        for p, u in t.pm_updates:
            tl.append(f"    (update {p} (" + " ".join(v.name for v in u.params) + ")")
            tl.append(pretty_block(u.body, 6) + ")")
        tl[-1] += ")"
        lines += tl
    lines[-1] += ")"
    return "\n".join(lines)


def render_scenario(sc: Scenario) -> str:
    lines = [f"(scenario {sc.name}", f"  (system {sc.system})"]
    for i, st in enumerate(sc.states):
        lines.append("  (state")
        lines.append(pretty_block(st, 4) + ")")
        if i < len(sc.steps):
            lines.append(f"  (step {sc.steps[i]})")
    lines[-1] += ")"
    return "\n".join(lines)


def render_invariant(t: InvariantTask) -> str:
    lines = [f"(invariant {t.name}", f"  (system {t.system})", "  (always", pretty_block(t.target, 4) + ")"]
    if t.candidate is not None:
        lines += ["  (candidate", pretty_block(t.candidate, 4) + ")"]
    lines[-1] += ")"
    return "\n".join(lines)


def render_spec(spec: SpecFile) -> str:
    parts = [render_system(s) for s in spec.systems.values()]
    parts += [render_scenario(s) for s in spec.scenarios]
    parts += [render_invariant(t) for t in spec.invariants]
    return "\n\n".join(parts) + "\n"
