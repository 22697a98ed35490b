"""Render terms and programs back to the concrete syntax.

Output is deliberately over-parenthesised so that ``parse(format(p))``
reads back the same structure without having to reason about operator
priorities.
"""

from __future__ import annotations

import re

import sympy

from .program import Measure, Program, pred_str
from .reader import INFIX_OPS, PREFIX_OPS
from .terms import CONS, NIL, Struct, Term, Var, list_items

_PLAIN_ATOM = re.compile(r"^[a-z][A-Za-z0-9_]*$")


def format_atom(a: str, operand: bool = True) -> str:
    if a == NIL or _PLAIN_ATOM.match(a) and not (operand and a in INFIX_OPS):
        return a
    return "'" + a.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term, names: dict | None = None, top: bool = False) -> str:
    """Render ``t``; with ``top`` an outermost operator term is not wrapped."""
    if names is None:
        names = {}
    if isinstance(t, Var):
        if t.ref is not None:
            return format_term(t.ref, names)
        if t.name == "_":
            return "_"
        if t not in names:
            base = t.name if t.name[:1].isupper() or t.name[:1] == "_" else f"_{t.name}"
            name = base
            taken = set(names.values())
            k = 1
            while name in taken:
                name = f"{base}_{k}"
                k += 1
            names[t] = name
        return names[t]
    if isinstance(t, bool):
        raise TypeError("booleans are not terms")
    if isinstance(t, int):
        return str(t)
    if isinstance(t, float):
        return repr(t)
    if isinstance(t, str):
        return format_atom(t)
    if t.functor == CONS and t.arity == 2:
        items, tail = list_items(t)
        inner = ",".join(format_term(i, names) for i in items)
        if tail == NIL:
            return f"[{inner}]"
        return f"[{inner}|{format_term(tail, names)}]"
    if t.arity == 2 and t.functor in INFIX_OPS and t.functor != ",":
        left = format_term(t.args[0], names)
        right = format_term(t.args[1], names)
        text = f"{left} {t.functor} {right}"
        return text if top else f"({text})"
    args = ",".join(format_term(a, names) for a in t.args)
    name = t.functor if _PLAIN_ATOM.match(t.functor) else format_atom(t.functor, operand=False)
    if name == t.functor and t.functor in PREFIX_OPS:
        name = format_atom(t.functor, operand=False)
    return f"{name}({args})"


def format_expr(e: sympy.Expr) -> str:
    """Compact rendering of a size/cost expression, e.g. ``n1+1``."""
    return str(e).replace(" ", "").replace("Max(", "max(").replace("Min(", "min(")


_METRIC_RE = re.compile(r"^(builtin|arith)\((.+)/(\d+)\)$")


def _format_metric_name(m: str) -> str:
    match = _METRIC_RE.match(m)
    if match is None:
        return m
    kind, name, arity = match.groups()
    return f"{kind}({format_atom(name)}/{arity})"


def format_clause(head: Term, body) -> str:
    names: dict = {}
    h = format_term(head, names, top=True)
    if not body:
        return f"{h}."
    goals = ",\n    ".join(format_term(g, names, top=True) for g in body)
    return f"{h} :-\n    {goals}."


_MEASURE_NAMES = {m: m.value for m in Measure}


def format_program(p: Program) -> str:
    lines: list[str] = []
    for key in p.entry_points:
        lines.append(f":- entry({format_atom(key[0])}/{key[1]}).")
    for key, pred in p.predicates.items():
        d = pred.decl
        ind = f"{format_atom(key[0])}/{key[1]}"
        if d.modes is not None:
            lines.append(f":- mode({ind}, [{','.join(m.value for m in d.modes)}]).")
        if d.measures is not None:
            lines.append(f":- measure({ind}, [{','.join(_MEASURE_NAMES[m] for m in d.measures)}]).")
        if d.out_sizes:
            items = [format_expr(d.out_sizes[i]) if i in d.out_sizes else "_" for i in range(d.arity)]
            lines.append(f":- size({ind}, [{','.join(items)}]).")
        if d.sols != 1:
            lines.append(f":- sols({ind}, {format_expr(d.sols)}).")
        if d.mutex_groups is not None and len(pred.clauses) > 1:
            groups = ",".join("[" + ",".join(str(i + 1) for i in g) + "]" for g in d.mutex_groups)
            lines.append(f":- mutex({ind}, [{groups}]).")
        if d.trust_cost is not None:
            items = ", ".join(f"{_format_metric_name(m)} = {format_expr(e)}" for m, e in d.trust_cost.items())
            lines.append(f":- trust_cost({ind}, [{items}]).")
    lines.append("")
    for key, pred in p.predicates.items():
        for c in pred.clauses:
            lines.append(format_clause(c.head, c.body))
        if pred.clauses:
            lines.append("")
    return "\n".join(lines)


__all__ = ["format_atom", "format_clause", "format_expr", "format_program", "format_term", "pred_str"]
