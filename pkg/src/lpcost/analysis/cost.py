"""Predicate-level cost analysis: cost equations, solutions and export."""

from __future__ import annotations

import json
import sys
import time
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

import sympy

from ..lang.program import BUILTINS, Program, pred_str, size_symbol
from ..lang.terms import principal_key
from .metrics import CostModel, Metric, head_metrics, literal_metrics
from .recurrence import (
    CallTerm,
    ClosedForm,
    CostError,
    CostFunction,
    Evaluator,
    Recurrence,
    RecurrenceCase,
    evaluate_recurrence,
    solve_recurrence,
)
from .sizes import Guard, params_of, size_relations


class NotExactError(CostError):
    """An exact cost was requested for clauses that are not mutually exclusive."""


class UnresolvedCalleeError(CostError):
    pass


@contextmanager
def _recursion_room(limit: int = 20000):
    old = sys.getrecursionlimit()
    if old < limit:
        sys.setrecursionlimit(limit)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


def setup_cost_equation(pred, metric: Metric, p: Program) -> Recurrence:
    """Build the cost recurrence of ``pred`` for one metric.

    Each clause contributes its head counts, the counts of its builtin
    literals and its user calls, every literal weighted by the product of
    the solution counts of the user calls to its left.
    """
    if pred not in p.predicates or not p.clauses(pred):
        raise UnresolvedCalleeError(f"{pred_str(pred)} has no clauses")
    decl = p.decl(pred)
    rel = size_relations(pred, p)
    cases = []
    for cs, clause in zip(rel, p.clauses(pred)):
        calls_at = {ls.index: ls for ls in cs.calls}
        constant = sympy.Integer(head_metrics(clause, decl).get(metric, 0))
        weight = sympy.Integer(1)
        calls = []
        for li, lit in enumerate(clause.body):
            key = principal_key(lit)
            if key in BUILTINS:
                constant += weight * literal_metrics(lit).get(metric, 0)
                continue
            ls = calls_at[li]
            callee = p.decl(key) if key in p.predicates else None
            if callee is None or (not p.clauses(key) and callee.trust_cost is None):
                raise UnresolvedCalleeError(f"no cost known for {pred_str(key)} called from {pred_str(pred)}")
            calls.append(CallTerm(key, weight, dict(ls.sizes)))
            weight = sympy.expand(weight * ls.sols)
        cases.append(RecurrenceCase(cs.clause_index, cs.guard, sympy.expand(constant), tuple(calls)))
    groups = decl.mutex_groups or tuple((i,) for i in range(len(cases)))
    return Recurrence(pred, metric, params_of(decl), tuple(cases), tuple(groups))


def trusted_cost(p: Program, pred, metric: Metric) -> ClosedForm:
    decl = p.decl(pred)
    exprs = {Metric.parse(k): v for k, v in decl.trust_cost.items()}
    expr = exprs.get(metric, sympy.Integer(0))
    params = params_of(decl)
    if not params:
        params = tuple(sorted(int(s.name[1:]) - 1 for s in expr.free_symbols))
    return ClosedForm.total(params, expr)


class CostAnalysis:
    """One analysis session over a program.

    Caches recurrences, solved cost functions and evaluator values.  Not
    thread-safe; use one session per worker.
    """

    def __init__(self, program: Program, bound: str = "exact") -> None:
        if bound not in ("exact", "upper"):
            raise ValueError("bound must be 'exact' or 'upper'")
        self.program = program
        self.bound = bound
        self._recurrences: dict = {}
        self._costs: dict = {}
        self._memo: dict = {}
        self._active: set = set()
        self._sccs = _recursive_components(program)

    def recurrence(self, pred, metric: Metric) -> Recurrence:
        key = (pred, metric)
        if key not in self._recurrences:
            self._recurrences[key] = setup_cost_equation(pred, metric, self.program)
        return self._recurrences[key]

    def is_trusted(self, pred) -> bool:
        return pred in self.program.predicates and self.program.decl(pred).trust_cost is not None

    def check_exact(self, pred) -> None:
        for key in self.program.reachable([pred]):
            if key not in self.program.predicates or self.is_trusted(key):
                continue
            groups = self.program.decl(key).mutex_groups
            if groups is not None and len(groups) > 1:
                raise NotExactError(
                    f"exact cost requested but the clauses of {pred_str(key)} are not mutually exclusive "
                    "(declare them with :- mutex or use bound=upper)"
                )

    def cost(self, pred, metric: Metric) -> CostFunction:
        key = (pred, metric)
        if key in self._costs:
            return self._costs[key]
        if self.is_trusted(pred):
            cf: CostFunction = trusted_cost(self.program, pred, metric)
        else:
            r = self.recurrence(pred, metric)
            if self._sccs.get(pred, 1) > 1:
                r.check_well_founded()
                cf = Evaluator(r, self.evaluate)
            else:
                cf = solve_recurrence(r, lambda callee: self.cost(callee, metric), self.evaluate)
        self._costs[key] = cf
        return cf

    def evaluate(self, pred, metric: Metric, sizes: Mapping[int, int]) -> Fraction:
        """Value of the cost recurrence by direct numeric recursion."""
        if self.is_trusted(pred):
            return trusted_cost(self.program, pred, metric)(dict(sizes))
        r = self.recurrence(pred, metric)
        with _recursion_room():
            return evaluate_recurrence(r, sizes, self.evaluate, self._memo, self._active)

    def predicate_cost(self, pred, model: CostModel) -> tuple[CostFunction, ...]:
        if self.bound == "exact":
            self.check_exact(pred)
        return tuple(self.cost(pred, m) for m in model.components)


def _recursive_components(p: Program) -> dict:
    """Size of the strongly connected call-graph component of each predicate."""
    index: dict = {}
    low: dict = {}
    stack: list = []
    on_stack: set = set()
    out: dict = {}
    counter = [0]

    def connect(v):
        work = [(v, iter(p.callees(v) if v in p.predicates else []))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(p.callees(w) if w in p.predicates else [])))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                for w in comp:
                    out[w] = len(comp)

    for v in p.predicates:
        if v not in index:
            connect(v)
    return out


def predicate_cost(pred, model: CostModel, p: Program, bound: str = "exact") -> tuple[CostFunction, ...]:
    """Vector of cost functions of ``pred``, one per model component."""
    return CostAnalysis(p, bound).predicate_cost(pred, model)


def eval_cost(f: CostFunction, sizes) -> Fraction:
    """Exact value of a cost function at concrete input sizes."""
    return f(sizes)


# -- export -----------------------------------------------------------------


@dataclass(frozen=True)
class CostRecord:
    predicate: str
    metric: str
    form: str
    expr: str
    guard: str
    params: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "predicate": self.predicate,
            "metric": self.metric,
            "form": self.form,
            "expr": self.expr,
            "guard": self.guard,
            "params": list(self.params),
        }


def cost_record(pred, metric: Metric, cf: CostFunction) -> CostRecord:
    if isinstance(cf, ClosedForm):
        return CostRecord(pred_str(pred), str(metric), "closed", cf.describe(), cf.domain(), cf.param_names)
    assert isinstance(cf, Evaluator)
    return CostRecord(pred_str(pred), str(metric), "evaluator", "evaluator", "recurrence", cf.param_names)


def analyze_program(
    p: Program, model: CostModel, preds: Iterable | None = None, bound: str = "exact"
) -> tuple[list[CostRecord], float]:
    """Cost records for every entry point and component, plus analysis seconds."""
    t0 = time.perf_counter()
    session = CostAnalysis(p, bound)
    records = []
    for pred in preds if preds is not None else p.entry_points:
        for metric, cf in zip(model.components, session.predicate_cost(pred, model)):
            records.append(cost_record(pred, metric, cf))
    return records, time.perf_counter() - t0


def format_records(records: Iterable[CostRecord], fmt: str = "table") -> str:
    records = list(records)
    if fmt == "records":
        return "".join(json.dumps(r.to_dict()) + "\n" for r in records)
    lines = []
    current = None
    for r in records:
        if r.predicate != current:
            current = r.predicate
            lines.append(f"{r.predicate}  ({', '.join(r.params) or 'no size parameters'})")
        guard = "" if r.guard in ("true", "recurrence") else f"   [{r.guard}]"
        lines.append(f"  {r.metric}: {r.expr}{guard}")
    return "\n".join(lines) + "\n"


__all__ = [
    "CostAnalysis",
    "CostRecord",
    "NotExactError",
    "UnresolvedCalleeError",
    "analyze_program",
    "cost_record",
    "eval_cost",
    "format_records",
    "predicate_cost",
    "setup_cost_equation",
    "trusted_cost",
]
