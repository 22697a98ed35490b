"""Low-level event kinds and the static per-clause counts for each of them."""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..lang.program import (
    ARITH_FUNCTORS,
    BUILTINS,
    Clause,
    Mode,
    PredicateDecl,
    Program,
    is_arith_goal,
    pred_str,
)
from ..lang.terms import Struct, Term, Var, is_number, principal_key

HEAD_KINDS = ("step", "nargs", "giunif", "gounif", "viunif", "vounif")


class MetricError(Exception):
    pass


class ModeDeclarationError(MetricError):
    pass


@dataclass(frozen=True, order=True)
class Metric:
    """One kind of low-level event.

    ``kind`` is one of the six head metrics, ``"builtin"`` or ``"arith"``;
    builtin and arithmetic metrics also carry the name/arity they count.
    """

    kind: str
    name: str | None = None
    arity: int | None = None

    def __post_init__(self) -> None:
        if self.kind in HEAD_KINDS:
            if self.name is not None or self.arity is not None:
                raise ValueError(f"{self.kind} takes no identifier")
        elif self.kind in ("builtin", "arith"):
            if self.name is None or self.arity is None:
                raise ValueError(f"{self.kind} metric needs name and arity")
        else:
            raise ValueError(f"unknown metric kind {self.kind!r}")

    @classmethod
    def builtin(cls, name: str, arity: int) -> Metric:
        return cls("builtin", name, arity)

    @classmethod
    def arith(cls, name: str, arity: int) -> Metric:
        return cls("arith", name, arity)

    @classmethod
    def parse(cls, text: str) -> Metric:
        text = text.strip()
        if text in HEAD_KINDS:
            return cls(text)
        m = re.match(r"^(builtin|arith)\((.+)/(\d+)\)$", text)
        if m is None:
            raise ValueError(f"cannot parse metric {text!r}")
        name = m.group(2)
        if len(name) >= 2 and name[0] == name[-1] == "'":
            name = name[1:-1]
        return cls(m.group(1), name, int(m.group(3)))

    @property
    def is_head(self) -> bool:
        return self.kind in HEAD_KINDS

    def __str__(self) -> str:
        if self.is_head:
            return self.kind
        return f"{self.kind}({self.name}/{self.arity})"


STEP = Metric("step")
NARGS = Metric("nargs")
GIUNIF = Metric("giunif")
GOUNIF = Metric("gounif")
VIUNIF = Metric("viunif")
VOUNIF = Metric("vounif")
HEAD_METRICS = (STEP, NARGS, GIUNIF, GOUNIF, VIUNIF, VOUNIF)


@dataclass(frozen=True)
class CostModel:
    """An ordered, duplicate-free vector of metrics."""

    components: tuple[Metric, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise ValueError("a cost model needs at least one component")
        if len(set(self.components)) != len(self.components):
            raise ValueError("duplicate components in cost model")

    @classmethod
    def parse(cls, signature: str) -> CostModel:
        """Parse ``"step,giunif,gounif"`` (commas and/or spaces)."""
        parts = [p for p in re.split(r"[,\s]+(?![^()]*\))", signature.strip()) if p]
        return cls(tuple(Metric.parse(p) for p in parts))

    @property
    def v(self) -> int:
        return len(self.components)

    @property
    def signature(self) -> str:
        return ",".join(str(c) for c in self.components)

    def __iter__(self):
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def index(self, metric: Metric) -> int:
        return self.components.index(metric)

    def __str__(self) -> str:
        return " ".join(str(c) for c in self.components)


FULL_MODEL = CostModel(HEAD_METRICS)
FIVE_MODEL = CostModel((STEP, GIUNIF, GOUNIF, VIUNIF, VOUNIF))
FOUR_MODEL = CostModel((STEP, GIUNIF, GOUNIF, VOUNIF))
STEP_MODEL = CostModel((STEP,))
STANDARD_MODELS = (FULL_MODEL, FIVE_MODEL, FOUR_MODEL, STEP_MODEL)


def symbol_count(t: Term) -> int:
    """Number of function symbols, constants and variables in ``t``."""
    n = 0
    stack = [t]
    while stack:
        t = stack.pop()
        n += 1
        if isinstance(t, Struct):
            stack.extend(t.args)
    return n


def head_metrics(c: Clause, decl: PredicateDecl) -> dict[Metric, int]:
    """Static head-unification counts of one clause.

    A head argument that is a bare variable counts once toward viunif or
    vounif (by mode); a non-variable argument contributes its symbol count
    to giunif or gounif.
    """
    args = c.head_args
    if decl.modes is None and args:
        raise ModeDeclarationError(f"missing mode declaration for {pred_str(decl.key)}")
    counts = {m: 0 for m in HEAD_METRICS}
    counts[STEP] = 1
    counts[NARGS] = len(args)
    for arg, mode in zip(args, decl.modes or ()):
        if isinstance(arg, Var):
            counts[VIUNIF if mode is Mode.IN else VOUNIF] += 1
        else:
            counts[GIUNIF if mode is Mode.IN else GOUNIF] += symbol_count(arg)
    return counts


def ev_cost(op: tuple[str, int], a: Term) -> int:
    """Cost attributed to operator ``op`` when evaluating expression ``a``.

    Constants and variables cost nothing; a node whose root is ``op`` costs
    one plus the cost of its arguments; any other operator node costs the
    sum over its arguments.
    """
    if isinstance(a, Var) or is_number(a) or isinstance(a, str):
        if isinstance(a, str):
            raise MetricError(f"atom {a!r} is not an arithmetic expression")
        return 0
    if not isinstance(a, Struct) or a.key not in ARITH_FUNCTORS:
        raise MetricError(f"non-arithmetic functor {pred_str(principal_key(a))} in expression")
    inner = sum(ev_cost(op, arg) for arg in a.args)
    if a.key == op:
        return 1 + inner
    return inner


def arith_operators(a: Term) -> set[tuple[str, int]]:
    out = set()
    stack = [a]
    while stack:
        t = stack.pop()
        if isinstance(t, Struct):
            out.add(t.key)
            stack.extend(t.args)
    return out


def arith_expressions(goal: Term) -> tuple[Term, ...]:
    """The arithmetic expressions evaluated by an ``is/2`` or comparison goal."""
    key = principal_key(goal)
    if key == ("is", 2):
        return (goal.args[1],)
    if is_arith_goal(key):
        return tuple(goal.args)
    return ()


def literal_metrics(goal: Term) -> dict[Metric, int]:
    """Builtin and arithmetic-operator counts of one builtin body literal."""
    key = principal_key(goal)
    if key not in BUILTINS:
        raise MetricError(f"{pred_str(key)} is not a builtin")
    counts: Counter[Metric] = Counter({Metric.builtin(*key): 1})
    for expr in arith_expressions(goal):
        for op in arith_operators(expr):
            n = ev_cost(op, expr)
            if n:
                counts[Metric.arith(*op)] += n
    return dict(counts)


def body_metrics(c: Clause, p: Program | None = None) -> dict[Metric, int]:
    """Builtin and arithmetic-operator counts over the body of ``c``.

    User predicate calls contribute nothing here; their cost enters through
    the cost equations.  Raises :class:`MetricError` for a call that is
    neither a builtin nor a user predicate with clauses or a trust_cost.
    """
    counts: Counter[Metric] = Counter()
    for lit in c.body:
        key = principal_key(lit)
        if key in BUILTINS:
            counts.update(literal_metrics(lit))
        elif p is not None and (
            key not in p.predicates or (not p.clauses(key) and p.decl(key).trust_cost is None)
        ):
            raise MetricError(f"no cost known for {pred_str(key)}")
    return dict(counts)


def program_metrics(p: Program, preds: Iterable | None = None) -> list[Metric]:
    """Builtin/arith metrics occurring in the clauses (or trust costs) of ``preds``."""
    found: set[Metric] = set()
    for key in preds if preds is not None else p.predicates:
        if key not in p.predicates:
            continue
        for c in p.clauses(key):
            found.update(m for m in body_metrics(c) if not m.is_head)
        trust = p.decl(key).trust_cost
        if trust:
            found.update(m for m in (Metric.parse(s) for s in trust) if not m.is_head)
    return sorted(found)


def add_counts(a: Mapping[Metric, int], b: Mapping[Metric, int]) -> dict[Metric, int]:
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return out
