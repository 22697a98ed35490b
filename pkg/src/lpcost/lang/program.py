"""Programs, predicate declarations and the directive language.

Directives recognised by :func:`parse_program`::

    :- entry(p/N).
    :- mode(p/N, [in, out, ...]).
    :- measure(p/N, [length, size, depth, int, none, ...]).
    :- size(p/N, [_, n1+n2, ...]).        % sizes of output arguments
    :- sols(p/N, Expr).                    % number of solutions, default 1
    :- mutex(p/N, [[1,2],[3]]).            % mutually exclusive clause groups
    :- trust_cost(p/N, [step = Expr, ...]).

Size expressions use ``n1 .. nK`` for the sizes of the predicate's
arguments (by position) and the arithmetic operators ``+ - * / ** ^``,
``max`` and ``min``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Mapping

import sympy

from .reader import ParseError, read_clauses
from .terms import NIL, CONS, Struct, Term, Var, is_number, list_items, principal_key

PredKey = tuple  # (name, arity)

BUILTINS: frozenset[tuple[str, int]] = frozenset(
    {
        ("is", 2),
        ("=:=", 2),
        ("=\\=", 2),
        ("<", 2),
        (">", 2),
        ("=<", 2),
        (">=", 2),
        ("=", 2),
        ("true", 0),
    }
)
COMPARISONS: frozenset[str] = frozenset({"=:=", "=\\=", "<", ">", "=<", ">="})
ARITH_FUNCTORS: frozenset[tuple[str, int]] = frozenset(
    {
        ("+", 2),
        ("-", 2),
        ("*", 2),
        ("/", 2),
        ("//", 2),
        ("mod", 2),
        ("rem", 2),
        ("min", 2),
        ("max", 2),
        ("**", 2),
        ("^", 2),
        ("-", 1),
        ("abs", 1),
    }
)


def is_arith_goal(key: PredKey) -> bool:
    return key == ("is", 2) or (key[1] == 2 and key[0] in COMPARISONS)


def pred_str(key: PredKey) -> str:
    return f"{key[0]}/{key[1]}"


class Mode(str, Enum):
    IN = "in"
    OUT = "out"


class Measure(str, Enum):
    LENGTH = "length"
    SIZE = "size"
    DEPTH = "depth"
    INT = "int"
    NONE = "none"


_MEASURE_ALIASES = {
    "length": Measure.LENGTH,
    "list_length": Measure.LENGTH,
    "size": Measure.SIZE,
    "term_size": Measure.SIZE,
    "depth": Measure.DEPTH,
    "term_depth": Measure.DEPTH,
    "int": Measure.INT,
    "int_value": Measure.INT,
    "value": Measure.INT,
    "none": Measure.NONE,
    "void": Measure.NONE,
}


def size_symbol(i: int) -> sympy.Symbol:
    """Size variable of the i-th argument (1-based)."""
    return sympy.Symbol(f"n{i}", integer=True, nonnegative=True)


@dataclass(frozen=True)
class Clause:
    head: Term
    body: tuple[Term, ...]
    line: int = 0

    @property
    def key(self) -> PredKey:
        return principal_key(self.head)

    @property
    def head_args(self) -> tuple[Term, ...]:
        return self.head.args if isinstance(self.head, Struct) else ()


@dataclass(frozen=True)
class PredicateDecl:
    name: str
    arity: int
    modes: tuple[Mode, ...] | None = None
    measures: tuple[Measure, ...] | None = None
    sols: sympy.Expr = sympy.Integer(1)
    mutex_groups: tuple[tuple[int, ...], ...] | None = None  # 0-based clause indices
    trust_cost: Mapping[str, sympy.Expr] | None = None  # metric string -> expr
    out_sizes: Mapping[int, sympy.Expr] = field(default_factory=lambda: MappingProxyType({}))

    @property
    def key(self) -> PredKey:
        return (self.name, self.arity)

    def input_positions(self) -> tuple[int, ...]:
        if self.modes is None:
            return ()
        return tuple(i for i, m in enumerate(self.modes) if m is Mode.IN)

    def size_params(self) -> tuple[int, ...]:
        """0-based argument positions that are measured inputs."""
        if self.modes is None or self.measures is None:
            return ()
        return tuple(
            i
            for i, (mo, me) in enumerate(zip(self.modes, self.measures))
            if mo is Mode.IN and me is not Measure.NONE
        )


@dataclass(frozen=True)
class Predicate:
    decl: PredicateDecl
    clauses: tuple[Clause, ...]

    @property
    def key(self) -> PredKey:
        return self.decl.key


@dataclass(frozen=True)
class Program:
    predicates: Mapping[PredKey, Predicate]
    entry_points: tuple[PredKey, ...]
    source: str = ""

    def __contains__(self, key: PredKey) -> bool:
        return key in self.predicates

    def __getitem__(self, key: PredKey) -> Predicate:
        return self.predicates[key]

    def decl(self, key: PredKey) -> PredicateDecl:
        return self.predicates[key].decl

    def clauses(self, key: PredKey) -> tuple[Clause, ...]:
        return self.predicates[key].clauses

    def callees(self, key: PredKey) -> list[PredKey]:
        """User predicates called from the clauses of ``key`` (in order, unique)."""
        seen: dict[PredKey, None] = {}
        for clause in self.predicates[key].clauses:
            for lit in clause.body:
                k = principal_key(lit)
                if k is not None and k not in BUILTINS:
                    seen.setdefault(k)
        return list(seen)

    def reachable(self, roots=None) -> list[PredKey]:
        roots = list(self.entry_points if roots is None else roots)
        seen: dict[PredKey, None] = {}
        stack = list(reversed(roots))
        while stack:
            k = stack.pop()
            if k in seen:
                continue
            seen[k] = None
            if k in self.predicates:
                stack.extend(reversed(self.callees(k)))
        return list(seen)


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    message: str
    predicate: PredKey | None = None
    line: int | None = None

    def __str__(self) -> str:
        where = f" [{pred_str(self.predicate)}]" if self.predicate else ""
        at = f" (line {self.line})" if self.line else ""
        return f"{self.severity}{where}{at}: {self.message}"


# -- directive helpers ----------------------------------------------------


def _pred_indicator(t: Term, line: int) -> PredKey:
    if (
        isinstance(t, Struct)
        and t.key == ("/", 2)
        and isinstance(t.args[0], str)
        and isinstance(t.args[1], int)
    ):
        return (t.args[0], t.args[1])
    raise ParseError(f"expected a predicate indicator name/arity, got {t!r}", line, 1)


def _term_list(t: Term, line: int) -> list[Term]:
    items, tail = list_items(t)
    if tail != NIL:
        raise ParseError("expected a proper list", line, 1)
    return items


_SYMPY_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": lambda a, b: a / b,
    "**": lambda a, b: a**b,
    "^": lambda a, b: a**b,
    "max": lambda a, b: sympy.Max(a, b),
    "min": lambda a, b: sympy.Min(a, b),
}


def term_to_expr(t: Term, line: int = 0) -> sympy.Expr:
    """Convert a size/cost expression term into a sympy expression."""
    if is_number(t):
        return sympy.Rational(t) if isinstance(t, int) else sympy.nsimplify(t)
    if isinstance(t, str):
        if t.startswith("n") and t[1:].isdigit() and int(t[1:]) >= 1:
            return size_symbol(int(t[1:]))
        raise ParseError(f"unknown symbol {t!r} in size expression (use n1, n2, ...)", line, 1)
    if isinstance(t, Struct):
        if t.arity == 2 and t.functor in _SYMPY_BINARY:
            return _SYMPY_BINARY[t.functor](term_to_expr(t.args[0], line), term_to_expr(t.args[1], line))
        if t.key == ("-", 1):
            return -term_to_expr(t.args[0], line)
    raise ParseError(f"unsupported size expression {t!r}", line, 1)


@dataclass
class _DeclBuilder:
    key: PredKey
    modes: tuple[Mode, ...] | None = None
    measures: tuple[Measure, ...] | None = None
    sols: sympy.Expr | None = None
    mutex: tuple[tuple[int, ...], ...] | None = None
    trust: dict[str, sympy.Expr] | None = None
    out_sizes: dict[int, sympy.Expr] | None = None


def _set_once(builder: _DeclBuilder, attr: str, value, directive: str, line: int) -> None:
    if getattr(builder, attr) is not None:
        raise ParseError(f"duplicate {directive} declaration for {pred_str(builder.key)}", line, 1)
    setattr(builder, attr, value)


def _apply_directive(d: Term, line: int, decls: dict[PredKey, _DeclBuilder], entries: list[PredKey]) -> None:
    if not isinstance(d, Struct):
        raise ParseError(f"unknown directive {d!r}", line, 1)
    name = d.functor
    if d.key == ("entry", 1):
        entries.append(_pred_indicator(d.args[0], line))
        return
    if d.arity != 2 or name not in ("mode", "measure", "size", "sols", "mutex", "trust_cost"):
        raise ParseError(f"unknown directive {name}/{d.arity}", line, 1)
    key = _pred_indicator(d.args[0], line)
    b = decls.setdefault(key, _DeclBuilder(key))
    arg = d.args[1]
    if name == "mode":
        modes = []
        for m in _term_list(arg, line):
            if m not in ("in", "out"):
                raise ParseError(f"mode must be 'in' or 'out', got {m!r}", line, 1)
            modes.append(Mode(m))
        _set_once(b, "modes", tuple(modes), "mode", line)
    elif name == "measure":
        ms = []
        for m in _term_list(arg, line):
            if not isinstance(m, str) or m not in _MEASURE_ALIASES:
                raise ParseError(f"unknown size measure {m!r}", line, 1)
            ms.append(_MEASURE_ALIASES[m])
        _set_once(b, "measures", tuple(ms), "measure", line)
    elif name == "size":
        sizes = {}
        for i, s in enumerate(_term_list(arg, line)):
            if isinstance(s, Var) or s == "none":
                continue
            sizes[i] = term_to_expr(s, line)
        _set_once(b, "out_sizes", sizes, "size", line)
    elif name == "sols":
        _set_once(b, "sols", term_to_expr(arg, line), "sols", line)
    elif name == "mutex":
        groups = []
        for g in _term_list(arg, line):
            idx = []
            for i in _term_list(g, line):
                if not isinstance(i, int) or i < 1:
                    raise ParseError("mutex groups list 1-based clause numbers", line, 1)
                idx.append(i - 1)
            groups.append(tuple(idx))
        _set_once(b, "mutex", tuple(groups), "mutex", line)
    elif name == "trust_cost":
        trust = {}
        for item in _term_list(arg, line):
            if not (isinstance(item, Struct) and item.key == ("=", 2)):
                raise ParseError("trust_cost entries have the form Metric = Expr", line, 1)
            trust[_metric_name(item.args[0], line)] = term_to_expr(item.args[1], line)
        _set_once(b, "trust", trust, "trust_cost", line)


def _metric_name(t: Term, line: int) -> str:
    """Canonical string for a metric written in a trust_cost directive."""
    if isinstance(t, str):
        return t
    if isinstance(t, Struct) and t.arity == 1 and t.functor in ("builtin", "arith"):
        ind = t.args[0]
        if isinstance(ind, Struct) and ind.key == ("/", 2):
            return f"{t.functor}({ind.args[0]}/{ind.args[1]})"
    raise ParseError(f"unrecognised metric {t!r}", line, 1)


def _default_mutex(clauses: list[Clause], modes) -> tuple[tuple[int, ...], ...]:
    """All clauses form one mutually exclusive group when their first input
    arguments are pairwise syntactically disjoint; otherwise every clause is
    its own group (and costs are summed)."""
    if len(clauses) <= 1:
        return (tuple(range(len(clauses))),)
    pos = None
    if modes is not None:
        ins = [i for i, m in enumerate(modes) if m is Mode.IN]
        pos = ins[0] if ins else None
    elif clauses[0].head_args:
        pos = 0
    if pos is not None:
        keys = [_first_arg_key(c.head_args[pos]) if pos < len(c.head_args) else None for c in clauses]
        if all(k is not None for k in keys) and len(set(keys)) == len(keys):
            return (tuple(range(len(clauses))),)
    return tuple((i,) for i in range(len(clauses)))


def _first_arg_key(t: Term):
    if isinstance(t, Var):
        return None
    if isinstance(t, Struct):
        return ("s", t.functor, t.arity)
    return ("c", type(t).__name__, t)


def parse_program(source_text: str) -> Program:
    """Parse program text into a :class:`Program`.

    Raises :class:`ParseError` with line/column on syntax errors, duplicate
    declarations and declaration/clause arity mismatches.
    """
    read = read_clauses(source_text)
    decls: dict[PredKey, _DeclBuilder] = {}
    entries: list[PredKey] = []
    clauses: dict[PredKey, list[Clause]] = {}
    for rc in read:
        t = rc.term
        if isinstance(t, Struct) and t.key == (":-", 1):
            _apply_directive(t.args[0], rc.line, decls, entries)
            continue
        if isinstance(t, Struct) and t.key == (":-", 2):
            head, body_t = t.args
            body = _flatten_conj(body_t, rc.line, rc.col)
        else:
            head, body = t, ()
        if isinstance(head, Var) or is_number(head):
            raise ParseError("clause head must be an atom or compound term", rc.line, rc.col)
        if principal_key(head) in BUILTINS:
            raise ParseError(f"cannot redefine builtin {pred_str(principal_key(head))}", rc.line, rc.col)
        for lit in body:
            if isinstance(lit, Var) or is_number(lit):
                raise ParseError("body literals must be atoms or compound terms", rc.line, rc.col)
        clause = Clause(head, body, rc.line)
        clauses.setdefault(clause.key, []).append(clause)

    by_name: dict[str, set[int]] = {}
    for k in clauses:
        by_name.setdefault(k[0], set()).add(k[1])
    for key, b in decls.items():
        if key not in clauses and b.trust is None and key[0] in by_name:
            arities = ", ".join(str(a) for a in sorted(by_name[key[0]]))
            raise ParseError(
                f"declaration for {pred_str(key)} does not match clause arity ({key[0]}/{arities})", 0, 0
            )

    preds: dict[PredKey, Predicate] = {}
    for key in list(clauses) + [k for k in decls if k not in clauses]:
        b = decls.get(key, _DeclBuilder(key))
        cl = clauses.get(key, [])
        mutex = b.mutex if b.mutex is not None else _default_mutex(cl, b.modes)
        decl = PredicateDecl(
            name=key[0],
            arity=key[1],
            modes=b.modes,
            measures=b.measures,
            sols=b.sols if b.sols is not None else sympy.Integer(1),
            mutex_groups=mutex,
            trust_cost=MappingProxyType(dict(b.trust)) if b.trust is not None else None,
            out_sizes=MappingProxyType(dict(b.out_sizes or {})),
        )
        preds[key] = Predicate(decl, tuple(cl))
    if not entries:
        entries = [k for k, p in preds.items() if p.clauses]
    return Program(MappingProxyType(preds), tuple(entries), source_text)


def _flatten_conj(t: Term, line: int, col: int) -> tuple[Term, ...]:
    out = []
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Struct) and t.key == (",", 2):
            stack.append(t.args[1])
            stack.append(t.args[0])
        elif isinstance(t, Struct) and t.key in ((";", 2), ("->", 2)):
            raise ParseError("disjunction and if-then-else are not supported", line, col)
        else:
            out.append(t)
    return tuple(out)


# -- validation -----------------------------------------------------------


def _int_consts(t: Term):
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, int):
            yield t
        elif isinstance(t, Struct):
            stack.extend(t.args)


def validate_program(p: Program) -> list[Diagnostic]:
    """Check the program invariants; returns diagnostics (empty when clean)."""
    diags: list[Diagnostic] = []
    for key, pred in p.predicates.items():
        d = pred.decl
        if d.modes is not None and len(d.modes) != d.arity:
            diags.append(Diagnostic("error", f"arity mismatch: mode list has {len(d.modes)} entries", key))
        if d.measures is not None and len(d.measures) != d.arity:
            diags.append(
                Diagnostic("error", f"arity mismatch: measure list has {len(d.measures)} entries", key)
            )
        for pos in d.out_sizes:
            if pos >= d.arity:
                diags.append(Diagnostic("error", "arity mismatch: size list longer than arity", key))
            elif d.modes is not None and pos < len(d.modes) and d.modes[pos] is not Mode.OUT:
                diags.append(Diagnostic("warning", f"size given for input argument {pos + 1}", key))
        n = len(pred.clauses)
        if d.mutex_groups is not None and n:
            flat = sorted(i for g in d.mutex_groups for i in g)
            if flat != list(range(n)):
                diags.append(
                    Diagnostic("error", "mutex groups must partition the clauses exactly once each", key)
                )
        if d.measures is not None and d.modes is not None and len(d.measures) == d.arity:
            for c in pred.clauses:
                for i, (arg, me) in enumerate(zip(c.head_args, d.measures)):
                    if me is Measure.INT and any(v < 0 for v in _int_consts(arg)):
                        diags.append(
                            Diagnostic(
                                "error",
                                f"int-value measure on argument {i + 1} sees a negative integer",
                                key,
                                c.line,
                            )
                        )
        for c in pred.clauses:
            for lit in c.body:
                lk = principal_key(lit)
                if lk == ("!", 0):
                    diags.append(Diagnostic("error", "cut is not supported", key, c.line))
                elif lk not in BUILTINS and (
                    lk not in p.predicates
                    or (not p.clauses(lk) and p.decl(lk).trust_cost is None)
                ):
                    diags.append(
                        Diagnostic("error", f"call to undefined predicate {pred_str(lk)}", key, c.line)
                    )
    for key in p.reachable():
        if key not in p.predicates:
            if not any(x.message.endswith(pred_str(key)) for x in diags):
                diags.append(Diagnostic("error", f"entry point {pred_str(key)} is undefined", key))
            continue
        d = p.decl(key)
        if d.trust_cost is not None and not p.clauses(key):
            continue
        if d.modes is None:
            diags.append(Diagnostic("error", "missing mode declaration", key))
        if d.measures is None:
            diags.append(Diagnostic("error", "missing measure declaration", key))
    return diags


__all__ = [
    "BUILTINS",
    "CONS",
    "Clause",
    "Diagnostic",
    "Measure",
    "Mode",
    "ParseError",
    "Predicate",
    "PredicateDecl",
    "Program",
    "is_arith_goal",
    "parse_program",
    "pred_str",
    "size_symbol",
    "term_to_expr",
    "validate_program",
]
