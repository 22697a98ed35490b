"""Size relations: argument sizes of body literals as functions of head sizes.

Only structural patterns are inferred: head arguments passed through,
list tails under the list-length measure, ``is/2`` results under the
int-value measure and explicitly constructed terms.  Sizes of variables
bound by an earlier call come from that callee's ``:- size`` declaration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import sympy

from ..lang.program import (
    BUILTINS,
    COMPARISONS,
    Measure,
    Mode,
    PredicateDecl,
    Program,
    pred_str,
    size_symbol,
)
from ..lang.terms import CONS, NIL, Struct, Term, Var, is_number, list_items, principal_key


class SizeError(Exception):
    """A body-literal argument size could not be determined."""


@dataclass(frozen=True)
class Guard:
    """Interval constraints ``lo <= n <= hi`` on size parameters.

    Keys are 0-based argument positions; ``hi`` of ``None`` is unbounded.
    Positions without an entry are unconstrained (``0..inf``).
    """

    bounds: Mapping[int, tuple[int, int | None]] = field(default_factory=dict)

    def interval(self, pos: int) -> tuple[int, int | None]:
        return self.bounds.get(pos, (0, None))

    def admits(self, sizes: Mapping[int, int]) -> bool:
        for pos, (lo, hi) in self.bounds.items():
            n = sizes.get(pos)
            if n is None:
                continue
            if n < lo or (hi is not None and n > hi):
                return False
        return True

    def disjoint(self, other: Guard) -> bool:
        for pos in set(self.bounds) | set(other.bounds):
            lo1, hi1 = self.interval(pos)
            lo2, hi2 = other.interval(pos)
            if (hi1 is not None and hi1 < lo2) or (hi2 is not None and hi2 < lo1):
                return True
        return False

    def is_point(self, pos: int) -> bool:
        lo, hi = self.interval(pos)
        return hi == lo

    def constrained(self) -> tuple[int, ...]:
        return tuple(p for p, b in self.bounds.items() if b != (0, None))

    def describe(self, names=None) -> str:
        parts = []
        for pos in sorted(self.bounds):
            lo, hi = self.bounds[pos]
            n = f"n{pos + 1}" if names is None else names[pos]
            if hi is None:
                if lo > 0:
                    parts.append(f"{n}>={lo}")
            elif lo == hi:
                parts.append(f"{n}={lo}")
            else:
                parts.append(f"{lo}<={n}<={hi}")
        return ",".join(parts) if parts else "true"

    def with_bound(self, pos: int, lo: int | None = None, hi: int | None = None) -> Guard:
        cur_lo, cur_hi = self.interval(pos)
        new_lo = cur_lo if lo is None else max(cur_lo, lo)
        if hi is None:
            new_hi = cur_hi
        else:
            new_hi = hi if cur_hi is None else min(cur_hi, hi)
        bounds = dict(self.bounds)
        bounds[pos] = (new_lo, new_hi)
        return Guard(bounds)


@dataclass(frozen=True)
class LiteralSizes:
    """Input sizes of one user-predicate call in a clause body."""

    index: int  # position in the clause body
    callee: tuple
    sizes: Mapping[int, sympy.Expr]  # callee argument position -> size expression
    sols: sympy.Expr


@dataclass(frozen=True)
class ClauseSizes:
    clause_index: int
    guard: Guard
    calls: tuple[LiteralSizes, ...]


def params_of(decl: PredicateDecl) -> tuple[int, ...]:
    return decl.size_params()


def measure_of(t: Term, m: Measure) -> int | None:
    """Concrete size of a ground (or sufficiently instantiated) term."""
    if m is Measure.LENGTH:
        items, tail = list_items(t)
        return len(items) if tail == NIL else None
    if m is Measure.INT:
        return t if isinstance(t, int) and not isinstance(t, bool) else None
    if m is Measure.SIZE:
        if isinstance(t, Var):
            return None
        if isinstance(t, Struct):
            parts = [measure_of(a, m) for a in t.args]
            return None if None in parts else 1 + sum(parts)
        return 1
    if m is Measure.DEPTH:
        if isinstance(t, Var):
            return None
        if isinstance(t, Struct):
            parts = [measure_of(a, m) for a in t.args]
            return None if None in parts else 1 + max(parts)
        return 0
    return None


class _SizeEnv:
    def __init__(self) -> None:
        self.known: dict[Var, dict[Measure, sympy.Expr]] = {}
        self.alias: dict[Var, Term] = {}

    def bind(self, v: Var, m: Measure, e: sympy.Expr) -> None:
        self.known.setdefault(v, {}).setdefault(m, sympy.expand(e))

    def bound(self, v: Var) -> bool:
        return v in self.known or v in self.alias

    def size_of(self, t: Term, m: Measure) -> sympy.Expr | None:
        if isinstance(t, Var):
            if m in self.known.get(t, {}):
                return self.known[t][m]
            if t in self.alias:
                return self.size_of(self.alias[t], m)
            return None
        if m is Measure.INT:
            return self.int_expr(t)
        if m is Measure.LENGTH:
            if t == NIL:
                return sympy.Integer(0)
            if isinstance(t, Struct) and t.key == (CONS, 2):
                rest = self.size_of(t.args[1], m)
                return None if rest is None else 1 + rest
            return None
        if m is Measure.SIZE:
            if isinstance(t, Struct):
                parts = [self.size_of(a, m) for a in t.args]
                return None if any(p is None for p in parts) else 1 + sum(parts)
            return sympy.Integer(1)
        if m is Measure.DEPTH:
            if isinstance(t, Struct):
                parts = [self.size_of(a, m) for a in t.args]
                return None if any(p is None for p in parts) else 1 + sympy.Max(*parts)
            return sympy.Integer(0)
        return None

    def int_expr(self, t: Term) -> sympy.Expr | None:
        if isinstance(t, int) and not isinstance(t, bool):
            return sympy.Integer(t)
        if isinstance(t, Var):
            return self.size_of(t, Measure.INT)
        if isinstance(t, Struct) and t.arity == 2 and t.functor in ("+", "-", "*"):
            a, b = self.int_expr(t.args[0]), self.int_expr(t.args[1])
            if a is None or b is None:
                return None
            return {"+": a + b, "-": a - b, "*": a * b}[t.functor]
        return None


def _head_guard_and_env(args: tuple[Term, ...], decl: PredicateDecl, env: _SizeEnv) -> Guard:
    guard = Guard({})
    for pos in params_of(decl):
        arg = args[pos]
        m = decl.measures[pos]
        sym = size_symbol(pos + 1)
        if isinstance(arg, Var):
            env.bind(arg, m, sym)
            continue
        if m is Measure.LENGTH:
            items, tail = list_items(arg)
            if tail == NIL:
                guard = guard.with_bound(pos, len(items), len(items))
            elif isinstance(tail, Var):
                guard = guard.with_bound(pos, len(items))
                env.bind(tail, m, sym - len(items))
        elif m is Measure.INT:
            if isinstance(arg, int):
                guard = guard.with_bound(pos, arg, arg)
        elif m in (Measure.SIZE, Measure.DEPTH):
            exact = measure_of(arg, m)
            if exact is not None:
                guard = guard.with_bound(pos, exact, exact)
            elif isinstance(arg, Struct):
                guard = guard.with_bound(pos, 1 if m is Measure.DEPTH else 2)
    return guard


_FLIP = {"<": ">", ">": "<", "=<": ">=", ">=": "=<", "=:=": "=:=", "=\\=": "=\\="}


def _refine_guard(guard: Guard, goal: Struct, env: _SizeEnv, decl: PredicateDecl) -> Guard:
    """Tighten ``guard`` with a comparison between a head int argument and a constant."""
    a, b = goal.args
    op = goal.functor
    if isinstance(a, int) and isinstance(b, Var):
        a, b, op = b, a, _FLIP[op]
    if not (isinstance(a, Var) and isinstance(b, int)):
        return guard
    e = env.known.get(a, {}).get(Measure.INT)
    if e is None or not isinstance(e, sympy.Symbol):
        return guard
    pos = int(e.name[1:]) - 1
    if pos not in params_of(decl):
        return guard
    if op == ">":
        return guard.with_bound(pos, lo=b + 1)
    if op == ">=":
        return guard.with_bound(pos, lo=b)
    if op == "<":
        return guard.with_bound(pos, hi=b - 1)
    if op == "=<":
        return guard.with_bound(pos, hi=b)
    if op == "=:=":
        return guard.with_bound(pos, lo=b, hi=b)
    return guard


def _callee_decl(p: Program, key) -> PredicateDecl:
    if key not in p.predicates:
        raise SizeError(f"call to undefined predicate {pred_str(key)}")
    return p.decl(key)


def clause_sizes(p: Program, pred, index: int) -> ClauseSizes:
    decl = p.decl(pred)
    clause = p.clauses(pred)[index]
    env = _SizeEnv()
    guard = _head_guard_and_env(clause.head_args, decl, env)
    calls = []
    for li, lit in enumerate(clause.body):
        key = principal_key(lit)
        if key in BUILTINS:
            if key == ("is", 2):
                lhs, rhs = lit.args
                if isinstance(lhs, Var) and not env.bound(lhs):
                    e = env.int_expr(rhs)
                    if e is not None:
                        env.bind(lhs, Measure.INT, e)
            elif key == ("=", 2):
                lhs, rhs = lit.args
                if isinstance(lhs, Var) and not env.bound(lhs):
                    env.alias[lhs] = rhs
                elif isinstance(rhs, Var) and not env.bound(rhs):
                    env.alias[rhs] = lhs
            elif key[0] in COMPARISONS:
                guard = _refine_guard(guard, lit, env, decl)
            continue
        cdecl = _callee_decl(p, key)
        args = lit.args if isinstance(lit, Struct) else ()
        sizes: dict[int, sympy.Expr] = {}
        needed = params_of(cdecl)
        if cdecl.modes is None or cdecl.measures is None:
            if cdecl.trust_cost is not None and not any(
                e.free_symbols for e in cdecl.trust_cost.values()
            ):
                needed = ()
            else:
                raise SizeError(f"{pred_str(key)} lacks mode/measure declarations")
        for pos in needed:
            m = cdecl.measures[pos]
            e = env.size_of(args[pos], m)
            if e is None:
                raise SizeError(
                    f"cannot determine {m.value} size of argument {pos + 1} in call to "
                    f"{pred_str(key)} (clause {index + 1} of {pred_str(pred)}, line {clause.line}); "
                    f"add a :- size declaration for the predicate producing it"
                )
            sizes[pos] = sympy.expand(e)
        subs = {size_symbol(pos + 1): e for pos, e in sizes.items()}
        sols = cdecl.sols.subs(subs, simultaneous=True) if cdecl.sols.free_symbols else cdecl.sols
        if cdecl.modes is not None and cdecl.measures is not None:
            for pos, mode in enumerate(cdecl.modes):
                arg = args[pos]
                if mode is not Mode.OUT or not isinstance(arg, Var) or env.bound(arg):
                    continue
                out = cdecl.out_sizes.get(pos)
                if out is None or not out.free_symbols <= set(subs):
                    continue
                env.bind(arg, cdecl.measures[pos], out.subs(subs, simultaneous=True))
        calls.append(LiteralSizes(li, key, sizes, sympy.expand(sols)))
    return ClauseSizes(index, guard, tuple(calls))


def size_relations(pred, p: Program) -> list[ClauseSizes]:
    """Per-clause sizes of every user-call input argument, plus clause guards.

    Raises :class:`SizeError` when a size cannot be inferred.
    """
    decl = p.decl(pred)
    if decl.measures is None or decl.modes is None:
        raise SizeError(f"{pred_str(pred)} lacks mode/measure declarations")
    return [clause_sizes(p, pred, i) for i in range(len(p.clauses(pred)))]


def input_sizes(decl: PredicateDecl, args) -> dict[int, int]:
    """Measure the actual input arguments of a call (used by callers of the vm)."""
    out = {}
    for pos in params_of(decl):
        n = measure_of(args[pos], decl.measures[pos])
        if n is None:
            raise SizeError(f"argument {pos + 1} of {pred_str(decl.key)} has no {decl.measures[pos].value} size")
        if n < 0:
            raise SizeError(f"negative size for argument {pos + 1} of {pred_str(decl.key)}")
        out[pos] = n
    return out


__all__ = [
    "ClauseSizes",
    "Guard",
    "LiteralSizes",
    "SizeError",
    "clause_sizes",
    "input_sizes",
    "measure_of",
    "params_of",
    "size_relations",
]
