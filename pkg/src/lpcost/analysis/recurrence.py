"""Cost recurrences and their solutions.

A :class:`Recurrence` has one case per clause.  Each case carries the
clause guard on the size parameters, the clause-local event count and the
weighted calls to other predicates (including the predicate itself).

:func:`solve_recurrence` finds a closed form for first-order recurrences
``f(n) = a*f(n-1) + g(n)`` with constant ``a >= 1`` by unrolling the
recurrence into a sum and evaluating it symbolically; anything else is
left to the memoized :class:`Evaluator`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping

import sympy

from ..lang.program import pred_str, size_symbol
from .sizes import Guard


class CostError(Exception):
    pass


class NonTerminationError(CostError):
    """The recurrence does not decrease on any well-founded size."""


class DomainError(CostError):
    """A cost function was evaluated outside its domain."""


# -- exact evaluation of sympy expressions ------------------------------


def _compile(expr: sympy.Expr) -> Callable[[Mapping], Fraction]:
    if expr.is_Integer:
        v = Fraction(int(expr))
        return lambda env: v
    if expr.is_Rational:
        v = Fraction(int(expr.p), int(expr.q))
        return lambda env: v
    if expr.is_Symbol:
        name = expr
        return lambda env: Fraction(env[name])
    if expr.is_Add:
        parts = [_compile(a) for a in expr.args]
        return lambda env: sum((f(env) for f in parts), Fraction(0))
    if expr.is_Mul:
        parts = [_compile(a) for a in expr.args]

        def mul(env):
            out = Fraction(1)
            for f in parts:
                out *= f(env)
            return out

        return mul
    if expr.is_Pow:
        base, exp = _compile(expr.args[0]), _compile(expr.args[1])

        def power(env):
            e = exp(env)
            if e.denominator != 1:
                raise DomainError(f"non-integer exponent in {expr}")
            return base(env) ** int(e)

        return power
    if isinstance(expr, (sympy.Max, sympy.Min)):
        parts = [_compile(a) for a in expr.args]
        pick = max if isinstance(expr, sympy.Max) else min
        return lambda env: pick(f(env) for f in parts)
    raise CostError(f"cannot evaluate expression {expr}")


class ExactExpr:
    """A sympy expression evaluated with exact rational arithmetic."""

    __slots__ = ("expr", "_fn")

    def __init__(self, expr: sympy.Expr) -> None:
        self.expr = sympy.sympify(expr)
        self._fn = _compile(self.expr)

    def __call__(self, sizes: Mapping[int, int]) -> Fraction:
        env = {size_symbol(pos + 1): n for pos, n in sizes.items()}
        try:
            return self._fn(env)
        except KeyError as exc:
            raise DomainError(f"missing size {exc.args[0]} for {self.expr}") from None


@lru_cache(maxsize=4096)
def exact(expr: sympy.Expr) -> ExactExpr:
    return ExactExpr(expr)


# -- recurrences ------------------------------------------------------------


@dataclass(frozen=True)
class CallTerm:
    callee: tuple
    weight: sympy.Expr  # product of solution counts of the preceding literals
    sizes: Mapping[int, sympy.Expr]


@dataclass(frozen=True)
class RecurrenceCase:
    clause_index: int
    guard: Guard
    constant: sympy.Expr
    calls: tuple[CallTerm, ...]

    def self_calls(self, pred) -> tuple[CallTerm, ...]:
        return tuple(c for c in self.calls if c.callee == pred)

    def is_base(self, pred) -> bool:
        return not self.self_calls(pred)


@dataclass(frozen=True)
class Recurrence:
    pred: tuple
    metric: object
    params: tuple[int, ...]  # 0-based argument positions of the size variables
    cases: tuple[RecurrenceCase, ...]
    groups: tuple[tuple[int, ...], ...]  # mutually exclusive case groups (clause indices)

    @property
    def base_cases(self) -> tuple[RecurrenceCase, ...]:
        return tuple(c for c in self.cases if c.is_base(self.pred))

    @property
    def recursive_cases(self) -> tuple[RecurrenceCase, ...]:
        return tuple(c for c in self.cases if not c.is_base(self.pred))

    def describe(self) -> str:
        args = ",".join(f"n{p + 1}" for p in self.params)
        lines = []
        for case in self.cases:
            terms = [str(case.constant)] if case.constant != 0 or not case.calls else []
            for call in case.calls:
                inner = ",".join(str(call.sizes[p]) for p in sorted(call.sizes))
                name = "f" if call.callee == self.pred else f"cost[{pred_str(call.callee)}]"
                w = "" if call.weight == 1 else f"{call.weight}*"
                terms.append(f"{w}{name}({inner})")
            lines.append(f"f({args}) = {' + '.join(terms)}   if {case.guard.describe()}")
        return "\n".join(lines)

    def check_well_founded(self) -> None:
        """Every self call must shrink some size by a positive constant and
        grow none of them."""
        for case in self.recursive_cases:
            for call in case.self_calls(self.pred):
                decreasing = False
                for pos in self.params:
                    diff = sympy.expand(call.sizes.get(pos, size_symbol(pos + 1)) - size_symbol(pos + 1))
                    if not diff.is_number:
                        raise NonTerminationError(
                            f"{pred_str(self.pred)}: size of argument {pos + 1} changes non-uniformly "
                            f"({call.sizes.get(pos)}) in clause {case.clause_index + 1}"
                        )
                    if diff > 0:
                        raise NonTerminationError(
                            f"{pred_str(self.pred)}: argument {pos + 1} grows in the recursive call "
                            f"of clause {case.clause_index + 1}"
                        )
                    if diff < 0:
                        decreasing = True
                if not decreasing:
                    raise NonTerminationError(
                        f"{pred_str(self.pred)}: recursive call in clause {case.clause_index + 1} "
                        "does not decrease any input size"
                    )


# -- cost functions -------------------------------------------------------


def _normalize_sizes(params: tuple[int, ...], sizes) -> dict[int, int]:
    if isinstance(sizes, Mapping):
        out = {}
        for k, v in sizes.items():
            if isinstance(k, str):
                k = int(k.lstrip("n")) - 1
            elif isinstance(k, sympy.Symbol):
                k = int(k.name[1:]) - 1
            out[k] = v
    else:
        if isinstance(sizes, int):
            sizes = (sizes,)
        sizes = tuple(sizes)
        if len(sizes) != len(params):
            raise DomainError(f"expected {len(params)} sizes, got {len(sizes)}")
        out = dict(zip(params, sizes))
    for pos in params:
        if pos not in out:
            raise DomainError(f"missing size for n{pos + 1}")
        n = out[pos]
        if isinstance(n, Fraction) and n.denominator == 1:
            n = int(n)
            out[pos] = n
        if not isinstance(n, int) or n < 0:
            raise DomainError(f"size n{pos + 1}={n!r} is not a natural number")
    return {pos: out[pos] for pos in params}


class CostFunction:
    """Cost of one predicate for one metric as a function of input sizes."""

    form: str = ""
    params: tuple[int, ...] = ()

    def __call__(self, sizes) -> Fraction:
        return self.evaluate(_normalize_sizes(self.params, sizes))

    def evaluate(self, sizes: dict[int, int]) -> Fraction:  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(f"n{p + 1}" for p in self.params)


@dataclass(frozen=True)
class Piece:
    guard: Guard
    expr: sympy.Expr


class ClosedForm(CostFunction):
    """Piecewise closed form; the first piece whose guard admits the sizes applies."""

    form = "closed"

    def __init__(self, params: tuple[int, ...], pieces) -> None:
        self.params = tuple(params)
        self.pieces = tuple(Piece(pc.guard, sympy.sympify(pc.expr)) for pc in pieces)
        self._compiled = [ExactExpr(pc.expr) for pc in self.pieces]

    @classmethod
    def total(cls, params, expr) -> ClosedForm:
        return cls(params, [Piece(Guard({}), expr)])

    @property
    def expr(self) -> sympy.Expr:
        """Expression of the main (last, unbounded) piece."""
        return self.pieces[-1].expr

    def evaluate(self, sizes: dict[int, int]) -> Fraction:
        for pc, fn in zip(self.pieces, self._compiled):
            if pc.guard.admits(sizes):
                return fn(sizes)
        raise DomainError(f"no piece of {self.describe()} covers sizes {sizes}")

    def describe(self) -> str:
        from ..lang.printer import format_expr

        if len(self.pieces) == 1 and not self.pieces[0].guard.constrained():
            return format_expr(self.pieces[0].expr)
        return "; ".join(f"{format_expr(pc.expr)} if {pc.guard.describe()}" for pc in self.pieces)

    def domain(self) -> str:
        return " or ".join(pc.guard.describe() for pc in self.pieces)

    def __repr__(self) -> str:
        return f"ClosedForm({self.describe()})"


class Evaluator(CostFunction):
    """Exact, memoized numeric evaluation of a recurrence."""

    form = "evaluator"

    def __init__(self, recurrence: Recurrence, evaluate: Callable) -> None:
        self.recurrence = recurrence
        self.params = recurrence.params
        self._evaluate = evaluate

    def evaluate(self, sizes: dict[int, int]) -> Fraction:
        return self._evaluate(self.recurrence.pred, self.recurrence.metric, sizes)

    def describe(self) -> str:
        return "evaluator"

    def __repr__(self) -> str:
        return f"Evaluator({pred_str(self.recurrence.pred)}, {self.recurrence.metric})"


# -- symbolic solving -------------------------------------------------------


class _NoClosedForm(Exception):
    pass


def _expr_range(e: sympy.Expr, context: Guard) -> tuple[sympy.Expr, sympy.Expr | None]:
    """Range of a size expression over the context, assuming it is
    nondecreasing in every size variable."""
    if e.is_number:
        return e, e
    low = {s: context.interval(int(s.name[1:]) - 1)[0] for s in e.free_symbols}
    high = {}
    for s in e.free_symbols:
        hi = context.interval(int(s.name[1:]) - 1)[1]
        if hi is None:
            high = None
            break
        high[s] = hi
    lo_v = e.subs(low)
    hi_v = None if high is None else e.subs(high)
    return lo_v, hi_v


def select_piece(cf: ClosedForm, sizes: Mapping[int, sympy.Expr], context: Guard) -> sympy.Expr:
    """Pick the piece of ``cf`` that applies to the symbolic call ``sizes``
    everywhere in ``context`` and return it instantiated."""
    subs = {size_symbol(p + 1): e for p, e in sizes.items()}
    for pc in cf.pieces:
        implied = True
        possible = True
        for pos, (lo, hi) in pc.guard.bounds.items():
            e = sizes.get(pos)
            if e is None:
                implied = False
                continue
            emin, emax = _expr_range(e, context)
            if hi is not None and emin > hi or emax is not None and emax < lo:
                possible = False
                break
            if emin < lo or hi is not None and (emax is None or emax > hi):
                implied = False
        if not possible:
            continue
        if implied:
            return pc.expr.subs(subs, simultaneous=True)
        raise _NoClosedForm(f"call sizes {dict(sizes)} straddle pieces of {cf.describe()}")
    raise _NoClosedForm(f"no piece of {cf.describe()} applies to {dict(sizes)}")


def _verify(closed: sympy.Expr, n: sympy.Symbol, a, g: sympy.Expr, base_at: int, base_val) -> bool:
    residual = sympy.simplify(closed - (a * closed.subs(n, n - 1) + g))
    start = sympy.simplify(closed.subs(n, base_at) - base_val)
    return residual == 0 and start == 0


def _tidy(e: sympy.Expr) -> sympy.Expr:
    return sympy.expand(sympy.powsimp(sympy.expand(e)))


def solve_recurrence(r: Recurrence, resolve: Callable | None = None, evaluate: Callable | None = None) -> CostFunction:
    """Solve ``r``.

    ``resolve(callee)`` returns the CostFunction of another predicate for
    the same metric; ``evaluate(pred, metric, sizes)`` backs the
    :class:`Evaluator` fallback.
    """
    r.check_well_founded()
    try:
        return _closed_form(r, resolve)
    except _NoClosedForm:
        if evaluate is None:
            evaluate = _standalone_evaluator(r, resolve)
        return Evaluator(r, evaluate)


def _case_value(r: Recurrence, case: RecurrenceCase, resolve) -> tuple[sympy.Expr, list[CallTerm]]:
    """Clause cost with every non-self call replaced by its closed form."""
    value = sympy.sympify(case.constant)
    own = []
    for call in case.calls:
        if call.callee == r.pred:
            own.append(call)
            continue
        if resolve is None:
            raise _NoClosedForm("callee costs unavailable")
        cf = resolve(call.callee)
        if not isinstance(cf, ClosedForm):
            raise _NoClosedForm(f"{pred_str(call.callee)} has no closed form")
        value += call.weight * select_piece(cf, call.sizes, case.guard)
    return sympy.expand(value), own


def _closed_form(r: Recurrence, resolve) -> ClosedForm:
    if len(r.groups) != 1:
        raise _NoClosedForm("clauses are not mutually exclusive")
    cases = r.cases
    for i, c1 in enumerate(cases):
        for c2 in cases[i + 1 :]:
            if not c1.guard.disjoint(c2.guard):
                raise _NoClosedForm("clause guards overlap")
    values = []
    for case in cases:
        value, own = _case_value(r, case, resolve)
        values.append((case, value, own))
    recursive = [v for v in values if v[2]]
    if not recursive:
        return ClosedForm(r.params, [Piece(c.guard, v) for c, v, _ in values])
    if len(recursive) != 1:
        raise _NoClosedForm("more than one recursive clause")
    rcase, g, own = recursive[0]
    weights = sympy.expand(sum(c.weight for c in own))
    if weights.free_symbols or weights < 1:
        raise _NoClosedForm("non-constant recurrence coefficient")
    driver = None
    for call in own:
        for pos in r.params:
            diff = sympy.expand(call.sizes[pos] - size_symbol(pos + 1))
            if diff == 0:
                continue
            if diff != -1:
                raise _NoClosedForm("size decrement other than one")
            if driver not in (None, pos):
                raise _NoClosedForm("several sizes drive the recursion")
            driver = pos
    lo, hi = rcase.guard.interval(driver)
    if hi is not None or any(p != driver for p in rcase.guard.constrained()):
        raise _NoClosedForm("recursive clause guard is not n >= k")
    base_pieces: dict[int, sympy.Expr] = {}
    for case, value, _ in values:
        if case is rcase:
            continue
        blo, bhi = case.guard.interval(driver)
        if blo != bhi or any(p != driver for p in case.guard.constrained()):
            raise _NoClosedForm("base clause guard is not a point")
        base_pieces[blo] = value
    start = lo - 1
    if start < 0 or start not in base_pieces:
        raise _NoClosedForm(f"no base case at n{driver + 1}={start}")
    n = size_symbol(driver + 1)
    k = sympy.Dummy("k", integer=True, nonnegative=True)
    a = weights
    term = a ** (n - k) * g.subs(n, k) if a != 1 else g.subs(n, k)
    total = sympy.summation(term, (k, lo, n))
    closed = _tidy(a ** (n - start) * base_pieces[start] + total)
    if closed.has(sympy.Sum, sympy.Piecewise) or not _verify(closed, n, a, g, start, base_pieces[start]):
        raise _NoClosedForm("summation did not produce a verified closed form")
    main_lo = start
    for point in sorted((p for p in base_pieces if p < start), reverse=True):
        if point != main_lo - 1 or sympy.simplify(closed.subs(n, point) - base_pieces[point]) != 0:
            break
        main_lo = point
    pieces = [Piece(Guard({driver: (p, p)}), v) for p, v in sorted(base_pieces.items()) if p < main_lo]
    pieces.append(Piece(Guard({driver: (main_lo, None)} if main_lo > 0 else {}), closed))
    return ClosedForm(r.params, pieces)


def _standalone_evaluator(r: Recurrence, resolve) -> Callable:
    memo: dict = {}

    def evaluate(pred, metric, sizes):
        if pred != r.pred:
            return resolve(pred)(sizes)
        return evaluate_recurrence(r, sizes, evaluate, memo, set())

    return evaluate


def evaluate_recurrence(r: Recurrence, sizes: Mapping[int, int], evaluate: Callable, memo: dict, active: set) -> Fraction:
    """Numeric value of ``r`` at concrete sizes.

    ``evaluate(pred, metric, sizes)`` supplies the value of any called
    predicate (including ``r.pred`` itself).
    """
    key = (r.pred, r.metric, tuple(sizes[p] for p in r.params))
    if key in memo:
        return memo[key]
    if key in active:
        raise NonTerminationError(f"{pred_str(r.pred)} calls itself with unchanged sizes {dict(sizes)}")
    active.add(key)
    try:
        by_clause = {c.clause_index: c for c in r.cases}
        total = None
        for group in r.groups:
            best = None
            for idx in group:
                case = by_clause.get(idx)
                if case is None or not case.guard.admits(sizes):
                    continue
                value = exact(case.constant)(sizes)
                for call in case.calls:
                    callee_sizes = {}
                    for pos, e in call.sizes.items():
                        v = exact(e)(sizes)
                        if v.denominator != 1 or v < 0:
                            raise DomainError(
                                f"{pred_str(call.callee)} called with size n{pos + 1}={v} "
                                f"from {pred_str(r.pred)} at {dict(sizes)}"
                            )
                        callee_sizes[pos] = int(v)
                    w = exact(call.weight)(sizes)
                    if w:
                        value += w * evaluate(call.callee, r.metric, callee_sizes)
                best = value if best is None else max(best, value)
            if best is not None:
                total = best if total is None else total + best
        if total is None:
            raise DomainError(f"no clause of {pred_str(r.pred)} applies at sizes {dict(sizes)}")
        memo[key] = total
        return total
    finally:
        active.discard(key)


__all__ = [
    "CallTerm",
    "ClosedForm",
    "CostError",
    "CostFunction",
    "DomainError",
    "Evaluator",
    "ExactExpr",
    "NonTerminationError",
    "Piece",
    "Recurrence",
    "RecurrenceCase",
    "evaluate_recurrence",
    "select_piece",
    "solve_recurrence",
]
