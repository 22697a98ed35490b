"""SLD resolution engine with an event-counting and an uninstrumented path.

Clauses are compiled once into patterns in which clause variables become
numbered slots; a resolution allocates a fresh frame of slots instead of
copying the clause.  Head unification walks the head pattern against the
call arguments, so in the counting path every head node visited is tallied
as it is matched or written.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from ..analysis.metrics import GIUNIF, GOUNIF, NARGS, STEP, VIUNIF, VOUNIF, Metric
from ..lang.program import BUILTINS, Mode, Program, pred_str
from ..lang.terms import Struct, Term, Var, deref, principal_key, resolve, variables


class VMError(Exception):
    pass


class UnknownPredicateError(VMError):
    pass


class ModeError(VMError):
    pass


class ArithmeticError_(VMError):
    pass


class DepthLimitError(VMError):
    pass


class EventCounts(Counter):
    """Tallies of low-level events, keyed by :class:`Metric`."""

    def __getitem__(self, key):
        if isinstance(key, str):
            key = Metric.parse(key)
        return super().__getitem__(key)

    def __add__(self, other):
        out = EventCounts(self)
        out.update(other)
        return out

    def as_dict(self) -> dict[str, int]:
        return {str(k): v for k, v in sorted(self.items()) if v}


# -- compiled clause patterns ------------------------------------------------


class Slot:
    __slots__ = ("index",)

    def __init__(self, index: int) -> None:
        self.index = index


class PStruct:
    """A compound pattern containing at least one slot."""

    __slots__ = ("functor", "args", "size")

    def __init__(self, functor: str, args: tuple) -> None:
        self.functor = functor
        self.args = args
        self.size = 1 + sum(_pattern_size(a) for a in args)


def _pattern_size(t) -> int:
    if type(t) is PStruct:
        return t.size
    if type(t) is Struct:
        return 1 + sum(_pattern_size(a) for a in t.args)
    return 1


def _compile_term(t: Term, slots: dict):
    if isinstance(t, Var):
        if t not in slots:
            slots[t] = Slot(len(slots))
        return slots[t]
    if isinstance(t, Struct):
        args = tuple(_compile_term(a, slots) for a in t.args)
        if any(type(a) in (Slot, PStruct) for a in args):
            return PStruct(t.functor, args)
        return Struct(t.functor, args)
    return t


_CALL, _IS, _CMP, _EQ, _TRUE = range(5)


@dataclass
class _Literal:
    kind: int
    key: tuple
    args: tuple
    events: tuple = ()


def _operator_nodes(t, out: Counter) -> None:
    """Count operator occurrences in an expression pattern (slots cost nothing)."""
    if type(t) in (PStruct, Struct):
        out[Metric.arith(t.functor, len(t.args))] += 1
        for a in t.args:
            _operator_nodes(a, out)


def _make_literal(key, args) -> _Literal:
    if key == ("true", 0):
        return _Literal(_TRUE, key, (), ((Metric.builtin("true", 0), 1),))
    if key == ("=", 2):
        return _Literal(_EQ, key, args, ((Metric.builtin("=", 2), 1),))
    if key in BUILTINS:
        ops: Counter = Counter()
        for a in args if key != ("is", 2) else args[1:]:
            _operator_nodes(a, ops)
        events = ((Metric.builtin(*key), 1),) + tuple(ops.items())
        return _Literal(_IS if key == ("is", 2) else _CMP, key, args, events)
    return _Literal(_CALL, key, args)


@dataclass
class _CompiledClause:
    head: tuple
    body: tuple
    nslots: int
    index: int


@dataclass
class _CompiledPred:
    key: tuple
    modes: tuple | None
    clauses: tuple
    by_first: dict = field(default_factory=dict)
    var_first: tuple = ()


def _first_key(pattern):
    if type(pattern) is Slot:
        return None
    if type(pattern) in (PStruct, Struct):
        return (pattern.functor, len(pattern.args))
    return ("#", pattern)


def _compile_pred(pred, modes) -> _CompiledPred:
    compiled = []
    for i, c in enumerate(pred.clauses):
        slots: dict = {}
        head = tuple(_compile_term(a, slots) for a in c.head_args)
        body = []
        for g in c.body:
            key = principal_key(g)
            args = tuple(_compile_term(a, slots) for a in g.args) if isinstance(g, Struct) else ()
            body.append(_make_literal(key, args))
        compiled.append(_CompiledClause(head, tuple(body), len(slots), i))
    cp = _CompiledPred(pred.key, tuple(modes) if modes is not None else None, tuple(compiled))
    if cp.key[1] > 0:
        keys = {_first_key(c.head[0]) for c in compiled} - {None}
        for k in keys:
            cp.by_first[k] = tuple(c for c in compiled if _first_key(c.head[0]) in (None, k))
        cp.var_first = tuple(c for c in compiled if _first_key(c.head[0]) is None)
    return cp


def _candidates(cp: _CompiledPred, args: tuple) -> tuple:
    if not args:
        return cp.clauses
    a = deref(args[0])
    if type(a) is Var:
        return cp.clauses
    if type(a) is Struct:
        k = (a.functor, len(a.args))
    else:
        k = ("#", a)
    return cp.by_first.get(k, cp.var_first)


# -- unification ---------------------------------------------------------------


def build(p, frame: list):
    """Instantiate a pattern in ``frame``."""
    tp = type(p)
    if tp is Slot:
        v = frame[p.index]
        if v is None:
            v = frame[p.index] = Var("_")
        return v
    if tp is PStruct:
        return Struct(p.functor, tuple([build(a, frame) for a in p.args]))
    return p


def _bind(v: Var, t, trail: list) -> None:
    v.ref = t
    trail.append(v)


def unify(a, b, trail: list) -> bool:
    stack = [(a, b)]
    while stack:
        a, b = stack.pop()
        a = deref(a)
        b = deref(b)
        if a is b:
            continue
        if type(a) is Var:
            _bind(a, b, trail)
        elif type(b) is Var:
            _bind(b, a, trail)
        elif type(a) is Struct:
            if type(b) is not Struct or a.functor != b.functor or len(a.args) != len(b.args):
                return False
            stack.extend(zip(a.args, b.args))
        elif type(a) is not type(b) or a != b:
            return False
    return True


def _unify_head(p, t, frame: list, trail: list) -> int:
    """Match head pattern ``p`` against call term ``t``.

    Returns the number of head symbols visited or written, or -1 on failure.
    """
    tp = type(p)
    if tp is Slot:
        v = frame[p.index]
        if v is None:
            frame[p.index] = t
            return 1
        return 1 if unify(v, t, trail) else -1
    t = deref(t)
    if type(t) is Var:
        _bind(t, build(p, frame), trail)
        return _pattern_size(p)
    if tp is PStruct or tp is Struct:
        if type(t) is not Struct or t.functor != p.functor or len(t.args) != len(p.args):
            return -1
        n = 1
        for pa, ta in zip(p.args, t.args):
            k = _unify_head(pa, ta, frame, trail)
            if k < 0:
                return -1
            n += k
        return n
    if type(t) is not type(p) or t != p:
        return -1
    return 1


def _match_head(p, t, frame: list, trail: list) -> bool:
    tp = type(p)
    if tp is Slot:
        v = frame[p.index]
        if v is None:
            frame[p.index] = t
            return True
        return unify(v, t, trail)
    t = deref(t)
    if type(t) is Var:
        _bind(t, build(p, frame), trail)
        return True
    if tp is PStruct or tp is Struct:
        if type(t) is not Struct or t.functor != p.functor or len(t.args) != len(p.args):
            return False
        for pa, ta in zip(p.args, t.args):
            if not _match_head(pa, ta, frame, trail):
                return False
        return True
    return type(t) is type(p) and t == p


# -- arithmetic ----------------------------------------------------------------


def _div(a, b):
    if isinstance(a, int) and isinstance(b, int) and a % b == 0:
        return a // b
    return a / b


def _intdiv(a, b):
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _rem(a, b):
    return a - b * _intdiv(a, b)


def _power(a, b):
    if isinstance(a, int) and isinstance(b, int) and b < 0:
        return a**b if a in (1, -1) else float(a) ** b
    return a**b


_BINARY = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "//": _intdiv,
    "mod": lambda a, b: a % b,
    "rem": _rem,
    "min": min,
    "max": max,
    "**": _power,
    "^": _power,
}
_UNARY = {"-": lambda a: -a, "abs": abs}
_COMPARE = {
    "=:=": lambda a, b: a == b,
    "=\\=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    ">": lambda a, b: a > b,
    "=<": lambda a, b: a <= b,
    ">=": lambda a, b: a >= b,
}


def eval_arith(t):
    t = deref(t)
    tt = type(t)
    if tt is int or tt is float:
        return t
    if tt is Var:
        raise ArithmeticError_("arithmetic on an unbound variable")
    if tt is Struct:
        if len(t.args) == 2 and t.functor in _BINARY:
            a = eval_arith(t.args[0])
            b = eval_arith(t.args[1])
            if b == 0 and t.functor in ("/", "//", "mod", "rem"):
                raise ArithmeticError_("division by zero")
            return _BINARY[t.functor](a, b)
        if len(t.args) == 1 and t.functor in _UNARY:
            return _UNARY[t.functor](eval_arith(t.args[0]))
    raise ArithmeticError_(f"not an arithmetic expression: {t!r}")


# -- the engine ------------------------------------------------------------------


@dataclass
class Outcome:
    success: bool
    bindings: dict
    counts: EventCounts

    def __bool__(self) -> bool:
        return self.success


class Engine:
    """Executes goals of one program.

    ``max_depth`` bounds the call nesting depth; deeper derivations raise
    :class:`DepthLimitError`.
    """

    def __init__(self, program: Program, max_depth: int = 100_000, check_modes: bool = True) -> None:
        self.program = program
        self.max_depth = max_depth
        self.check_modes = check_modes
        self._preds = {}
        for key, pred in program.predicates.items():
            if pred.clauses:
                self._preds[key] = _compile_pred(pred, pred.decl.modes)

    def _pred(self, key) -> _CompiledPred:
        cp = self._preds.get(key)
        if cp is None:
            raise UnknownPredicateError(f"unknown predicate {pred_str(key)}")
        return cp

    def _goal_literal(self, goal: Term) -> _Literal:
        key = principal_key(goal)
        if key is None:
            raise VMError(f"cannot call {goal!r}")
        if key not in BUILTINS:
            self._pred(key)
        return _make_literal(key, goal.args if isinstance(goal, Struct) else ())

    def solve(self, goal: Term) -> Outcome:
        """Run ``goal`` to its first solution, tallying events along the successful derivation."""
        lit = self._goal_literal(goal)
        names = {}
        for v in variables(goal):
            if v.name != "_" and not v.name.startswith("_G"):
                names.setdefault(v.name, v)
        log: list = []
        trail: list = []
        ok = self._run(lit, log, counting=True, trail=trail)
        counts = EventCounts()
        for metric, n in log:
            counts[metric] += n
        bindings = {}
        if ok:
            bindings = {name: resolve(v) for name, v in names.items()}
            _undo(trail, 0)
        return Outcome(ok, bindings, counts)

    def run(self, goal: Term) -> bool:
        """Uninstrumented execution; bindings made by the goal are undone."""
        return self._run(self._goal_literal(goal), None, counting=False)

    def run_prepared(self, lit: _Literal) -> bool:
        return self._run(lit, None, counting=False)

    def prepare(self, goal: Term) -> _Literal:
        return self._goal_literal(goal)

    def _run(self, lit: _Literal, log: list | None, counting: bool, trail: list | None = None) -> bool:
        own_trail = trail is None
        if own_trail:
            trail = []
        choices: list = []
        cont = (lit, (), 0, None)
        max_depth = self.max_depth
        preds = self._preds
        check = counting and self.check_modes
        success = False
        try:
            while True:
                if cont is None:
                    success = True
                    return True
                lit, frame, depth, nxt = cont
                kind = lit.kind
                if kind == _CALL:
                    if depth >= max_depth:
                        raise DepthLimitError(f"depth limit {max_depth} exceeded in {pred_str(lit.key)}")
                    cp = preds.get(lit.key)
                    if cp is None:
                        raise UnknownPredicateError(f"unknown predicate {pred_str(lit.key)}")
                    args = tuple([build(a, frame) for a in lit.args])
                    if check and cp.modes is not None:
                        _check_modes(cp, args)
                    cont = self._try(cp, args, _candidates(cp, args), 0, depth, nxt, trail, choices, log)
                    if cont is _NOMATCH:
                        cont = self._backtrack(trail, choices, log)
                elif kind == _IS:
                    value = eval_arith(build(lit.args[1], frame))
                    if unify(build(lit.args[0], frame), value, trail):
                        if log is not None:
                            log.extend(lit.events)
                        cont = nxt
                    else:
                        cont = self._backtrack(trail, choices, log)
                elif kind == _CMP:
                    a = eval_arith(build(lit.args[0], frame))
                    b = eval_arith(build(lit.args[1], frame))
                    if _COMPARE[lit.key[0]](a, b):
                        if log is not None:
                            log.extend(lit.events)
                        cont = nxt
                    else:
                        cont = self._backtrack(trail, choices, log)
                elif kind == _EQ:
                    if unify(build(lit.args[0], frame), build(lit.args[1], frame), trail):
                        if log is not None:
                            log.extend(lit.events)
                        cont = nxt
                    else:
                        cont = self._backtrack(trail, choices, log)
                else:
                    if log is not None:
                        log.extend(lit.events)
                    cont = nxt
                if cont is _FAIL:
                    return False
        finally:
            if own_trail or not success:
                _undo(trail, 0)

    def _try(self, cp, args, cands, start, depth, nxt, trail, choices, log):
        n = len(cands)
        i = start
        while i < n:
            c = cands[i]
            mark = len(trail)
            frame = [None] * c.nslots
            if log is not None:
                tally = _count_head(cp, c, args, frame, trail)
                ok = tally is not None
            else:
                ok = True
                for p, t in zip(c.head, args):
                    if not _match_head(p, t, frame, trail):
                        ok = False
                        break
            if ok:
                if i + 1 < n:
                    choices.append((cp, args, cands, i + 1, depth, nxt, mark, len(log) if log is not None else 0))
                if log is not None:
                    log.extend(tally)
                cont = nxt
                for lit in reversed(c.body):
                    cont = (lit, frame, depth + 1, cont)
                if cont is None:
                    return None
                return cont
            _undo(trail, mark)
            i += 1
        return _NOMATCH

    def _backtrack(self, trail, choices, log):
        while choices:
            cp, args, cands, i, depth, nxt, mark, log_mark = choices.pop()
            _undo(trail, mark)
            if log is not None:
                del log[log_mark:]
            cont = self._try(cp, args, cands, i, depth, nxt, trail, choices, log)
            if cont is not _NOMATCH:
                return cont
        return _FAIL


_FAIL = ("fail",)
_NOMATCH = ("nomatch",)


def _undo(trail: list, mark: int) -> None:
    while len(trail) > mark:
        trail.pop().ref = None


def _check_modes(cp: _CompiledPred, args: tuple) -> None:
    for i, (a, m) in enumerate(zip(args, cp.modes)):
        bound = type(deref(a)) is not Var
        if m is Mode.IN and not bound:
            raise ModeError(f"argument {i + 1} of {pred_str(cp.key)} has mode in but is unbound")
        if m is Mode.OUT and bound:
            raise ModeError(f"argument {i + 1} of {pred_str(cp.key)} has mode out but is bound")


def _count_head(cp, c, args, frame, trail):
    events = [(STEP, 1), (NARGS, len(args))]
    modes = cp.modes or (Mode.IN,) * len(args)
    for p, t, m in zip(c.head, args, modes):
        n = _unify_head(p, t, frame, trail)
        if n < 0:
            return None
        if type(p) is Slot:
            events.append((VIUNIF if m is Mode.IN else VOUNIF, 1))
        else:
            events.append((GIUNIF if m is Mode.IN else GOUNIF, n))
    return events


def solve(p: Program, goal: Term, max_depth: int = 100_000) -> Outcome:
    return Engine(p, max_depth).solve(goal)


__all__ = [
    "ArithmeticError_",
    "DepthLimitError",
    "Engine",
    "EventCounts",
    "ModeError",
    "Outcome",
    "UnknownPredicateError",
    "VMError",
    "eval_arith",
    "solve",
    "unify",
]
