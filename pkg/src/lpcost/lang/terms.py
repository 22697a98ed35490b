"""Term representation shared by the parser, the analyzer and the interpreter.

Atoms are plain ``str`` objects, numbers are ``int``/``float``.  Variables
and compound terms get their own small classes.  A variable carries a
mutable ``ref`` slot used by the interpreter for bindings; terms produced
by the parser are never bound (the interpreter always works on renamed
copies).
"""

from __future__ import annotations

from itertools import count
from typing import Iterator, Union

NIL = "[]"
CONS = "."

_fresh_ids = count()


class Var:
    __slots__ = ("name", "ref")

    def __init__(self, name: str | None = None) -> None:
        if name is None:
            name = f"_G{next(_fresh_ids)}"
        self.name = name
        self.ref: Term | None = None

    def __repr__(self) -> str:
        return f"Var({self.name!r})"


class Struct:
    """A compound term ``functor(args...)`` with at least one argument."""

    __slots__ = ("functor", "args")

    def __init__(self, functor: str, args: tuple) -> None:
        if not args:
            raise ValueError(f"compound term {functor!r} needs at least one argument")
        self.functor = functor
        self.args = tuple(args)

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def key(self) -> tuple[str, int]:
        return (self.functor, len(self.args))

    def __repr__(self) -> str:
        return f"Struct({self.functor!r}, {self.args!r})"


Term = Union[Var, Struct, str, int, float]


def is_atom(t: object) -> bool:
    return isinstance(t, str)


def is_number(t: object) -> bool:
    return isinstance(t, (int, float)) and not isinstance(t, bool)


def is_constant(t: object) -> bool:
    return isinstance(t, (str, int, float))


def deref(t: Term) -> Term:
    while type(t) is Var and t.ref is not None:
        t = t.ref
    return t


def principal_key(t: Term) -> tuple[str, int] | None:
    """Name/arity of a goal or head term; ``None`` for variables and numbers."""
    if isinstance(t, Struct):
        return t.key
    if isinstance(t, str):
        return (t, 0)
    return None


def mklist(items, tail: Term = NIL) -> Term:
    out = tail
    for item in reversed(list(items)):
        out = Struct(CONS, (item, out))
    return out


def list_items(t: Term) -> tuple[list[Term], Term]:
    """Split a (possibly partial) list into its elements and its tail."""
    items = []
    t = deref(t)
    while isinstance(t, Struct) and t.functor == CONS and len(t.args) == 2:
        items.append(t.args[0])
        t = deref(t.args[1])
    return items, t


def variables(t: Term) -> Iterator[Var]:
    """Yield the variables of ``t`` in depth-first order (with repeats)."""
    stack = [t]
    while stack:
        t = stack.pop()
        if isinstance(t, Var):
            if t.ref is not None:
                stack.append(t.ref)
            else:
                yield t
        elif isinstance(t, Struct):
            stack.extend(reversed(t.args))


def _rebuild(t: Term, leaf) -> Term:
    """Copy the structure of ``t`` bottom-up, mapping each non-compound node with ``leaf``.

    Iterative, so long lists and deep terms do not hit the recursion limit.
    """
    t = deref(t)
    if not isinstance(t, Struct):
        return leaf(t)
    # frames: [struct, next arg index, built args]
    stack = [[t, 0, []]]
    while True:
        frame = stack[-1]
        s, i, built = frame
        if i == len(s.args):
            stack.pop()
            node = Struct(s.functor, tuple(built))
            if not stack:
                return node
            stack[-1][2].append(node)
            continue
        frame[1] = i + 1
        a = deref(s.args[i])
        if isinstance(a, Struct):
            stack.append([a, 0, []])
        else:
            built.append(leaf(a))


def resolve(t: Term) -> Term:
    """Return a copy of ``t`` with every bound variable replaced by its value."""
    return _rebuild(t, lambda a: a)


def copy_term(t: Term, mapping: dict | None = None) -> Term:
    """Copy ``t`` with fresh variables; shared variables stay shared."""
    if mapping is None:
        mapping = {}

    def leaf(a):
        if isinstance(a, Var):
            if a not in mapping:
                mapping[a] = Var(a.name)
            return mapping[a]
        return a

    return _rebuild(t, leaf)


def is_ground(t: Term) -> bool:
    return next(variables(t), None) is None


def variant(a: Term, b: Term, mapping: dict | None = None) -> bool:
    """Structural equality up to a consistent renaming of variables."""
    if mapping is None:
        mapping = {}
    stack = [(a, b)]
    back: dict = {}
    while stack:
        x, y = stack.pop()
        x, y = deref(x), deref(y)
        if isinstance(x, Var) or isinstance(y, Var):
            if not (isinstance(x, Var) and isinstance(y, Var)):
                return False
            if mapping.setdefault(x, y) is not y or back.setdefault(y, x) is not x:
                return False
        elif isinstance(x, Struct):
            if not isinstance(y, Struct) or x.key != y.key:
                return False
            stack.extend(zip(x.args, y.args))
        else:
            if type(x) is not type(y) or x != y:
                return False
    return True
