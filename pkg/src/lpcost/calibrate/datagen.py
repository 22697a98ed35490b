"""Seeded input generation and goal construction for workloads."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

from ..analysis.sizes import input_sizes
from ..lang.program import Measure, Mode, Program, pred_str
from ..lang.terms import Struct, Term, Var, mklist


@dataclass(frozen=True)
class ListRule:
    """A list of ``n`` random integers in ``[low, high]``."""

    low: int = 0
    high: int = 9
    measure: Measure = Measure.LENGTH

    def generate(self, n: int, rng: random.Random) -> Term:
        return mklist([rng.randint(self.low, self.high) for _ in range(n)])


@dataclass(frozen=True)
class IntRule:
    """The integer ``n`` itself."""

    measure: Measure = Measure.INT

    def generate(self, n: int, rng: random.Random) -> Term:
        return n


@dataclass(frozen=True)
class ConstRule:
    """An unmeasured random integer in ``[low, high]``; the size is ignored."""

    low: int = 1
    high: int = 3
    measure: Measure = Measure.NONE

    def generate(self, n: int, rng: random.Random) -> Term:
        return rng.randint(self.low, self.high)


Rule = ListRule | IntRule | ConstRule


def gen_input(rule: Rule, n: int, seed: int) -> Term:
    """Deterministic input of size ``n`` under ``rule``'s measure."""
    if n < 0:
        raise ValueError("size must be nonnegative")
    return rule.generate(n, random.Random(seed))


@dataclass(frozen=True)
class Workload:
    """An entry predicate plus one generation rule per input argument.

    Output arguments receive fresh variables.
    """

    id: str
    program: Program
    entry: tuple
    rules: tuple

    def __post_init__(self) -> None:
        decl = self.program.decl(self.entry)
        if decl.modes is None or len(self.rules) != decl.arity:
            raise ValueError(f"{self.id}: one rule per argument of {pred_str(self.entry)} is required")
        for i, (m, r) in enumerate(zip(decl.modes, self.rules)):
            if (m is Mode.IN) != (r is not None):
                raise ValueError(f"{self.id}: argument {i + 1} needs a rule iff it has mode in")
            if r is not None and decl.measures[i] is not Measure.NONE and r.measure is not decl.measures[i]:
                raise ValueError(f"{self.id}: rule for argument {i + 1} does not match its measure")

    @property
    def decl(self):
        return self.program.decl(self.entry)

    def goal(self, n: int | Sequence[int], seed: int) -> tuple[Term, dict[int, int]]:
        """Goal term for size ``n`` (one value or one per sized input) and its measured sizes."""
        rng = random.Random(seed)
        decl = self.decl
        sized = decl.size_params()
        if isinstance(n, int):
            per_arg = {pos: n for pos in sized}
        else:
            if len(n) != len(sized):
                raise ValueError(f"{self.id}: expected {len(sized)} sizes")
            per_arg = dict(zip(sized, n))
        args = []
        for pos, rule in enumerate(self.rules):
            if rule is None:
                args.append(Var(f"Out{pos + 1}"))
            else:
                args.append(rule.generate(per_arg.get(pos, 0), rng))
        goal = Struct(self.entry[0], tuple(args)) if args else self.entry[0]
        return goal, input_sizes(decl, args)


__all__ = ["ConstRule", "IntRule", "ListRule", "Rule", "Workload", "gen_input"]
