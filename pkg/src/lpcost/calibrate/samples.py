"""Assembly of the sample matrix: event counts against measured times."""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass, field

import numpy as np

from ..analysis.metrics import CostModel
from ..vm.engine import Engine
from ..vm.timing import profile
from .fit import FitError
from .suite import DEFAULT_SIZES

DEFAULT_REPS = 10
DEFAULT_INNER = 3


@dataclass
class SampleMatrix:
    columns: tuple[str, ...]
    C: np.ndarray
    T: np.ndarray
    row_meta: list[tuple]
    dropped: list[tuple] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.C = np.asarray(self.C, dtype=np.float64)
        self.T = np.asarray(self.T, dtype=np.float64)
        if self.C.shape != (len(self.T), len(self.columns)):
            raise ValueError("C must be m x v with one duration per row")
        if (self.C < 0).any() or (self.T < 0).any():
            raise ValueError("counts and durations must be nonnegative")

    @property
    def m(self) -> int:
        return self.C.shape[0]

    def columns_for(self, model: CostModel) -> np.ndarray:
        idx = []
        for c in model.components:
            try:
                idx.append(self.columns.index(str(c)))
            except ValueError:
                raise FitError(f"samples have no column for {c}") from None
        return self.C[:, idx]

    def write_csv(self, fh) -> None:
        w = csv.writer(fh)
        w.writerow(list(self.columns) + ["duration_ns"])
        for row, t in zip(self.C, self.T):
            w.writerow([repr(float(x)) for x in row] + [repr(float(t))])

    @classmethod
    def read_csv(cls, fh) -> SampleMatrix:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(x) for x in line] for line in r if line]
        data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
        return cls(tuple(header[:-1]), data[:, :-1], data[:, -1], [("csv", i) for i in range(len(rows))])


def collect_samples(
    suite,
    model: CostModel,
    sizes=DEFAULT_SIZES,
    reps: int = DEFAULT_REPS,
    seed: int = 0,
    inner: int = DEFAULT_INNER,
    sizes_per_program: dict | None = None,
) -> SampleMatrix:
    """Time every program at every size; one row per (program, size).

    The duration of a row is the median over ``reps`` of the per-execution
    time.  Rows whose timing is below the clock's useful resolution are
    dropped and listed in ``dropped``.
    """
    if not suite:
        raise ValueError("empty calibration suite")
    v = len(model)
    rng = random.Random(seed)
    cells = []
    for prog in suite:
        costs = prog.exact_costs(model)
        engine = Engine(prog.program)
        for n in (sizes_per_program or {}).get(prog.id, sizes):
            cells.append((prog, costs, engine, n, rng.randrange(2**31)))
    # visit cells in random order so slow drift of the host speed spreads
    # over all programs and sizes instead of biasing some of them
    order = list(range(len(cells)))
    rng.shuffle(order)
    results = {}
    for i in order:
        prog, costs, engine, n, s = cells[i]
        goal, measured = prog.workload.goal(n, s)
        results[i] = (measured, profile(engine, goal, reps=reps, inner_iters=inner))
    rows, times, meta, dropped = [], [], [], []
    for i, (prog, costs, engine, n, s) in enumerate(cells):
        measured, result = results[i]
        if not result.resolution_ok:
            dropped.append((prog.id, n, s, "; ".join(result.diagnostics)))
            continue
        rows.append([float(c(measured)) for c in costs])
        times.append(result.median)
        meta.append((prog.id, n, s))
    if len(rows) <= v:
        raise FitError(f"insufficient samples: m={len(rows)} rows for v={v} components ({len(dropped)} dropped)")
    if dropped and len(rows) <= 4 * v:
        raise FitError(f"too many rows dropped by the resolution check: m={len(rows)} <= 4v")
    return SampleMatrix(tuple(str(c) for c in model.components), np.array(rows), np.array(times), meta, dropped)


__all__ = ["DEFAULT_INNER", "DEFAULT_REPS", "SampleMatrix", "collect_samples"]
