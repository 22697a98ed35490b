"""Wall-clock measurement of goals and builtins on the uninstrumented path."""

from __future__ import annotations

import gc
import json
import statistics
import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterable

from ..analysis.metrics import Metric
from ..lang.program import ARITH_FUNCTORS, Clause, Predicate, PredicateDecl, Program
from ..lang.terms import Struct, Term, Var
from .engine import Engine, EventCounts

_TIMING_LOCK = threading.Lock()


class TimingError(Exception):
    pass


class ConcurrentTimingError(TimingError):
    pass


@contextmanager
def exclusive_timing():
    """Hold the process-wide timing lock with the collector disabled."""
    if not _TIMING_LOCK.acquire(blocking=False):
        raise ConcurrentTimingError("another timing run is active in this process")
    was_enabled = gc.isenabled()
    gc.collect()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()
        _TIMING_LOCK.release()


def clock_resolution_ns() -> float:
    return time.get_clock_info("perf_counter").resolution * 1e9


@dataclass
class TimingResult:
    """Per-rep loop durations and the derived per-execution statistics."""

    samples: list[int]
    reps: int
    inner: int
    overhead_ns: float
    per_exec: list[float]
    diagnostics: list[str] = field(default_factory=list)

    @property
    def median(self) -> float:
        return statistics.median(self.per_exec)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.per_exec)

    @property
    def resolution_ok(self) -> bool:
        return not any(d.startswith("resolution") for d in self.diagnostics)


def _noop(_lit) -> bool:
    return True


def _loop_ns(fn, arg, inner: int) -> int:
    t0 = time.perf_counter_ns()
    for _ in range(inner):
        fn(arg)
    return time.perf_counter_ns() - t0


def _overhead_ns(inner: int, reps: int = 5) -> float:
    return statistics.median(_loop_ns(_noop, None, inner) for _ in range(reps))


def _finish(samples: list[int], reps: int, inner: int, overhead: float, calls_per_iter: int = 1) -> TimingResult:
    diags = []
    per_exec = []
    clamped = 0
    for s in samples:
        d = (s - overhead) / (inner * calls_per_iter)
        if d < 0:
            clamped += 1
            d = 0.0
        per_exec.append(d)
    if clamped:
        diags.append(f"clamped {clamped} negative durations to 0 after overhead subtraction")
    res = clock_resolution_ns()
    if samples and res > 0.01 * statistics.median(samples):
        diags.append(f"resolution: timer resolution {res:.0f} ns is coarse for these durations; increase inner_iters")
    return TimingResult(samples, reps, inner, overhead, per_exec, diags)


def profile(engine: Engine, goal: Term, reps: int = 5, inner_iters: int = 1) -> TimingResult:
    """Time ``goal`` ``inner_iters`` times per rep, ``reps`` times.

    The goal term (and so the input data) is built by the caller, outside
    the timed region.  Counting is off in the timed loop.
    """
    if reps < 1 or inner_iters < 1:
        raise ValueError("reps and inner_iters must be at least 1")
    lit = engine.prepare(goal)
    if not engine.run_prepared(lit):
        raise TimingError("goal failed; only succeeding goals can be timed")
    run = engine.run_prepared
    with exclusive_timing():
        overhead = _overhead_ns(inner_iters)
        samples = [_loop_ns(run, lit, inner_iters) for _ in range(reps)]
    return _finish(samples, reps, inner_iters, overhead)


# -- builtins -------------------------------------------------------------------

_BATCH = 100


def _arith_goal(op: str, arity: int) -> Term:
    if arity == 1:
        expr = Struct(op, (7,))
    else:
        expr = Struct(op, (7, 3))
    return Struct("is", (Var("X"), expr))


_SELF_TESTS = {
    ("is", 2): lambda: Struct("is", (Var("X"), 7)),
    ("=:=", 2): lambda: Struct("=:=", (3, 3)),
    ("=\\=", 2): lambda: Struct("=\\=", (3, 4)),
    ("<", 2): lambda: Struct("<", (3, 4)),
    (">", 2): lambda: Struct(">", (4, 3)),
    ("=<", 2): lambda: Struct("=<", (3, 4)),
    (">=", 2): lambda: Struct(">=", (4, 3)),
    ("=", 2): lambda: Struct("=", (Var("X"), "a")),
    ("true", 0): lambda: "true",
}


def registered_builtins() -> list[Metric]:
    out = [Metric.builtin(*k) for k in _SELF_TESTS]
    out += [Metric.arith(*k) for k in sorted(ARITH_FUNCTORS)]
    return out


def _batch_engine(goal_factory) -> Engine:
    """A program whose single clause runs the self-test goal ``_BATCH`` times."""
    body = tuple(goal_factory() for _ in range(_BATCH))
    key = ("$bench", 0)
    clause = Clause("$bench", body, 0)
    decl = PredicateDecl("$bench", 0, modes=(), measures=())
    prog = Program({key: Predicate(decl, (clause,))}, (key,), "")
    return Engine(prog)


_SAMPLES = 5


def _time_batches(engine: Engine, calls: int) -> float:
    """Median per-literal time; ``calls`` literals in total over all samples."""
    lit = engine.prepare("$bench")
    if not engine.run_prepared(lit):
        raise TimingError("builtin self-test failed")
    inner = max(1, calls // (_BATCH * _SAMPLES))
    with exclusive_timing():
        overhead = _overhead_ns(inner)
        samples = [_loop_ns(engine.run_prepared, lit, inner) for _ in range(_SAMPLES)]
    return _finish(samples, _SAMPLES, inner, overhead, _BATCH).median


def time_builtin(metric: Metric | str, reps: int, baseline: float | None = None) -> float:
    """Nanoseconds per call of one builtin or arithmetic operator.

    Builtins are timed as a run of ``_BATCH`` consecutive self-test literals.
    An arithmetic operator is timed inside ``X is 7 op 3`` with the time of
    ``X is 7`` subtracted, so only the evaluation of the operator remains;
    ``baseline`` supplies an already measured ``X is 7`` time.
    """
    if isinstance(metric, str):
        metric = Metric.parse(metric)
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if metric.kind == "builtin":
        factory = _SELF_TESTS.get((metric.name, metric.arity))
        if factory is None:
            raise KeyError(f"no self-test registered for {metric}")
        return _time_batches(_batch_engine(factory), reps)
    if metric.kind == "arith" and (metric.name, metric.arity) in ARITH_FUNCTORS:
        op = _time_batches(_batch_engine(lambda: _arith_goal(metric.name, metric.arity)), reps)
        base = baseline if baseline is not None else _time_batches(_batch_engine(_SELF_TESTS[("is", 2)]), reps)
        return max(op - base, 0.0)
    raise KeyError(f"no self-test registered for {metric}")


# -- profile records -------------------------------------------------------------


def profile_record(program_id: str, sizes, duration_ns: float, rep: int | None = None, counts: EventCounts | None = None) -> dict:
    rec = {"program": program_id, "sizes": list(sizes), "duration_ns": duration_ns}
    if rep is not None:
        rec["rep"] = rep
    if counts is not None:
        rec["counts"] = counts.as_dict()
    return rec


def write_records(records: Iterable[dict], fh) -> None:
    for r in records:
        fh.write(json.dumps(r) + "\n")


__all__ = [
    "ConcurrentTimingError",
    "TimingError",
    "TimingResult",
    "clock_resolution_ns",
    "exclusive_timing",
    "profile",
    "profile_record",
    "registered_builtins",
    "time_builtin",
    "write_records",
]
