"""The bundled test programs used to evaluate predictions."""

from __future__ import annotations

from dataclasses import dataclass

from .calibrate.datagen import ConstRule, IntRule, ListRule, Workload
from .calibrate.suite import program_text
from .lang.program import parse_program


@dataclass(frozen=True)
class Benchmark:
    id: str
    workload: Workload
    default_size: int
    oracle_sizes: range

    @property
    def program(self):
        return self.workload.program


# id, file, entry, rules, default evaluation size, sizes checked against the vm
_BENCHMARKS = (
    ("append", "append.pl", ("app", 3), (ListRule(), ListRule(), None), 400, range(0, 21)),
    ("nrev", "nrev.pl", ("nrev", 2), (ListRule(), None), 30, range(0, 21)),
    ("palindrome", "palindrome.pl", ("palindrome", 2), (ListRule(), None), 30, range(0, 21)),
    ("hanoi", "hanoi.pl", ("hanoi", 5), (IntRule(), ConstRule(), ConstRule(), ConstRule(), None), 8, range(1, 13)),
    ("powset", "powset.pl", ("powset", 2), (ListRule(), None), 8, range(0, 11)),
    ("evpol", "evpol.pl", ("poly", 3), (ListRule(), ConstRule(), None), 100, range(0, 21)),
)


def load_benchmarks(ids=None) -> list[Benchmark]:
    out = []
    for id_, filename, entry, rules, size, oracle in _BENCHMARKS:
        if ids is not None and id_ not in ids:
            continue
        p = parse_program(program_text(filename))
        out.append(Benchmark(id_, Workload(id_, p, entry, rules), size, oracle))
    if ids is not None and len(out) != len(set(ids)):
        known = {b[0] for b in _BENCHMARKS}
        raise KeyError(f"unknown benchmark(s): {', '.join(sorted(set(ids) - known))}")
    return out


BENCHMARK_IDS = tuple(b[0] for b in _BENCHMARKS)

__all__ = ["BENCHMARK_IDS", "Benchmark", "load_benchmarks"]
