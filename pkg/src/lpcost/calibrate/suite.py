"""The calibration programs and their exact cost functions."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

import numpy as np

from ..analysis.cost import CostAnalysis
from ..analysis.metrics import FULL_MODEL, CostModel
from ..lang.program import Program, parse_program
from .datagen import ListRule, Workload
from .fit import RankDeficiencyError, householder_qr, pivot_ratios, PIVOT_TOL

DEFAULT_SIZES = tuple(range(2, 51, 2))

# (id, file, entry predicate); every entry takes one list argument
_SUITE = (
    ("envc", "envc.pl", ("envc", 1)),
    ("nullary", "nullary.pl", ("nullary", 1)),
    ("trav_lco", "trav_lco.pl", ("trav_lco", 1)),
    ("trav_nlco", "trav_nlco.pl", ("trav_nlco", 1)),
    ("viunif", "viunif.pl", ("vi", 1)),
    ("vounif", "vounif.pl", ("vo", 1)),
    ("gdeep", "gdeep.pl", ("gdeep", 1)),
    ("gflat", "gflat.pl", ("gflat", 1)),
    ("gounif", "gounif.pl", ("gout", 1)),
    ("manyargs", "manyargs.pl", ("manyargs", 1)),
)


def program_text(*parts: str) -> str:
    """Source of a bundled ``.pl`` file under ``lpcost/programs``."""
    return resources.files("lpcost").joinpath("programs", *parts).read_text()


@dataclass
class CalibrationProgram:
    id: str
    workload: Workload
    _session: CostAnalysis = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._session = CostAnalysis(self.workload.program, bound="exact")

    @property
    def program(self) -> Program:
        return self.workload.program

    def exact_costs(self, model: CostModel) -> tuple:
        return self._session.predicate_cost(self.workload.entry, model)

    @cached_property
    def source(self) -> str:
        return self.program.source


def _load(id_: str, filename: str, entry) -> CalibrationProgram:
    p = parse_program(program_text("calibration", filename))
    return CalibrationProgram(id_, Workload(id_, p, entry, (ListRule(),)))


def cost_matrix(suite, model: CostModel, sizes=DEFAULT_SIZES) -> np.ndarray:
    rows = []
    for prog in suite:
        costs = prog.exact_costs(model)
        for n in sizes:
            rows.append([float(c(n)) for c in costs])
    return np.array(rows, dtype=np.float64)


def check_rank(suite, model: CostModel = FULL_MODEL, sizes=DEFAULT_SIZES) -> None:
    """Raise :class:`RankDeficiencyError` naming the first dependent column."""
    C = cost_matrix(suite, model, sizes)
    _, U = householder_qr(C)
    for j, r in enumerate(pivot_ratios(C, U)):
        if r <= PIVOT_TOL * 1e3:
            raise RankDeficiencyError(j, str(model.components[j]))


def builtin_calibration_suite(check: bool = True) -> list[CalibrationProgram]:
    suite = [_load(*entry) for entry in _SUITE]
    if check:
        check_rank(suite)
    return suite


__all__ = ["CalibrationProgram", "DEFAULT_SIZES", "builtin_calibration_suite", "check_rank", "cost_matrix", "program_text"]
