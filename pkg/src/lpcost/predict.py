"""Execution-time prediction, accuracy measurement and model ranking."""

from __future__ import annotations

import json
import math
import random
import statistics
import time
from dataclasses import dataclass, field
from typing import Sequence

from .analysis.cost import CostAnalysis
from .analysis.metrics import STEP_MODEL, CostModel, Metric, program_metrics
from .analysis.recurrence import CostFunction
from .calibrate.fit import ModelFit
from .vm.engine import Engine
from .vm.timing import profile

DEFAULT_INPUTS = 10
DEFAULT_RUNS = 5


class PredictionError(Exception):
    pass


class ComponentMismatchError(PredictionError):
    pass


@dataclass(frozen=True)
class Prediction:
    program: str
    model: CostModel
    sizes: dict
    estimate_ns: float
    observed_ns: float | None = None
    rel_error_pct: float | None = None

    def to_dict(self) -> dict:
        return {
            "program": self.program,
            "model": self.model.signature,
            "sizes": {f"n{k + 1}": v for k, v in sorted(self.sizes.items())},
            "estimate_ns": self.estimate_ns,
            "observed_ns": self.observed_ns,
            "rel_error_pct": self.rel_error_pct,
        }


def predict_time(fit: ModelFit, costs: Sequence, sizes=None, metrics: Sequence[Metric] | None = None) -> float:
    """Dot product of the fitted constants with the event counts at ``sizes``.

    ``costs`` holds cost functions (evaluated at ``sizes``) or plain counts,
    one per entry of ``metrics``; by default ``metrics`` are the fitted
    model's components.  Builtin metrics use the measured builtin constants.
    """
    metrics = tuple(metrics) if metrics is not None else fit.model.components
    if len(costs) != len(metrics):
        raise ComponentMismatchError(
            f"cost vector has {len(costs)} entries but the model {fit.model.signature} needs {len(metrics)}"
        )
    total = 0.0
    for metric, c in zip(metrics, costs):
        try:
            k = fit.constant(metric)
        except KeyError:
            raise ComponentMismatchError(f"no fitted or measured constant for {metric}") from None
        value = c(sizes) if isinstance(c, CostFunction) else c
        total += k * float(value)
    return total


def relative_error(estimate: float, observed: float) -> float:
    """Percent deviation ``100 |estimate - observed| / observed``."""
    if observed <= 0:
        raise ValueError("observed time must be positive")
    return 100.0 * abs(estimate - observed) / observed


def global_error(errors: Sequence[float]) -> float:
    """Root of the mean of the squared per-benchmark errors."""
    errors = list(errors)
    if not errors:
        raise ValueError("global error of an empty list")
    return math.sqrt(math.fsum(e * e for e in errors) / len(errors))


def rank_models(fits: Sequence[ModelFit]) -> list[ModelFit]:
    """Ascending by S; on equal S the model with fewer components first."""
    return sorted(fits, key=lambda f: (f.S, f.v))


@dataclass
class AccuracyReport:
    predictions: list[Prediction]
    observed: dict[str, float]
    analysis_seconds: dict[str, float]
    global_errors: dict[str, float]
    ranking: list[str]
    programs: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_records(self) -> list[dict]:
        out = [dict(kind="prediction", **p.to_dict()) for p in self.predictions]
        for prog in self.programs:
            out.append({"kind": "observed", "program": prog, "observed_ns": self.observed[prog],
                        "analysis_s": self.analysis_seconds[prog]})
        for sig in self.ranking:
            out.append({"kind": "global", "model": sig, "global_error_pct": self.global_errors[sig]})
        return out

    def to_json_lines(self) -> str:
        head = json.dumps({"kind": "meta", **self.meta}) + "\n"
        return head + "".join(json.dumps(r) + "\n" for r in self.to_records())

    def render_table(self) -> str:
        models = list(self.ranking)
        lines = []
        name_w = max([len(m) for m in models] + [len("observed"), len("T_ca (s)")])
        col_w = 20
        header = "model".ljust(name_w) + "".join(p.rjust(col_w) for p in self.programs)
        lines.append(header)
        lines.append("-" * len(header))
        by_key = {(p.program, p.model.signature): p for p in self.predictions}
        for sig in models:
            cells = []
            for prog in self.programs:
                p = by_key[(prog, sig)]
                cells.append(f"{p.estimate_ns / 1000:.1f} ({p.rel_error_pct:.0f}%)".rjust(col_w))
            lines.append(sig.replace(",", " ").ljust(name_w) + "".join(cells))
        lines.append("observed".ljust(name_w) + "".join(f"{self.observed[p] / 1000:.1f}".rjust(col_w) for p in self.programs))
        lines.append("T_ca (s)".ljust(name_w) + "".join(f"{self.analysis_seconds[p]:.3f}".rjust(col_w) for p in self.programs))
        lines.append("")
        lines.append("times in microseconds; global error (root mean square of the errors):")
        for sig in models:
            lines.append(f"  {sig.replace(',', ' ')}: {self.global_errors[sig]:.2f}%")
        return "\n".join(lines) + "\n"


def _mean(values) -> float:
    return statistics.fmean(values)


def evaluate(
    benchmarks,
    fits: Sequence[ModelFit],
    sizes: dict | None = None,
    inputs: int = DEFAULT_INPUTS,
    runs: int = DEFAULT_RUNS,
    seed: int = 0,
    include_builtins: bool = True,
) -> AccuracyReport:
    """Compare predictions of every fitted model with observed times.

    Each benchmark runs on ``inputs`` random inputs of its evaluation size,
    ``runs`` times each; the observation is the mean over all runs.
    """
    benchmarks = list(benchmarks)
    if not benchmarks:
        raise PredictionError("empty test suite")
    if not fits:
        raise PredictionError("no fitted models")
    rng = random.Random(seed)
    predictions, observed, tca = [], {}, {}
    per_model_errors: dict[str, list[float]] = {f.model.signature: [] for f in fits}
    for b in benchmarks:
        entry = b.workload.entry
        n = (sizes or {}).get(b.id, b.default_size)
        t0 = time.perf_counter()
        session = CostAnalysis(b.program)
        extra = tuple(program_metrics(b.program, b.program.reachable([entry]))) if include_builtins else ()
        cost_sets = {}
        for f in fits:
            model = CostModel(f.model.components + tuple(m for m in extra if m not in f.model.components))
            cost_sets[f.model.signature] = (model, session.predicate_cost(entry, model))
        tca[b.id] = time.perf_counter() - t0

        engine = Engine(b.program)
        goals = [b.workload.goal(n, rng.randrange(2**31)) for _ in range(inputs)]
        times = []
        for goal, _ in goals:
            times.extend(profile(engine, goal, reps=runs, inner_iters=1).per_exec)
        obs = _mean(times)
        observed[b.id] = obs
        for f in fits:
            model, costs = cost_sets[f.model.signature]
            estimates = [predict_time(f, costs, measured, model.components) for _, measured in goals]
            est = _mean(estimates)
            err = relative_error(est, obs)
            per_model_errors[f.model.signature].append(err)
            predictions.append(Prediction(b.id, f.model, dict(goals[0][1]), est, obs, err))
    globals_ = {sig: global_error(errs) for sig, errs in per_model_errors.items()}
    ranking = [f.model.signature for f in rank_models(fits)]
    meta = {"seed": seed, "inputs": inputs, "runs": runs, "include_builtins": include_builtins}
    return AccuracyReport(predictions, observed, tca, globals_, ranking, [b.id for b in benchmarks], meta)


def require_step_baseline(models: Sequence[CostModel]) -> list[CostModel]:
    """The step-only model is always part of an evaluation."""
    models = list(models)
    if STEP_MODEL not in models:
        models.append(STEP_MODEL)
    return models


__all__ = [
    "AccuracyReport",
    "ComponentMismatchError",
    "Prediction",
    "PredictionError",
    "evaluate",
    "global_error",
    "predict_time",
    "rank_models",
    "relative_error",
    "require_step_baseline",
]
