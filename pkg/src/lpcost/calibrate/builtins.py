"""Direct measurement of builtin and arithmetic-operator constants."""

from __future__ import annotations

from ..analysis.metrics import Metric
from ..vm.timing import registered_builtins, time_builtin

MIN_REPS = 100_000


def calibrate_builtins(reps: int = MIN_REPS, metrics=None) -> dict[str, float]:
    """Nanoseconds per call for each builtin/operator (all registered ones by default)."""
    if reps < MIN_REPS:
        raise ValueError(f"builtin calibration needs at least {MIN_REPS} calls per builtin")
    out = {}
    baseline = None
    for m in metrics if metrics is not None else registered_builtins():
        m = Metric.parse(m) if isinstance(m, str) else m
        if m.kind == "arith" and baseline is None:
            baseline = out.get("builtin(is/2)") or time_builtin("builtin(is/2)", reps)
        out[str(m)] = time_builtin(m, reps, baseline if m.kind == "arith" else None)
    return out


__all__ = ["MIN_REPS", "calibrate_builtins"]
