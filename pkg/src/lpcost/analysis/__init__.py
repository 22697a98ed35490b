"""Static cost analysis: metric counting, size relations, recurrences."""

from .cost import (
    CostAnalysis,
    CostRecord,
    NotExactError,
    UnresolvedCalleeError,
    analyze_program,
    eval_cost,
    format_records,
    predicate_cost,
    setup_cost_equation,
)
from .metrics import (
    FIVE_MODEL,
    FOUR_MODEL,
    FULL_MODEL,
    GIUNIF,
    GOUNIF,
    HEAD_METRICS,
    NARGS,
    STANDARD_MODELS,
    STEP,
    STEP_MODEL,
    VIUNIF,
    VOUNIF,
    CostModel,
    Metric,
    MetricError,
    ModeDeclarationError,
    body_metrics,
    ev_cost,
    head_metrics,
    literal_metrics,
    program_metrics,
)
from .recurrence import (
    ClosedForm,
    CostError,
    CostFunction,
    DomainError,
    Evaluator,
    NonTerminationError,
    Recurrence,
    solve_recurrence,
)
from .sizes import Guard, SizeError, input_sizes, measure_of, size_relations

__all__ = [
    "FIVE_MODEL", "FOUR_MODEL", "FULL_MODEL", "GIUNIF", "GOUNIF", "HEAD_METRICS", "NARGS",
    "STANDARD_MODELS", "STEP", "STEP_MODEL", "VIUNIF", "VOUNIF",
    "ClosedForm", "CostAnalysis", "CostError", "CostFunction", "CostModel", "CostRecord",
    "DomainError", "Evaluator", "Guard", "Metric", "MetricError", "ModeDeclarationError",
    "NonTerminationError", "NotExactError", "Recurrence", "SizeError", "UnresolvedCalleeError",
    "analyze_program", "body_metrics", "ev_cost", "eval_cost", "format_records", "head_metrics",
    "input_sizes", "literal_metrics", "measure_of", "predicate_cost", "program_metrics",
    "setup_cost_equation", "size_relations", "solve_recurrence",
]
