"""Resolution interpreter with event counting and a timing harness."""

from .engine import (
    ArithmeticError_,
    DepthLimitError,
    Engine,
    EventCounts,
    ModeError,
    Outcome,
    UnknownPredicateError,
    VMError,
    solve,
)

__all__ = [
    "ArithmeticError_",
    "DepthLimitError",
    "Engine",
    "EventCounts",
    "ModeError",
    "Outcome",
    "UnknownPredicateError",
    "VMError",
    "solve",
]
