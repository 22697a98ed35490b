"""The deterministic Prolog subset: terms, reader, programs, printer."""

from .printer import format_clause, format_expr, format_program, format_term
from .program import (
    BUILTINS,
    Clause,
    Diagnostic,
    Measure,
    Mode,
    Predicate,
    PredicateDecl,
    Program,
    is_arith_goal,
    parse_program,
    pred_str,
    size_symbol,
    term_to_expr,
    validate_program,
)
from .reader import ParseError, read_term
from .terms import NIL, Struct, Term, Var, copy_term, deref, list_items, mklist, resolve, variant

__all__ = [
    "BUILTINS",
    "Clause",
    "Diagnostic",
    "Measure",
    "Mode",
    "NIL",
    "ParseError",
    "Predicate",
    "PredicateDecl",
    "Program",
    "Struct",
    "Term",
    "Var",
    "copy_term",
    "deref",
    "format_clause",
    "format_expr",
    "format_program",
    "format_term",
    "is_arith_goal",
    "list_items",
    "mklist",
    "parse_program",
    "pred_str",
    "read_term",
    "resolve",
    "size_symbol",
    "term_to_expr",
    "validate_program",
    "variant",
]
