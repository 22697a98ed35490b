from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpcost.analysis import (
    GIUNIF,
    GOUNIF,
    NARGS,
    STEP,
    VIUNIF,
    VOUNIF,
    CostModel,
    Metric,
    MetricError,
    ModeDeclarationError,
    body_metrics,
    ev_cost,
    head_metrics,
)
from lpcost.lang import Struct, Var, parse_program, read_term
from lpcost.lang.program import ARITH_FUNCTORS

APP = """
:- mode(app/3, [in,in,out]).
:- measure(app/3, [length,length,length]).
app([], L, L).
app([X|Xs], Ys, [X|Zs]) :- app(Xs, Ys, Zs).
"""


def _heads(src, key):
    p = parse_program(src)
    return [head_metrics(c, p.decl(key)) for c in p.clauses(key)]


def test_head_metrics_append_base():
    base, _ = _heads(APP, ("app", 3))
    assert base == {STEP: 1, NARGS: 3, GIUNIF: 1, GOUNIF: 0, VIUNIF: 1, VOUNIF: 1}


def test_head_metrics_append_recursive():
    _, rec = _heads(APP, ("app", 3))
    assert rec == {STEP: 1, NARGS: 3, GIUNIF: 3, GOUNIF: 3, VIUNIF: 1, VOUNIF: 0}


def test_head_metrics_nullary():
    [h] = _heads("p.", ("p", 0))
    assert h[STEP] == 1
    assert all(h[m] == 0 for m in (NARGS, GIUNIF, GOUNIF, VIUNIF, VOUNIF))


def test_head_metrics_need_modes():
    p = parse_program("p(a).")
    with pytest.raises(ModeDeclarationError):
        head_metrics(p.clauses(("p", 1))[0], p.decl(("p", 1)))


def test_nested_structure_counts_every_symbol():
    [h] = _heads(":- mode(p/2,[in,out]).\np(f(g(X), [a]), h(Y)).", ("p", 2))
    # f, g, X, '.', a, []  /  h, Y
    assert h[GIUNIF] == 6 and h[GOUNIF] == 2


# -- ev_cost ------------------------------------------------------------------


def test_ev_cost_constant_is_zero():
    assert ev_cost(("+", 2), 3) == 0
    assert ev_cost(("+", 2), Var("X")) == 0


def test_ev_cost_hand_unfolded():
    e = read_term("(1+2)+X")
    assert ev_cost(("+", 2), e) == 2
    assert ev_cost(("*", 2), e) == 0


def test_ev_cost_rejects_non_arithmetic():
    with pytest.raises(MetricError):
        ev_cost(("+", 2), read_term("f(1)+2"))
    with pytest.raises(MetricError):
        ev_cost(("+", 2), "abc")


def subterm_walk(op, t) -> int:
    """Independent oracle: count the subterms whose principal functor is ``op``."""
    n = 0
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Struct):
            n += s.key == op
            todo.extend(s.args)
    return n


_OPS = sorted(ARITH_FUNCTORS)


def random_expr(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        return rng.choice([rng.randint(0, 9), Var("X"), Var("Y"), 2.5])
    name, arity = rng.choice(_OPS)
    return Struct(name, tuple(random_expr(rng, depth - 1) for _ in range(arity)))


def test_ev_cost_matches_subterm_walk_on_50_random_expressions():
    rng = random.Random(1234)
    for _ in range(50):
        e = random_expr(rng, 6)
        for op in _OPS:
            assert ev_cost(op, e) == subterm_walk(op, e)


_leaves = st.one_of(st.integers(-5, 5), st.sampled_from(["X", "Y"]).map(Var))
_exprs = st.recursive(
    _leaves,
    lambda kids: st.sampled_from(_OPS).flatmap(
        lambda op: st.tuples(*[kids] * op[1]).map(lambda a, f=op[0]: Struct(f, a))
    ),
    max_leaves=25,
)


@settings(max_examples=200, deadline=None)
@given(_exprs, st.sampled_from(_OPS))
def test_ev_cost_property(e, op):
    assert ev_cost(op, e) == subterm_walk(op, e)


@settings(max_examples=100, deadline=None)
@given(_exprs)
def test_ev_cost_sums_to_operator_node_count(e):
    nodes = 0
    todo = [e]
    while todo:
        s = todo.pop()
        if isinstance(s, Struct):
            nodes += 1
            todo.extend(s.args)
    assert sum(ev_cost(op, e) for op in _OPS) == nodes


# -- body metrics ----------------------------------------------------------------


def _body(src):
    p = parse_program(src)
    key = p.entry_points[0]
    return body_metrics(p.clauses(key)[0], p)


def test_body_metrics_is_with_two_operators():
    got = _body("p(A,B,C,X) :- X is A+B*C.")
    assert got == {Metric.builtin("is", 2): 1, Metric.arith("+", 2): 1, Metric.arith("*", 2): 1}


def test_body_metrics_comparisons_of_variables():
    got = _body("p(A,B) :- A =:= B, B =:= A.")
    assert got == {Metric.builtin("=:=", 2): 2}


def test_body_metrics_fact_is_empty():
    assert _body("p(a).") == {}


def test_body_metrics_unknown_callee():
    with pytest.raises(MetricError):
        _body("p(X) :- q(X).")


def test_metric_names_round_trip():
    for text in ["step", "nargs", "builtin(is/2)", "arith(+/2)", "arith(-/1)"]:
        assert str(Metric.parse(text)) == text
    with pytest.raises(ValueError):
        Metric.parse("bogus")


def test_cost_model_signature():
    m = CostModel.parse("step,giunif")
    assert m.components == (STEP, GIUNIF)
    assert CostModel.parse(m.signature) == m
