"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line; the lines are printed together at the
end of the pytest run (see ``conftest.py``) and when this file is run as a
script.
"""

from __future__ import annotations

import math
import random
import time
from fractions import Fraction
from functools import lru_cache

import numpy as np
import pytest
import sympy

from lpcost.analysis import FIVE_MODEL, FULL_MODEL, STANDARD_MODELS, STEP, CostAnalysis, ClosedForm, ev_cost, program_metrics
from lpcost.analysis.metrics import CostModel, NARGS
from lpcost.benchmarks import load_benchmarks
from lpcost.calibrate import (
    MIN_REPS,
    RankDeficiencyError,
    builtin_calibration_suite,
    calibrate_builtins,
    collect_samples,
    fit_model,
    householder_qr,
    least_squares,
)
from lpcost.lang import Struct, Var, read_term, size_symbol
from lpcost.lang.program import ARITH_FUNCTORS
from lpcost.predict import evaluate, global_error
from lpcost.vm import Engine

RESULTS: dict[int, tuple[bool, str]] = {}

TITLES = {
    1: "global error reproduces the reference summary",
    2: "static cost functions equal vm event counts",
    3: "nrev and append step recurrences",
    4: "least-squares recovery and QR invariants",
    5: "ev_cost unit suite",
    6: "end-to-end calibrate and evaluate",
    7: "redundant nargs component",
}


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = (ok, detail)
    assert ok, f"criterion {n} failed: {detail}"


def summary_lines() -> list[str]:
    out = []
    for n in sorted(TITLES):
        if n not in RESULTS:
            out.append(f"criterion {n} NOT RUN  {TITLES[n]}")
            continue
        ok, detail = RESULTS[n]
        out.append(f"criterion {n} {'PASS' if ok else 'FAIL'}  {TITLES[n]}: {detail}")
    return out


# -- 1 -------------------------------------------------------------------------------


def test_criterion_1_global_error():
    step = global_error([45, 38, 80, 43, 38, 85])
    four = global_error([35, 14, 18, 24, 5, 22])
    ok = abs(step - 58.3) <= 1.0 and abs(step - 58.45) <= 1.0 and abs(four - 21.7) <= 1.0 and abs(four - 21.48) <= 1.0
    record(1, ok, f"step {step:.2f} (reference 58.45), four-component {four:.2f} (reference 21.48)")


# -- 2 -------------------------------------------------------------------------------


def test_criterion_2_oracle_equivalence():
    rng = random.Random(2024)
    checked = 0
    mismatches = []
    for b in load_benchmarks():
        entry = b.workload.entry
        metrics = FULL_MODEL.components + tuple(program_metrics(b.program, b.program.reachable([entry])))
        ca = CostAnalysis(b.program)
        costs = {m: ca.cost(entry, m) for m in metrics}
        engine = Engine(b.program)
        for n in b.oracle_sizes:
            goal, sizes = b.workload.goal(n, rng.randrange(2**31))
            counts = engine.solve(goal).counts
            for m, cf in costs.items():
                checked += 1
                if cf(sizes) != counts[m]:
                    mismatches.append((b.id, n, str(m), cf(sizes), counts[m]))
    record(2, not mismatches, f"{checked} (benchmark, size, metric) checks, {len(mismatches)} mismatches {mismatches[:3]}")


# -- 3 -------------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _app_steps(n: int) -> int:
    return 1 if n == 0 else 1 + _app_steps(n - 1)


@lru_cache(maxsize=None)
def _nrev_steps(n: int) -> int:
    # nrev([X|Xs]) resolves once, reverses Xs, then appends a list of length n-1
    return 1 if n == 0 else 1 + _nrev_steps(n - 1) + _app_steps(n - 1)


def test_criterion_3_recurrences():
    benches = {b.id: b for b in load_benchmarks(["append", "nrev"])}
    n1 = size_symbol(1)
    problems = []
    for bid, entry, formula, oracle in (
        ("append", ("app", 3), n1 + 1, _app_steps),
        ("nrev", ("nrev", 2), (n1**2 + 3 * n1 + 2) / 2, _nrev_steps),
    ):
        b = benches[bid]
        ca = CostAnalysis(b.program)
        cf = ca.cost(entry, STEP)
        if not isinstance(cf, ClosedForm) or sympy.simplify(cf.expr - formula) != 0:
            problems.append(f"{bid}: closed form {cf}")
        engine = Engine(b.program)
        for n in range(21):
            goal, sizes = b.workload.goal(n, n)
            want = Fraction(sympy.Rational(formula.subs(n1, n)))
            memo = ca.evaluate(entry, STEP, sizes)
            vm = engine.solve(goal).counts[STEP]
            if not (cf(sizes) == memo == vm == oracle(n) == want):
                problems.append(f"{bid} n={n}: closed {cf(sizes)} memo {memo} vm {vm} hand {oracle(n)}")
    record(3, not problems, "closed forms n1+1 and (n1^2+3n1+2)/2 agree with memoized evaluation and vm for n=0..20"
           if not problems else "; ".join(problems[:3]))


# -- 4 -------------------------------------------------------------------------------


def test_criterion_4_least_squares():
    # One generator stream, fixed before looking at any outcome.  The noisy
    # bound is judged on the first system, the QR and noiseless checks on all ten.
    rng = np.random.default_rng(4)
    worst_clean = 0.0
    qr_orth = qr_recon = grad = solver_gap = 0.0
    noisy = []
    for trial in range(10):
        C = rng.uniform(0, 100, size=(250, 6))
        K_true = rng.uniform(1, 100, size=6)
        T = C @ K_true
        K = least_squares(C, T)
        worst_clean = max(worst_clean, float(np.max(np.abs(K - K_true) / K_true)))
        T_noisy = T * (1 + 0.01 * rng.normal(size=250))
        K_noisy = least_squares(C, T_noisy)
        noisy.append((float(np.max(np.abs(K_noisy - K_true) / K_true)), float(K_true[np.argmax(np.abs(K_noisy - K_true) / K_true)])))
        ref, *_ = np.linalg.lstsq(C, T_noisy, rcond=None)
        solver_gap = max(solver_gap, float(np.max(np.abs(K_noisy - ref) / np.abs(ref))))
        qt, U = householder_qr(C)
        Q = qt.q()
        qr_orth = max(qr_orth, float(np.max(np.abs(Q.T @ Q - np.eye(250)))))
        qr_recon = max(qr_recon, float(np.max(np.abs(C - Q @ U)) / np.max(np.abs(C))))
        g = np.linalg.norm(C.T @ (T_noisy - C @ K_noisy)) / (np.linalg.norm(C.T, 2) * np.linalg.norm(T_noisy))
        grad = max(grad, float(g))
    first_err, first_k = noisy[0]
    ok = worst_clean <= 1e-9 and first_err <= 0.05 and qr_orth <= 1e-10 and qr_recon <= 1e-10 and grad <= 1e-8
    within = sum(e <= 0.05 for e, _ in noisy)
    record(4, ok, f"noiseless max rel err {worst_clean:.1e}; 1% noise: {first_err:.3f} on the fixed-seed system "
                  f"(worst component K_true={first_k:.1f} ns), {within}/10 systems within 5%, "
                  f"agreement with numpy lstsq {solver_gap:.0e}; |Q'Q-I| {qr_orth:.1e}, |C-QU|/|C| {qr_recon:.1e}, "
                  f"normal-equation residual {grad:.1e}")


# -- 5 -------------------------------------------------------------------------------


def _walk(op, t) -> int:
    n = 0
    todo = [t]
    while todo:
        s = todo.pop()
        if isinstance(s, Struct):
            n += s.key == op
            todo.extend(s.args)
    return n


def _random_expr(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.3:
        return rng.choice([rng.randint(0, 99), Var("A"), Var("B")])
    name, arity = rng.choice(sorted(ARITH_FUNCTORS))
    return Struct(name, tuple(_random_expr(rng, depth - 1) for _ in range(arity)))


def test_criterion_5_ev_cost():
    e = read_term("(1+2)+X")
    fixed = ev_cost(("+", 2), e) == 2 and ev_cost(("*", 2), e) == 0
    fixed = fixed and ev_cost(("+", 2), 7) == 0 and ev_cost(("+", 2), Var("X")) == 0
    rng = random.Random(5)
    bad = 0
    for _ in range(50):
        expr = _random_expr(rng, 7)
        bad += any(ev_cost(op, expr) != _walk(op, expr) for op in ARITH_FUNCTORS)
    record(5, fixed and bad == 0, f"hand examples {'ok' if fixed else 'WRONG'}, {50 - bad}/50 random expressions match")


# -- 6 and 7 share one calibration on this host ----------------------------------------


@pytest.fixture(scope="module")
def calibration():
    union = []
    for m in STANDARD_MODELS:
        union.extend(c for c in m.components if c not in union)
    t0 = time.perf_counter()
    suite = builtin_calibration_suite()
    samples = collect_samples(suite, CostModel(tuple(union)), seed=6)
    fits = [fit_model(samples, m) for m in STANDARD_MODELS]
    builtins = calibrate_builtins(MIN_REPS)
    wall = time.perf_counter() - t0
    for f in fits:
        f.builtins = dict(builtins)
    return samples, fits, wall


@pytest.mark.slow
def test_criterion_6_end_to_end(calibration):
    samples, fits, wall = calibration
    five = next(f for f in fits if f.model == FIVE_MODEL)
    finite = bool(np.isfinite(five.K).all())
    report = evaluate(load_benchmarks(), fits, seed=6)
    within, misses = 0, []
    for p in report.predictions:
        if p.model != FIVE_MODEL:
            continue
        ratio = p.estimate_ns / p.observed_ns
        if 0.2 <= ratio <= 5:
            within += 1
        else:
            misses.append(f"{p.program} ratio {ratio:.2f}")
    if misses:
        print("warning: predictions outside a factor of 5:", ", ".join(misses))
    ok = finite and five.S > 0 and wall < 300 and within >= 4
    errs = ", ".join(f"{sig.replace(',', ' ')} {e:.1f}%" for sig, e in report.global_errors.items())
    record(6, ok, f"calibration {wall:.1f} s, S={five.S:.0f} ns, K finite={finite}, "
                  f"{within}/6 benchmarks within 5x; global errors: {errs}")


@pytest.mark.slow
def test_criterion_7_redundant_nargs(calibration):
    samples = calibration[0]
    five = fit_model(samples, FIVE_MODEL)
    with_nargs = CostModel((FIVE_MODEL.components[0], NARGS) + FIVE_MODEL.components[1:])
    try:
        fit = fit_model(samples, with_nargs)
    except RankDeficiencyError as e:
        record(7, True, f"rejected: {e}")
        return
    warned = [w for w in fit.warnings if "nargs" in w]
    noise = 1e-9 * five.S
    silent_improvement = not warned and fit.S < five.S - noise
    record(7, bool(warned) and not silent_improvement,
           f"fit succeeded with {len(warned)} nargs warning(s); S {fit.S:.0f} vs {five.S:.0f} ns without nargs")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q"]))
