from __future__ import annotations

import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lpcost.analysis import FIVE_MODEL, FULL_MODEL, GOUNIF, GIUNIF, NARGS, STEP, STEP_MODEL, VIUNIF, VOUNIF, CostModel
from lpcost.calibrate import (
    DEFAULT_SIZES,
    MIN_REPS,
    FitError,
    ListRule,
    ModelFit,
    PlatformProfile,
    ProfileError,
    RankDeficiencyError,
    SampleMatrix,
    builtin_calibration_suite,
    calibrate_builtins,
    check_rank,
    collect_samples,
    fit_model,
    gen_input,
    householder_qr,
    least_squares,
    residual_stats,
)
from lpcost.calibrate.suite import cost_matrix
from lpcost.lang import NIL, list_items
from lpcost.lang.program import ARITH_FUNCTORS


@pytest.fixture(scope="module")
def suite():
    return builtin_calibration_suite()


# -- Householder QR --------------------------------------------------------------


def test_qr_identity():
    qt, U = householder_qr(np.eye(2))
    assert np.array_equal(U, np.eye(2))
    assert np.array_equal(qt.q(), np.eye(2))


def test_qr_single_column():
    qt, U = householder_qr([[3.0], [4.0]])
    assert abs(abs(U[0, 0]) - 5.0) < 1e-12
    assert U[1, 0] == 0.0
    assert np.allclose(qt.apply([3.0, 4.0]), U[:, 0])


def test_qr_random_orthogonality_and_reconstruction():
    rng = np.random.default_rng(3)
    C = rng.normal(size=(50, 6))
    qt, U = householder_qr(C)
    Q = qt.q()
    assert np.max(np.abs(Q.T @ Q - np.eye(50))) <= 1e-10
    assert np.max(np.abs(C - Q @ U)) <= 1e-10 * np.max(np.abs(C))
    assert np.allclose(U, np.triu(U))


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 8), st.integers(0, 20), st.integers(0, 2**31))
def test_qr_properties(v, extra, seed):
    rng = np.random.default_rng(seed)
    C = rng.uniform(-10, 10, size=(v + extra, v))
    qt, U = householder_qr(C)
    Q = qt.q()
    assert np.max(np.abs(Q.T @ Q - np.eye(v + extra))) <= 1e-10
    assert np.max(np.abs(C - Q @ U)) <= 1e-10 * max(1.0, np.max(np.abs(C)))
    assert np.allclose(qt.apply_q(qt.apply(C[:, 0])), C[:, 0])


def test_qr_needs_tall_matrix():
    with pytest.raises(ValueError):
        householder_qr(np.ones((2, 3)))


# -- least squares -----------------------------------------------------------------


def test_least_squares_consistent_system():
    C = [[1, 0], [0, 1], [1, 1]]
    T = [1, 2, 3]
    K = least_squares(C, T)
    assert np.allclose(K, [1, 2])
    assert residual_stats(C, T, K).RSS < 1e-24


def test_least_squares_constant_regressor():
    K = least_squares([[1], [1]], [2, 4])
    assert np.allclose(K, [3])
    st_ = residual_stats([[1], [1]], [2, 4], K)
    assert math.isclose(st_.RSS, 2) and math.isclose(st_.MRSS, 2) and math.isclose(st_.S, math.sqrt(2))


def test_duplicated_column_names_the_redundant_metric():
    C = np.array([[1, 1, 2], [2, 2, 1], [3, 3, 5], [4, 4, 0]], dtype=float)
    with pytest.raises(RankDeficiencyError) as info:
        least_squares(C, [1, 2, 3, 4], names=["step", "nargs", "giunif"])
    assert info.value.column == 1 and info.value.name == "nargs"
    assert "nargs" in str(info.value)


def test_residual_stats_needs_more_rows_than_columns():
    with pytest.raises(FitError):
        residual_stats([[1, 0], [0, 1]], [1, 1], [1, 1])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 100), st.integers(0, 2**31))
def test_residual_s_is_homogeneous(scale, seed):
    rng = np.random.default_rng(seed)
    C = rng.uniform(0, 10, size=(20, 3))
    T = rng.uniform(0, 100, size=20)
    s1 = residual_stats(C, T, least_squares(C, T)).S
    s2 = residual_stats(C, scale * T, least_squares(C, scale * T)).S
    assert math.isclose(s2, scale * s1, rel_tol=1e-9, abs_tol=1e-9)


def _synthetic(seed, noise):
    rng = np.random.default_rng(seed)
    C = rng.uniform(0, 100, size=(250, 6))
    K_true = rng.uniform(1, 100, size=6)
    T = C @ K_true
    if noise:
        T = T * (1 + noise * rng.normal(size=250))
    return C, T, K_true


@pytest.mark.parametrize("seed", range(5))
def test_noiseless_recovery(seed):
    C, T, K_true = _synthetic(seed, 0)
    K = least_squares(C, T)
    assert np.max(np.abs(K - K_true) / K_true) <= 1e-9


def test_noisy_recovery():
    C, T, K_true = _synthetic(11, 0.01)
    K = least_squares(C, T)
    assert np.max(np.abs(K - K_true) / K_true) <= 0.05


def test_normal_equations_hold():
    C, T, _ = _synthetic(5, 0.01)
    K = least_squares(C, T)
    g = C.T @ (T - C @ K)
    assert np.linalg.norm(g) <= 1e-8 * np.linalg.norm(C.T, 2) * np.linalg.norm(T)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(0, 5), st.floats(-1, 1).filter(lambda x: abs(x) > 1e-6))
def test_solution_is_optimal(seed, j, eps):
    C, T, _ = _synthetic(seed, 0.05)
    K = least_squares(C, T)
    rss = residual_stats(C, T, K).RSS
    K2 = K.copy()
    K2[j] += eps
    assert residual_stats(C, T, K2).RSS >= rss


def test_matches_numpy_lstsq():
    C, T, _ = _synthetic(9, 0.02)
    ref, *_ = np.linalg.lstsq(C, T, rcond=None)
    assert np.allclose(least_squares(C, T), ref, rtol=1e-9)


# -- fit_model -------------------------------------------------------------------------


def _matrix(C, T, columns):
    return SampleMatrix(tuple(columns), C, T, [("syn", i) for i in range(len(T))])


def test_fit_model_recovers_constants_under_noise(suite):
    K_true = np.array([20, 10, 10, 8, 6, 6], dtype=float)
    C = cost_matrix(suite, FULL_MODEL)
    rng = np.random.default_rng(0)
    T = (C @ K_true) * (1 + 0.01 * rng.normal(size=len(C)))
    fit = fit_model(_matrix(C, T, [str(c) for c in FULL_MODEL.components]), FULL_MODEL)
    assert np.max(np.abs(fit.K - K_true) / K_true) <= 0.05


def test_fit_model_recovers_known_constants(suite):
    K_true = np.array([20, 10, 10, 8, 6, 6], dtype=float)
    C = cost_matrix(suite, FULL_MODEL)
    samples = _matrix(C, C @ K_true, [str(c) for c in FULL_MODEL.components])
    fit = fit_model(samples, FULL_MODEL)
    assert np.max(np.abs(fit.K - K_true) / K_true) <= 1e-9
    assert fit.S < 1e-6 * np.max(C @ K_true)
    assert (fit.m, fit.v) == (250, 6)


def test_fit_model_projects_columns(suite):
    C = cost_matrix(suite, FULL_MODEL)
    samples = _matrix(C, C @ np.full(6, 5.0), [str(c) for c in FULL_MODEL.components])
    fit = fit_model(samples, STEP_MODEL)
    assert fit.v == 1 and np.isfinite(fit.K).all()


def test_nargs_with_all_unification_metrics_warns(suite):
    C = cost_matrix(suite, FULL_MODEL)
    samples = _matrix(C, C @ np.array([20, 0, 10, 8, 6, 6.0]), [str(c) for c in FULL_MODEL.components])
    fit = fit_model(samples, FULL_MODEL)
    assert any("nargs" in w for w in fit.warnings)
    assert not any("nargs" in w for w in fit_model(samples, FIVE_MODEL).warnings)


def test_negative_constant_warns():
    rng = np.random.default_rng(0)
    C = rng.uniform(1, 10, size=(30, 2))
    T = C @ np.array([5.0, -1.0])
    fit = fit_model(_matrix(C, T, ["step", "giunif"]), CostModel((STEP, GIUNIF)))
    assert any("negative" in w for w in fit.warnings)


def test_fit_model_needs_overdetermined_system():
    with pytest.raises(FitError):
        fit_model(_matrix(np.eye(2), np.ones(2), ["step", "giunif"]), CostModel((STEP, GIUNIF)))


def test_fit_model_missing_column():
    with pytest.raises(FitError):
        fit_model(_matrix(np.ones((5, 1)), np.ones(5), ["step"]), FIVE_MODEL)


# -- the suite -----------------------------------------------------------------------------


def test_suite_has_full_rank(suite):
    C = cost_matrix(suite, FULL_MODEL)
    assert C.shape == (250, 6)
    assert np.linalg.matrix_rank(C) == 6
    check_rank(suite)


def test_rank_check_names_dependent_column(suite):
    only_lists = [p for p in suite if p.id in ("trav_lco", "trav_nlco", "gdeep")]
    with pytest.raises(RankDeficiencyError):
        check_rank(only_lists)


def test_gounif_is_isolated_by_one_program(suite):
    # the output-writing predicate itself touches only gounif among the
    # unification metrics; the list driver around it has no output terms
    by_id = {p.id: p for p in suite}
    prog = by_id["gounif"].program
    from lpcost.analysis import CostAnalysis

    ca = CostAnalysis(prog)
    make = [ca.cost(("make", 1), m)([]) for m in (GIUNIF, GOUNIF, VIUNIF, VOUNIF)]
    assert make[1] > 0 and make[0] == make[2] == make[3] == 0
    others = [p for p in suite if p.id != "gounif"]
    assert all(p.exact_costs(CostModel((GOUNIF,)))[0]([10]) == 0 for p in others)


def test_nullary_chain_has_no_arguments(suite):
    from lpcost.analysis import CostAnalysis

    prog = {p.id: p for p in suite}["nullary"].program
    ca = CostAnalysis(prog)
    for m in (NARGS, GIUNIF, GOUNIF, VIUNIF, VOUNIF):
        assert ca.cost(("z0", 0), m)([]) == 0
    assert ca.cost(("z0", 0), STEP)([]) == 3


def test_exact_costs_match_the_vm(suite):
    from lpcost.vm import Engine

    for prog in suite:
        costs = prog.exact_costs(FULL_MODEL)
        eng = Engine(prog.program)
        for n in (0, 1, 5, 13):
            goal, sizes = prog.workload.goal(n, n)
            counts = eng.solve(goal).counts
            assert [c(sizes) for c in costs] == [counts[m] for m in FULL_MODEL.components], prog.id


# -- data generation -----------------------------------------------------------------------


def test_gen_input_list_rule():
    t = gen_input(ListRule(), 3, seed=42)
    items, tail = list_items(t)
    assert len(items) == 3 and tail == NIL
    assert all(0 <= x <= 9 for x in items)
    assert gen_input(ListRule(), 0, seed=1) == NIL


def test_gen_input_is_deterministic():
    assert list_items(gen_input(ListRule(), 20, 7)) == list_items(gen_input(ListRule(), 20, 7))
    with pytest.raises(ValueError):
        gen_input(ListRule(), -1, 0)


# -- sample collection --------------------------------------------------------------------


def test_collect_samples_full_grid(suite):
    samples = collect_samples(suite, FULL_MODEL, DEFAULT_SIZES, reps=1, inner=1, seed=3)
    assert samples.m + len(samples.dropped) == 250
    assert samples.C.shape[1] == 6
    assert (samples.T >= 0).all()


def test_collect_samples_step_projection(suite):
    samples = collect_samples(suite[:2], STEP_MODEL, (2, 4, 6), reps=1, inner=1)
    assert samples.C.shape == (6, 1)
    steps = sorted(samples.C[:, 0])
    expected = sorted(float(p.exact_costs(STEP_MODEL)[0]([n])) for p in suite[:2] for n in (2, 4, 6))
    assert steps == expected


def test_collect_samples_errors(suite):
    with pytest.raises(ValueError):
        collect_samples([], FULL_MODEL)
    with pytest.raises(FitError):
        collect_samples(suite[:1], FULL_MODEL, (2, 4), reps=1, inner=1)


def test_sample_csv_round_trip():
    s = _matrix(np.array([[1.0, 2.5], [3.0, 4.0], [0.0, 1e6]]), np.array([10.0, 20.5, 1.25]), ["step", "giunif"])
    buf = io.StringIO()
    s.write_csv(buf)
    assert buf.getvalue().splitlines()[0] == "step,giunif,duration_ns"
    back = SampleMatrix.read_csv(io.StringIO(buf.getvalue()))
    assert back.columns == s.columns
    assert np.array_equal(back.C, s.C) and np.array_equal(back.T, s.T)


def test_sample_matrix_rejects_negative_values():
    with pytest.raises(ValueError):
        _matrix(np.array([[-1.0]]), np.array([1.0]), ["step"])


# -- profiles and builtins ---------------------------------------------------------------


def test_profile_round_trip(tmp_path):
    fit = ModelFit(FIVE_MODEL, np.array([26.56, 10.81, 8.6, 6.17, 6.39]), 10.0, 2.0, math.sqrt(2), 250, 5, ["w"])
    prof = PlatformProfile({FIVE_MODEL.signature: fit}, {"builtin(is/2)": 40.0}, seed=9)
    path = tmp_path / "p.json"
    prof.save(path)
    back = PlatformProfile.load(path)
    got = back.fit_for(FIVE_MODEL)
    assert np.array_equal(got.K, fit.K) and got.S == fit.S and got.warnings == ["w"]
    assert got.constant("builtin(is/2)") == 40.0
    assert back.seed == 9
    with pytest.raises(ProfileError):
        back.fit_for(STEP_MODEL)


def test_profile_load_errors(tmp_path):
    with pytest.raises(ProfileError):
        PlatformProfile.load(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ProfileError):
        PlatformProfile.load(bad)


def test_calibrate_builtins_keys_and_signs():
    with pytest.raises(ValueError):
        calibrate_builtins(MIN_REPS - 1)
    got = calibrate_builtins(MIN_REPS, metrics=["arith(+/2)", "arith(*/2)", "builtin(is/2)", "builtin(=:=/2)", "builtin(>/2)"])
    assert set(got) == {"arith(+/2)", "arith(*/2)", "builtin(is/2)", "builtin(=:=/2)", "builtin(>/2)"}
    assert all(v > 0 for v in got.values())
    assert len(ARITH_FUNCTORS) > 0
