import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haarsel.design import CovariateTable, build_design
from haarsel.quadrature import bt_hessian, bt_score, build_quadrature
from haarsel.simulate import PointPattern, Window
from haarsel.solver import (
    FitResult,
    PenaltyKind,
    PenaltySpec,
    SolverOptions,
    adaptive_weights,
    fit_lambda,
    fit_path,
    fit_unpenalized,
    kkt_violation,
    lambda_max,
    ridge_effective_df,
    scad_derivative,
    scad_penalty,
    scad_update,
    soft_threshold,
)

from conftest import small_instance
from oracles import proximal_gradient_lasso, scad_exact, scad_grid_argmin


def tiny_instance(seed):
    """M = 50 nodes (34 events + 4x4 dummies), K = 3."""
    return small_instance(seed, n=34, K=3, M_dummy=(4, 4))


def std_design_matrix(design):
    return np.column_stack([np.ones(design.Z.shape[0]), design.standardized()])


class TestScalarHelpers:
    @pytest.mark.parametrize("z, g, want", [(3, 1, 2), (-0.5, 1, 0), (-4, 1.5, -2.5), (0.7, 0, 0.7)])
    def test_soft_threshold(self, z, g, want):
        assert soft_threshold(z, g) == pytest.approx(want)

    def test_soft_threshold_negative(self):
        with pytest.raises(ValueError):
            soft_threshold(1.0, -1.0)

    @pytest.mark.parametrize("theta, want", [(0.5, 0.5), (2.0, 1.8148148148148149), (10.0, 2.35), (0.0, 0.0)])
    def test_scad_penalty_branches(self, theta, want):
        assert scad_penalty(theta, 1.0, 3.7) == pytest.approx(want, abs=1e-12)
        assert scad_penalty(-theta, 1.0, 3.7) == pytest.approx(want, abs=1e-12)

    @pytest.mark.parametrize("theta, want", [(0.5, 1.0), (2.0, 1.7 / 2.7), (10.0, 0.0)])
    def test_scad_derivative_branches(self, theta, want):
        assert scad_derivative(theta, 1.0, 3.7) == pytest.approx(want, abs=1e-12)

    @given(st.floats(0.05, 5), st.floats(2.05, 10))
    def test_scad_continuity(self, lam, tau):
        for edge in (lam, tau * lam):
            left, right = scad_penalty(edge * (1 - 1e-15), lam, tau), scad_penalty(edge * (1 + 1e-15), lam, tau)
            assert abs(left - right) <= 1e-12 * max(1.0, edge)
            assert scad_penalty(edge, lam, tau) == pytest.approx(scad_exact(edge, lam, tau), abs=1e-12)

    @given(st.floats(0.05, 5), st.floats(2.05, 10), st.floats(0.01, 0.99))
    def test_scad_derivative_matches_finite_difference(self, lam, tau, frac):
        h = 1e-6 * lam
        # one point inside each branch, away from the kinks
        for theta in (frac * lam, lam + frac * (tau - 1) * lam, tau * lam * (1 + frac)):
            if min(abs(theta - lam), abs(theta - tau * lam), theta) < 10 * h:
                continue
            fd = (scad_penalty(theta + h, lam, tau) - scad_penalty(theta - h, lam, tau)) / (2 * h)
            assert fd == pytest.approx(scad_derivative(theta, lam, tau), abs=1e-8 * max(1.0, lam) / min(1.0, lam))

    def test_scad_tau_validation(self):
        with pytest.raises(ValueError):
            PenaltySpec(PenaltyKind.SCAD, tau=2.0)

    def test_adaptive_weight_validation(self):
        with pytest.raises(ValueError):
            PenaltySpec(PenaltyKind.ADAPTIVE_L1, weights=np.array([1.0, 0.0]))


class TestScadUpdate:
    @given(st.floats(-6, 6), st.floats(0.3, 4), st.floats(0.1, 2), st.floats(2.2, 6))
    def test_matches_grid_search(self, u, a, lam, tau):
        got = scad_update(u, a, lam, tau)
        want = scad_grid_argmin(u, a, lam, tau)
        obj = lambda w: 0.5 * a * (w - u) ** 2 + scad_exact(w, lam, tau)
        # ties between separate minima are allowed; the objective must agree
        assert abs(got - want) <= 1e-4 or abs(obj(got) - obj(want)) <= 1e-10

    @pytest.mark.parametrize("u, want", [(0.5, 0.0), (1.5, 0.5), (3.0, (3.0 - 3.7 / 2.7) / (1 - 1 / 2.7)), (5.0, 5.0)])
    def test_unit_curvature_closed_form(self, u, want):
        assert scad_update(u, 1.0, 1.0, 3.7) == pytest.approx(want, abs=1e-12)


class TestLambdaMax:
    @pytest.mark.parametrize("seed", range(5))
    def test_null_model_above_lambda_max(self, seed):
        sch, des = small_instance(seed)
        lm = lambda_max(sch, des)
        fit = fit_lambda(sch, des, PenaltySpec(), lm * 1.0001)
        assert fit.df == 0
        assert fit.intercept == pytest.approx(math.log(sch.n_data / sch.weights.sum()), abs=1e-9)
        below = fit_lambda(sch, des, PenaltySpec(), lm * 0.9)
        assert below.df >= 1


class TestL1Oracle:
    @pytest.mark.parametrize("seed", range(10))
    def test_matches_proximal_gradient(self, seed):
        sch, des = tiny_instance(seed)
        assert sch.M == 50 and des.K == 3
        lm = lambda_max(sch, des)
        path = fit_path(sch, des, PenaltySpec(), SolverOptions(min_rel_change=0.0),
                        lambdas=np.geomspace(lm, lm * 1e-3, 20))
        Xs = des.standardized()
        for i in (4, 10, 16):
            fit = path[i]
            ref = proximal_gradient_lasso(Xs, sch.labels.astype(float), sch.weights, sch.n_data, path.lambdas[i])
            assert fit.intercept_std == pytest.approx(ref[0], abs=1e-4)
            np.testing.assert_allclose(fit.coef_std, ref[1:], atol=1e-4, rtol=0)


@pytest.fixture(scope="module")
def localized():
    sch, des = small_instance(3, n=60, K=4, M_dummy=(8, 8), localized=True, J=2)
    return sch, des, fit_path(sch, des, PenaltySpec(), SolverOptions(n_lambda=40, ratio=1e-3))


class TestPathProperties:
    def test_lambdas_strictly_decreasing(self, localized):
        assert np.all(np.diff(localized[2].lambdas) < 0)

    def test_kkt_certified(self, localized):
        sch, des, path = localized
        for fit in path.fits:
            assert fit.converged
            assert kkt_violation(sch, des, fit, path.penalty) <= 1e-7

    def test_df_trend(self, localized):
        dfs = np.array([f.df for f in localized[2].fits])
        drops = np.sum(np.diff(dfs) < 0)
        assert drops <= 0.1 * (dfs.size - 1)

    def test_df_counts_nonzeros(self, localized):
        for f in localized[2].fits:
            assert f.df == np.count_nonzero(f.coefficients) and np.isfinite(f.loglik)

    def test_objective_monotone(self, localized):
        for f in localized[2].fits:
            tr = np.array(f.objective_trace)
            assert np.all(np.diff(tr) <= 1e-12 * np.abs(tr[:-1]))

    def test_warm_start_equivalence(self, localized):
        sch, des, path = localized
        for i in (5, 15, len(path) - 1):
            cold = fit_lambda(sch, des, PenaltySpec(), path.lambdas[i])
            np.testing.assert_allclose(cold.coef_std, path[i].coef_std, atol=1e-5, rtol=0)

    def test_destandardization(self, localized):
        sch, des, path = localized
        for f in path.fits[::5]:
            std = f.intercept_std + des.standardized() @ f.coef_std
            orig = f.intercept + des.Z @ f.coefficients
            np.testing.assert_allclose(std, orig, atol=1e-10, rtol=0)

    def test_rejects_increasing_lambdas(self):
        sch, des = small_instance(0)
        with pytest.raises(ValueError):
            fit_path(sch, des, PenaltySpec(), lambdas=[0.1, 0.2])

    def test_empty_pattern(self):
        win = Window()
        sch = build_quadrature(PointPattern(np.zeros((0, 2)), win), win, (3, 3))
        des = build_design(CovariateTable(np.random.default_rng(0).normal(size=(9, 2)), ("a", "b")), None, sch)
        with pytest.raises(ValueError):
            fit_path(sch, des, PenaltySpec())

    def test_max_df_stops_path(self):
        sch, des = small_instance(1, n=60, K=4, M_dummy=(8, 8), localized=True, J=2)
        path = fit_path(sch, des, PenaltySpec(), SolverOptions(max_df=5))
        assert path.fits[-1].df > 5 and all(f.df <= 5 for f in path.fits[:-1])


class TestScadAndAdaptive:
    def test_scad_path_kkt(self):
        sch, des = small_instance(2, n=50, K=4, M_dummy=(6, 6))
        pen = PenaltySpec(PenaltyKind.SCAD)
        path = fit_path(sch, des, pen, SolverOptions(n_lambda=30))
        assert len(path) >= 5
        for f in path.fits:
            if f.converged:
                assert kkt_violation(sch, des, f, pen) <= 1e-7
        assert sum(f.converged for f in path.fits) >= 0.9 * len(path)

    def test_scad_large_lambda_matches_l1_zero(self):
        sch, des = small_instance(2, n=50, K=4, M_dummy=(6, 6))
        lm = lambda_max(sch, des)
        assert fit_lambda(sch, des, PenaltySpec(PenaltyKind.SCAD), lm * 1.01).df == 0

    def test_adaptive_weights_positive(self):
        sch, des = small_instance(4, n=50, K=4, M_dummy=(6, 6))
        v = adaptive_weights(sch, des)
        assert v.shape == (4,) and np.all(np.isfinite(v)) and np.all(v > 0)
        path = fit_path(sch, des, PenaltySpec(PenaltyKind.ADAPTIVE_L1))
        np.testing.assert_allclose(path.penalty.weights, v)
        for f in path.fits:
            assert kkt_violation(sch, des, f, path.penalty) <= 1e-7

    def test_ridge_effective_df_bounds(self):
        sch, des = small_instance(4, n=50, K=4, M_dummy=(6, 6))
        path = fit_path(sch, des, PenaltySpec(PenaltyKind.RIDGE), SolverOptions(n_lambda=10, min_path_fits=10))
        dfs = [ridge_effective_df(sch, des, f) for f in path.fits]
        assert all(0 <= d <= 4 for d in dfs)
        assert np.all(np.diff(dfs) >= -1e-9)


class TestUnpenalized:
    def test_none_penalty_stationary(self):
        sch, des = small_instance(5, n=80, K=3, M_dummy=(6, 6))
        path = fit_path(sch, des, PenaltySpec(PenaltyKind.NONE))
        assert len(path) == 1
        f = path[0]
        score = bt_score(np.r_[f.intercept_std, f.coef_std], std_design_matrix(des), sch)
        assert np.max(np.abs(score)) <= 1e-6

    def test_empty_support_closed_form(self):
        sch, des = small_instance(6)
        f = fit_unpenalized(sch, des, ())
        assert f.df == 0 and f.converged
        assert f.intercept == pytest.approx(math.log(sch.n_data / sch.weights.sum()), abs=1e-10)

    def test_refit_stationarity(self):
        sch, des = small_instance(7, n=80, K=4, M_dummy=(6, 6))
        f = fit_unpenalized(sch, des, [0, 2])
        A = std_design_matrix(des)[:, [0, 1, 3]]
        score = bt_score(np.r_[f.intercept_std, f.coef_std[[0, 2]]], A, sch)
        assert np.max(np.abs(score)) <= 1e-8
        assert set(np.flatnonzero(f.coefficients)) == {0, 2}

    def test_duplicate_column_dropped(self):
        sch, des = small_instance(8, n=60, K=2, M_dummy=(6, 6))
        X = des.Z
        dup = build_design(CovariateTable(np.column_stack([X[:, 0], X[:, 0], X[:, 1]]), ("a", "a2", "b")),
                           None, sch)
        single = fit_unpenalized(sch, des, [0, 1])
        double = fit_unpenalized(sch, dup, [0, 1, 2])
        assert len(double.dropped) == 1 and double.dropped[0] in (0, 1)
        kept = 1 - double.dropped[0]
        assert double.coefficients[kept] == pytest.approx(single.coefficients[0], abs=1e-8)
        assert double.coefficients[2] == pytest.approx(single.coefficients[1], abs=1e-8)
        assert double.loglik == pytest.approx(single.loglik, abs=1e-8)

    def test_separation_capped(self):
        win = Window()
        pts = np.array([[0.1, 0.1], [0.2, 0.3], [0.3, 0.2]])
        sch = build_quadrature(PointPattern(pts, win), win, (4, 4))
        # covariate positive only at the data points: the MLE runs off to infinity
        x = np.r_[np.ones(3), np.zeros(16)]
        des = build_design(CovariateTable(x[:, None], ("x",)), None, sch)
        f = fit_unpenalized(sch, des, [0])
        assert f.capped == (0,) and not f.converged

    def test_truth_within_three_standard_errors(self):
        r = np.random.default_rng(42)
        win = Window()
        beta = np.array([0.6, -0.4])
        field = lambda p: np.column_stack([np.sin(4 * p[:, 0]) + p[:, 1], np.cos(3 * p[:, 1]) * p[:, 0]])
        # thinning from a dominating rate
        b0 = math.log(1500.0)
        cand = win.uniform(r.poisson(1500 * math.e ** 2), r)
        lam = np.exp(b0 + field(cand) @ beta)
        pts = cand[r.random(cand.shape[0]) * 1500 * math.e ** 2 < lam]
        sch = build_quadrature(PointPattern(pts, win), win, (64, 64))
        des = build_design(CovariateTable(field(sch.nodes), ("a", "b")), None, sch)
        f = fit_unpenalized(sch, des, [0, 1])
        A = np.column_stack([np.ones(sch.M), des.Z])
        cov = np.linalg.inv(-bt_hessian(np.r_[f.intercept, f.coefficients], A, sch))
        se = np.sqrt(np.diag(cov))[1:]
        assert np.all(np.abs(f.coefficients - beta) <= 3 * se)


class TestFitResult:
    def test_support(self):
        f = FitResult(0.0, np.array([0.0, 1.0, 0.0, -2.0]), 0.1, True, 1, -1.0, 2)
        np.testing.assert_array_equal(f.support, [1, 3])
