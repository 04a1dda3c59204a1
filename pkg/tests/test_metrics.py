import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haarsel.metrics import EvaluationReport, evaluate, rmspe_beta, tpr_global, tpr_local, tpr_local_detail
from haarsel.select import Criterion, Method, MethodConfig, run_method
from haarsel.simulate import GrfSpec, calibrate_intercept, simulate_grfs, simulate_ipp, true_beta, true_beta_matrix
from haarsel.wavelet import HaarBasis, Orientation, WaveletIndex, project

seeds = st.integers(0, 2 ** 31 - 1)


def crafted():
    """Two predictors at J = 2: a scaling coefficient and one lower-left D atom."""
    b = HaarBasis(2)
    w = np.zeros(2 * b.R)
    w[0] = 0.5
    w[b.R + b.atoms.index(WaveletIndex(1, Orientation.D, 0, 0))] = 1.0
    return b, w


class TestTprGlobal:
    def test_all_found(self):
        assert tpr_global(range(10), range(10)) == 1.0

    def test_none_found(self):
        assert tpr_global(set(), range(10)) == 0.0

    def test_seven_of_ten_with_noise(self):
        # [PAPER] 0.7 from seven true predictors plus a noise pick
        assert tpr_global(set(range(7)) | {42}, range(10)) == pytest.approx(0.7)

    def test_empty_truth(self):
        with pytest.raises(ValueError):
            tpr_global({1}, set())

    @given(st.sets(st.integers(0, 20)), st.sets(st.integers(0, 20), min_size=1))
    def test_bounds(self, sel, truth):
        assert 0.0 <= tpr_global(sel, truth) <= 1.0


class TestTprLocal:
    def test_two_point_instance(self):
        # A: truth {0, 1}, est {0}; B: truth {0}, est {0}
        b = HaarBasis(2)
        w = np.zeros(2 * b.R)
        w[0] = 1.0
        pts = np.array([[0.2, 0.2], [0.7, 0.7]])
        truth = np.array([[1.0, 3.0], [2.0, 0.0]])
        assert tpr_local(w, b, pts, truth) == pytest.approx(0.75)

    def test_crafted_by_hand(self):
        b, w = crafted()
        pts = np.array([[0.25, 0.25], [0.75, 0.75], [0.6, 0.1]])
        # estimated sets: {0, 1}, {0}, {0}; truth sets: {0, 1}, {1}, empty
        truth = np.array([[1.0, 1.0], [0.0, 2.0], [0.0, 0.0]])
        assert tpr_local_detail(w, b, pts, truth) == (0.5, 2, 1)

    def test_all_zero_fit(self):
        pts = np.random.default_rng(0).random((5, 2))
        assert tpr_local(np.zeros(48), HaarBasis(2), pts, np.ones((5, 3))) == 0.0

    def test_oracle_fit(self):
        b = HaarBasis(2)
        w = np.concatenate([project(lambda t: true_beta(p, t), b) for p in (1, 2)])
        pts = np.random.default_rng(1).random((5, 2))
        assert tpr_local(w, b, pts, true_beta_matrix(pts, 2)) == 1.0

    @given(seeds)
    def test_covering_fit_scores_one(self, seed):
        rng = np.random.default_rng(seed)
        b = HaarBasis(2)
        w = np.zeros(3 * b.R)
        w[::b.R] = rng.normal(size=3) + 5.0
        truth = rng.normal(size=(5, 3)) * (rng.random((5, 3)) < 0.6)
        truth[0, 0] = 1.0
        assert tpr_local(w, b, rng.random((5, 2)), truth) == 1.0

    @given(seeds)
    def test_in_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        b = HaarBasis(2)
        w = rng.normal(size=3 * b.R) * (rng.random(3 * b.R) < 0.2)
        truth = rng.normal(size=(5, 3))
        assert 0.0 <= tpr_local(w, b, rng.random((5, 2)), truth) <= 1.0

    def test_no_points(self):
        with pytest.raises(ValueError):
            tpr_local(np.zeros(4), HaarBasis(1), np.zeros((0, 2)), np.zeros((0, 1)))

    def test_all_truth_empty(self):
        with pytest.raises(ValueError):
            tpr_local(np.zeros(4), HaarBasis(1), [[0.1, 0.1]], [[0.0]])

    def test_global_fit(self):
        pts = np.array([[0.1, 0.1], [0.9, 0.9]])
        assert tpr_local(np.array([1.0, 0.0]), None, pts, [[1.0, 1.0], [0.0, 1.0]]) == pytest.approx(0.25)


class TestRmspe:
    def test_crafted_by_hand(self):
        b, w = crafted()
        truth = lambda t: np.column_stack([np.ones(len(t)), np.zeros(len(t))])
        # predictor 0 is off by 0.5 in all four cells; predictor 1 is off by 2 in one cell
        assert rmspe_beta(w, b, truth, 2, grid=2) == pytest.approx(math.sqrt((4 * 0.25 + 4) / 8), abs=0)

    def test_exact_fit(self):
        b = HaarBasis(2)
        w = np.concatenate([project(lambda t: true_beta(p, t), b) for p in (1, 2)])
        assert rmspe_beta(w, b, lambda t: true_beta_matrix(t, 2), 2) <= 1e-12

    def test_zero_fit_matches_brute_force(self):
        G, P = 64, 10
        total = 0.0
        for i in range(G):
            for k in range(G):
                t = ((i + 0.5) / G, (k + 0.5) / G)
                total += sum(float(true_beta(p, t)) ** 2 for p in range(1, P + 1))
        want = math.sqrt(total / (G * G * P))
        got = rmspe_beta(np.zeros(P * 16), HaarBasis(2), lambda t: true_beta_matrix(t, P), P, grid=G)
        assert got == pytest.approx(want, rel=1e-12)
        # regression baseline for the bundled surfaces
        assert got == pytest.approx(0.9642030, abs=1e-6)

    @given(st.floats(-10, 10), st.integers(1, 6), st.integers(0, 5))
    def test_constant_offset(self, c, P, p):
        p = p % P
        b = HaarBasis(1)
        w = np.zeros(P * b.R)
        w[p * b.R] = c
        got = rmspe_beta(w, b, lambda t: np.zeros((len(t), P)), P, grid=8)
        assert got == pytest.approx(abs(c) / math.sqrt(P), abs=1e-12)

    @given(seeds)
    def test_predictor_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        b, P = HaarBasis(2), 3
        w = rng.normal(size=(P, b.R))
        perm = rng.permutation(P)
        truth = lambda t: true_beta_matrix(t, P)
        shuffled = lambda t: true_beta_matrix(t, P)[:, perm]
        a = rmspe_beta(w.ravel(), b, truth, P, grid=16)
        assert rmspe_beta(w[perm].ravel(), b, shuffled, P, grid=16) == pytest.approx(a, rel=1e-12)

    @given(seeds)
    def test_cell_order_invariance(self, seed):
        rng = np.random.default_rng(seed)
        b, P, G = HaarBasis(2), 2, 8
        w = rng.normal(size=P * b.R)
        # y-major enumeration and an explicit per-cell sum
        total = 0.0
        for k in range(G):
            for i in range(G):
                t = np.array([[(i + 0.5) / G, (k + 0.5) / G]])
                est = (b.matrix(t) @ w.reshape(P, b.R).T)[0]
                total += np.sum((est - true_beta_matrix(t, P)[0]) ** 2)
        want = math.sqrt(total / (G * G * P))
        assert rmspe_beta(w, b, lambda t: true_beta_matrix(t, P), P, grid=G) == pytest.approx(want, rel=1e-12)

    def test_non_negative_and_grid_check(self):
        assert rmspe_beta(np.zeros(4), HaarBasis(1), lambda t: np.zeros((len(t), 1)), 1, grid=2) == 0.0
        with pytest.raises(ValueError):
            rmspe_beta(np.zeros(4), HaarBasis(1), lambda t: np.zeros((len(t), 1)), 1, grid=1)


def scaling_truth(t):
    t = np.asarray(t).reshape(-1, 2)
    return np.column_stack([np.ones(len(t)), np.zeros((len(t), 2))])


@pytest.fixture(scope="module")
def instance():
    covs = simulate_grfs(GrfSpec(resolution=(32, 32), seed=5), 3)
    b0 = calibrate_intercept(300.0, covs[0])
    return simulate_ipp(covs[0].map(lambda v: np.exp(b0 + v)), seed=6), covs


class TestEvaluate:
    def run(self, instance, method):
        pattern, covs = instance
        res = run_method(pattern, covs, MethodConfig(method=method, criterion=Criterion.BIC))
        return evaluate(res, scaling_truth, {0}, pattern.points, scenario="toy", mu=300, seed=5)

    def test_global_method_has_no_local_rate(self, instance):
        rep = self.run(instance, Method.LASSO)
        assert rep.tpr_local is None and rep.method == "LASSO"

    def test_localized_method_reports_all(self, instance):
        rep = self.run(instance, Method.LLI)
        assert rep.tpr_local is not None
        for v in (rep.tpr_global, rep.tpr_local):
            assert 0.0 <= v <= 1.0
        assert rep.rmspe >= 0 and rep.runtime_s > 0
        assert rep.n_events == len(instance[0])

    def test_deterministic(self, instance):
        a = self.run(instance, Method.LLS).as_dict()
        b = self.run(instance, Method.LLS).as_dict()
        a.pop("runtime_s"), b.pop("runtime_s")
        assert a == b

    def test_report_fields(self):
        rep = EvaluationReport("poisson", 100.0, "LLI", 1, 0.1, 0.5, 0.4, 1.0)
        assert set(rep.as_dict()) >= {"scenario", "mu", "method", "seed", "rmspe", "tpr_global", "tpr_local",
                                      "runtime_s"}
