import math

import numpy as np
import pytest

from wsswr.kernel import KernelSpec, QMatrix
from wsswr.selection import SelectionResult
from wsswr.solver import (CONTINUE, CONVERGED, EXHAUSTED, MAX_ITER, SolverParams, TrainingError,
                          compute_rho, index_classes, init_state, kkt_violation, objective_value,
                          reconstruct_full_gradient, shrink, solve_subproblem, stopping_check, train,
                          unshrink_reconstruct, update_gradient)
from wsswr.synthetic import from_arrays, gaussian_blobs, uniform_problem
from helpers import random_points
from oracles import dense_kernel, dual_objective, pair_objective_grid, qp_projected_gradient, violation


def toy():
    X = np.array([[2.0, 2.0], [1.5, 3.0], [-1.0, -2.0], [-2.0, -0.5]])
    return from_arrays(X, [1, 1, -1, -1]), X


class TestInit:
    def test_zero_start(self):
        d = gaussian_blobs(10, 2, seed=0)
        s = init_state(d)
        np.testing.assert_array_equal(s.alpha, np.zeros(10))
        np.testing.assert_array_equal(s.grad, -np.ones(10))
        assert objective_value(s) == 0.0
        assert s.iteration == 0 and s.optimized_T.size == 0
        assert s.tau == 1e-12

    def test_classes_at_zero(self):
        d = from_arrays(np.zeros((4, 1)), [1, 1, -1, -1])
        s = init_state(d)
        assert index_classes(s.y, s.alpha, s.C).tolist() == [1, 1, 4, 4]

    @pytest.mark.parametrize("kw", [{"C": 0.0}, {"C": -1.0}, {"epsilon": 0.0}, {"tau": -1.0}])
    def test_bad_params(self, kw):
        with pytest.raises(ValueError):
            SolverParams(**kw)

    def test_every_index_in_exactly_one_class(self):
        rng = np.random.default_rng(0)
        y = np.where(rng.random(200) < 0.5, 1.0, -1.0)
        alpha = rng.choice([0.0, 0.3, 1.0], size=200)
        cls = index_classes(y, alpha, 1.0)
        assert set(np.unique(cls)) <= {0, 1, 2, 3, 4}
        np.testing.assert_array_equal(cls == 0, (alpha > 0) & (alpha < 1))
        np.testing.assert_array_equal(cls == 1, (y > 0) & (alpha == 0))
        np.testing.assert_array_equal(cls == 4, (y < 0) & (alpha == 0))


def two_state(y, alpha, grad, C=1.0, tau=1e-12):
    d = from_arrays(np.zeros((2, 1)), y)
    s = init_state(d, C=C, tau=tau)
    s.alpha = np.array(alpha, dtype=float)
    s.grad = np.array(grad, dtype=float)
    return s


class TestSubproblem:
    def test_clipped_at_C(self):
        s = two_state([1, -1], [0, 0], [-1, -1])
        # K_ii = K_jj = 1, K_ij = 0.5 so a = 1; Q_ij = -0.5
        ai, aj = solve_subproblem(0, 1, s, -0.5, 1.0, 1.0)
        assert (ai, aj) == (1.0, 1.0)
        gi, gj, _ = pair_objective_grid(-1, -1, 1, -1, 0, 0, 1.0, -0.5, 1.0, 1.0)
        assert (gi, gj) == (1.0, 1.0)

    def test_same_label_equal_gradient_no_step(self):
        s = two_state([1, 1], [0.3, 0.6], [0.2, 0.2])
        assert solve_subproblem(0, 1, s, 0.4, 1.0, 1.0) == (0.3, 0.6)

    def test_matches_grid_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(40):
            y = rng.choice([1.0, -1.0], 2)
            C = float(rng.uniform(0.5, 3))
            alpha = rng.uniform(0, C, 2) * (rng.random(2) < 0.7)
            grad = rng.normal(size=2)
            K = dense_kernel(rng.uniform(-1, 1, (2, 3)), "rbf", 0.7)
            Q = np.outer(y, y) * K
            s = two_state(y, alpha, grad, C=C)
            ai, aj = solve_subproblem(0, 1, s, Q[0, 1], Q[0, 0], Q[1, 1])
            gi, gj, fmin = pair_objective_grid(grad[0], grad[1], y[0], y[1], alpha[0], alpha[1],
                                               Q[0, 0], Q[0, 1], Q[1, 1], C)
            step = C / 2000
            # feasibility of the analytic update
            assert 0 <= ai <= C and 0 <= aj <= C
            assert y[0] * ai + y[1] * aj == pytest.approx(y[0] * alpha[0] + y[1] * alpha[1], abs=1e-12)
            di, dj = ai - alpha[0], aj - alpha[1]
            f = grad[0] * di + grad[1] * dj + 0.5 * (Q[0, 0] * di ** 2 + 2 * Q[0, 1] * di * dj + Q[1, 1] * dj ** 2)
            assert f <= fmin + 1e-12
            assert abs(ai - gi) <= 2 * step + 1e-9 and abs(aj - gj) <= 2 * step + 1e-9

    def test_nonpositive_curvature_uses_tau(self):
        # sigmoid pair with K_ii + K_jj - 2 K_ij < 0
        X = np.array([[2.0, 0.0], [1.0, 0.0]])
        K = dense_kernel(X, "sigmoid", 1.0, 0.0)
        for y in ([1.0, 1.0], [1.0, -1.0]):
            y = np.array(y)
            Q = np.outer(y, y) * K
            assert Q[0, 0] + Q[1, 1] - 2 * y[0] * y[1] * Q[0, 1] < 0
            s = two_state(y, [0.2, 0.5], [-1.0, -0.3])
            ai, aj = solve_subproblem(0, 1, s, Q[0, 1], Q[0, 0], Q[1, 1])
            gi, gj, _ = pair_objective_grid(-1.0, -0.3, y[0], y[1], 0.2, 0.5, Q[0, 0], Q[0, 1], Q[1, 1],
                                            1.0, tau=1e-12)
            assert abs(ai - gi) <= 1e-3 and abs(aj - gj) <= 1e-3
            di, dj = ai - 0.2, aj - 0.5
            f = -1.0 * di - 0.3 * dj + 0.5 * (Q[0, 0] * di ** 2 + 2 * Q[0, 1] * di * dj + Q[1, 1] * dj ** 2)
            assert f <= 0


class TestGradient:
    def setup_method(self):
        rng = np.random.default_rng(2)
        X, y = random_points(rng, 5)
        self.d = from_arrays(X, y)
        self.Q = np.outer(y, y) * dense_kernel(X, "rbf", 0.5)
        self.q = QMatrix(self.d, KernelSpec("rbf", 0.5))

    def test_single_update(self):
        s = init_state(self.d)
        all_idx = np.arange(5)
        s.alpha[[0, 1]] = [0.4, 0.4]
        update_gradient(s, 0, 1, 0.4, 0.4, self.q.column(0, all_idx), self.q.column(1, all_idx))
        np.testing.assert_allclose(s.grad, self.Q @ s.alpha - 1, atol=1e-10)

    def test_zero_step(self):
        s = init_state(self.d)
        update_gradient(s, 0, 1, 0.0, 0.0, None, None)
        np.testing.assert_array_equal(s.grad, -np.ones(5))

    def test_sequential_equals_combined(self):
        all_idx = np.arange(5)
        c0, c1, c2 = (self.q.column(k, all_idx) for k in range(3))
        a = init_state(self.d)
        update_gradient(a, 0, 1, 0.3, 0.1, c0, c1)
        update_gradient(a, 0, 2, 0.2, 0.5, c0, c2)
        b = init_state(self.d)
        b.grad += c0 * 0.5 + c1 * 0.1 + c2 * 0.5
        np.testing.assert_allclose(a.grad, b.grad, atol=1e-14)


class TestStopping:
    def test_zero_start_continues(self):
        d = from_arrays(np.zeros((2, 1)), [1, -1])
        s = init_state(d)
        assert kkt_violation(s) == 2.0
        assert stopping_check(s, SelectionResult((0, 1), 2.0)) == CONTINUE

    def test_outcomes(self):
        s = init_state(from_arrays(np.zeros((2, 1)), [1, -1]))
        assert stopping_check(s, SelectionResult(None, 1e-4)) == CONVERGED
        assert stopping_check(s, SelectionResult(None, -math.inf, exhausted=True)) == EXHAUSTED

    def test_wsswr_bound_l9(self):
        d = uniform_problem(9, 2, seed=3)
        m = train(d, KernelSpec("rbf", 1.0), "wsswr", C=100.0)
        assert m.diagnostics.iterations <= 5

    def test_max_iter_status(self):
        d = uniform_problem(60, 2, seed=4)
        m = train(d, KernelSpec("rbf", 1.0), "wss3", C=100.0, max_iter=3)
        assert m.diagnostics.iterations == 3
        assert m.diagnostics.status == MAX_ITER


class TestShrinking:
    def test_disabled_keeps_everything_active(self):
        d = uniform_problem(80, 2, seed=5)
        sizes = []
        train(d, KernelSpec("rbf", 2.0), "wss3", C=50.0, shrinking=False,
              callback=lambda s, q: sizes.append(s.active.size))
        assert len(sizes) > 80 and set(sizes) == {80}

    def test_shrinking_happens_and_objective_agrees(self):
        d = uniform_problem(150, 3, seed=6)
        sizes = []
        on = train(d, KernelSpec("rbf", 2.0), "wss3", C=50.0, shrinking=True,
                   callback=lambda s, q: sizes.append(s.active.size))
        off = train(d, KernelSpec("rbf", 2.0), "wss3", C=50.0, shrinking=False)
        assert min(sizes) < 150
        assert abs(on.diagnostics.objective - off.diagnostics.objective) <= 10 * 1e-3
        assert on.diagnostics.violation <= 1e-3

    def test_unshrink_reconstructs_gradient(self):
        d = uniform_problem(150, 3, seed=6)
        checked = []

        def check(s, q):
            if not s.all_active:
                unshrink_reconstruct(s, q)
                np.testing.assert_allclose(s.grad, reconstruct_full_gradient(s, q), atol=1e-8)
                checked.append(s.iteration)

        train(d, KernelSpec("rbf", 2.0), "wss3", C=50.0, callback=check)
        assert checked

    def test_shrink_drops_only_bounded_nonviolators(self):
        rng = np.random.default_rng(7)
        d = uniform_problem(40, 2, seed=7)
        q = QMatrix(d, KernelSpec("rbf", 1.0))
        s = init_state(d, C=1.0)
        s.alpha = rng.choice([0.0, 1.0, 0.5], 40)
        s.grad = rng.normal(size=40)
        s.unshrunk = True
        before = s.alpha.copy()
        shrink(s, q)
        dropped = np.setdiff1d(np.arange(40), s.active)
        assert np.all((before[dropped] == 0) | (before[dropped] == 1.0))


class TestTrain:
    def test_toy_matches_oracle(self):
        d, X = toy()
        m = train(d, KernelSpec("linear"), "wss3", C=1.0)
        y = d.labels
        Q = np.outer(y, y) * dense_kernel(X, "linear")
        _, f = qp_projected_gradient(Q, y, 1.0)
        assert m.diagnostics.violation <= 1e-3
        assert abs(m.diagnostics.objective - f) <= 1e-6
        assert m.evaluate(d).accuracy == 100.0

    def test_toy_wsswr_pairs_start_at_zero(self):
        d, _ = toy()
        m = train(d, KernelSpec("linear"), "wsswr", record_pairs=True)
        assert m.diagnostics.pairs
        for i, j, old_i, old_j, new_i, new_j in m.diagnostics.pairs:
            assert old_i == 0.0 and old_j == 0.0

    def test_single_class(self):
        d = from_arrays([[0.0], [1.0]], [1, 1])
        with pytest.raises(TrainingError):
            train(d, KernelSpec("rbf"))

    def test_feasible_after_every_iteration(self):
        d = uniform_problem(60, 3, seed=8)
        y = d.labels

        def check(s, q):
            assert np.all(s.alpha >= 0) and np.all(s.alpha <= s.C)
            assert abs(y @ s.alpha) <= 1e-10

        for sel in ["wss1", "wss3", "wsswr"]:
            train(d, KernelSpec("rbf", 1.0), sel, C=10.0, callback=check)

    def test_objective_matches_recomputation(self):
        d = uniform_problem(50, 3, seed=9)
        X = d.matrix.toarray()
        Q = np.outer(d.labels, d.labels) * dense_kernel(X, "rbf", 1.0)
        for sel in ["wss1", "wss3", "wsswr"]:
            m = train(d, KernelSpec("rbf", 1.0), sel, C=4.0)
            diag = m.diagnostics
            f = dual_objective(Q, diag.alpha)
            assert diag.objective == pytest.approx(f, abs=1e-10)
            assert diag.trace[-1][2] == pytest.approx(f, abs=1e-9)
            assert violation(Q, d.labels, diag.alpha, 4.0) == pytest.approx(diag.violation, abs=1e-9)

    def test_selection_counts(self):
        d = uniform_problem(50, 3, seed=10)
        for sel in ["wss3", "wsswr"]:
            diag = train(d, KernelSpec("rbf", 1.0), sel, C=4.0).diagnostics
            assert diag.selection_counts.sum() == 2 * diag.iterations

    def test_rho_from_free_extremes(self):
        s = init_state(from_arrays(np.zeros((3, 1)), [1, -1, 1]), C=1.0)
        s.alpha = np.array([0.5, 0.5, 0.0])
        s.grad = np.array([-0.2, 0.4, -1.0])
        # v = (0.2, 0.4, 1.0); up: all, low: {0, 1}
        assert compute_rho(s) == pytest.approx(-(1.0 + 0.2) / 2)

    def test_rho_zero_when_a_side_is_empty(self):
        s = init_state(from_arrays(np.zeros((2, 1)), [1, 1]), C=1.0)
        s.grad = np.array([0.3, 0.1])
        # both y = +1 at alpha = 0: nothing in I_low
        assert compute_rho(s) == 0.0

    def test_deterministic(self):
        d = uniform_problem(80, 3, seed=11)
        a = train(d, KernelSpec("rbf", 1.0), "wss3", C=8.0)
        b = train(d, KernelSpec("rbf", 1.0), "wss3", C=8.0)
        np.testing.assert_array_equal(a.diagnostics.alpha, b.diagnostics.alpha)
        assert a.rho == b.rho


class TestOracleAgreement:
    """The same 50 problems as the oracle acceptance check, solved to a tight tolerance."""

    @pytest.mark.parametrize("epsilon, tol", [(1e-6, 1e-8), (1e-8, 1e-10)])
    def test_objective_matches_dense_qp(self, epsilon, tol):
        gaps = []
        for seed in range(50):
            rng = np.random.default_rng(2000 + seed)
            l = int(rng.integers(4, 21))
            kind = ("rbf", "linear")[seed % 2]
            X, y = random_points(rng, l)
            m = train(from_arrays(X, y), KernelSpec(kind, 0.5), "wss3", C=1.0, epsilon=epsilon)
            Q = np.outer(y, y) * dense_kernel(X, kind, 0.5)
            _, f = qp_projected_gradient(Q, y, 1.0, tol=1e-10)
            assert m.diagnostics.violation <= epsilon
            assert violation(Q, y, m.diagnostics.alpha, 1.0) <= epsilon * (1 + 1e-6)
            gaps.append(abs(m.diagnostics.objective - f))
        assert max(gaps) <= tol

    def test_loose_stop_gap_bounded_by_violation(self):
        # at eps = 1e-3 the gap is small but not 1e-6 small; it stays below eps * C * l
        for seed in range(50):
            rng = np.random.default_rng(2000 + seed)
            l = int(rng.integers(4, 21))
            kind = ("rbf", "linear")[seed % 2]
            X, y = random_points(rng, l)
            m = train(from_arrays(X, y), KernelSpec(kind, 0.5), "wss3", C=1.0)
            Q = np.outer(y, y) * dense_kernel(X, kind, 0.5)
            _, f = qp_projected_gradient(Q, y, 1.0, tol=1e-10)
            assert -1e-12 <= m.diagnostics.objective - f <= 1e-3 * l
