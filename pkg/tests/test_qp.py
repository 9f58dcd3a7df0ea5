import numpy as np
import pytest

from oracles import box_qp_oracle, lp_vertex_oracle
from peakramp.qp import (QpProblem, QpStatus, kkt_residuals, solve_qp)


def box_instance(seed: int):
    """Seeded random instance: PSD (or zero) curvature, one equality, box."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 9))
    if seed % 5 == 0:
        Q = np.zeros((n, n))  # exercise the LP path
    else:
        M = rng.normal(size=(n, n))
        Q = M.T @ M / n
    q = rng.normal(size=n)
    lo = -rng.random(n) - 0.2
    hi = rng.random(n) + 0.2
    a = rng.normal(size=n)
    x0 = rng.uniform(lo, hi)  # guarantees feasibility
    b = float(a @ x0)
    G = np.vstack([np.eye(n), -np.eye(n)])
    h = np.concatenate([hi, -lo])
    problem = QpProblem(Q, q, a[None, :], [b], G, h)
    return problem, (Q, q, a, b, lo, hi)


class TestExamples:
    def test_symmetric_equality(self):
        p = QpProblem(2 * np.eye(2), np.zeros(2), [[1.0, 1.0]], [2.0])
        s = solve_qp(p)
        assert s.status is QpStatus.OPTIMAL
        assert s.primal == pytest.approx([1.0, 1.0], abs=1e-6)
        assert s.objective == pytest.approx(2.0, abs=1e-6)

    def test_lp_vertex(self):
        p = QpProblem(np.zeros((1, 1)), [-1.0],
                      ineq_mat=[[1.0], [-1.0]], ineq_rhs=[1.0, 0.0])
        s = solve_qp(p)
        assert s.status is QpStatus.OPTIMAL
        assert s.primal == pytest.approx([1.0], abs=1e-6)
        assert s.objective == pytest.approx(-1.0, abs=1e-6)

    def test_random_instances_match_active_set_oracle(self):
        for seed in range(100):
            problem, (Q, q, a, b, lo, hi) = box_instance(seed)
            s = solve_qp(problem)
            assert s.status is QpStatus.OPTIMAL, (seed, s.status)
            residuals = kkt_residuals(problem, s)
            assert max(residuals) <= 1e-6, (seed, residuals)
            ref = box_qp_oracle(Q, q, a, b, lo, hi)
            assert s.objective == pytest.approx(ref, abs=1e-4), seed


class TestKktResiduals:
    def test_exact_solution_zero(self):
        p = QpProblem(2 * np.eye(2), np.zeros(2), [[1.0, 1.0]], [2.0])
        from peakramp.qp import QpSolution
        exact = QpSolution(primal=np.array([1.0, 1.0]), eq_duals=np.array([-2.0]),
                           ineq_duals=np.zeros(0), objective=2.0,
                           status=QpStatus.OPTIMAL)
        assert kkt_residuals(p, exact) == pytest.approx((0, 0, 0, 0), abs=1e-12)

    def test_perturbation_linearity(self):
        p = QpProblem(2 * np.eye(2), np.zeros(2), [[1.0, 1.0]], [2.0])
        from peakramp.qp import QpSolution
        for delta in (1e-3, 1e-2, 1e-1):
            perturbed = QpSolution(
                primal=np.array([1.0 + delta, 1.0]), eq_duals=np.array([-2.0]),
                ineq_duals=np.zeros(0), objective=0.0, status=QpStatus.OPTIMAL)
            stat, *_ = kkt_residuals(p, perturbed)
            assert stat == pytest.approx(2 * delta, rel=1e-9)

    def test_solver_output_self_check(self):
        for seed in range(20):
            problem, _ = box_instance(seed)
            s = solve_qp(problem, tol=1e-8)
            assert max(kkt_residuals(problem, s)) <= 1e-6


class TestInvariants:
    def test_duality_sanity(self):
        # Lagrangian at the returned point equals the primal objective
        tol = 1e-8
        for seed in range(30):
            problem, _ = box_instance(seed)
            s = solve_qp(problem, tol=tol)
            x, y, z = s.primal, s.eq_duals, s.ineq_duals
            lagrangian = (problem.objective(x)
                          + y @ (problem.eq_mat @ x - problem.eq_rhs)
                          + z @ (problem.ineq_mat @ x - problem.ineq_rhs))
            assert lagrangian == pytest.approx(s.objective, abs=10 * tol * 100)

    def test_relaxation_monotone(self):
        for seed in range(20):
            problem, (Q, q, a, b, lo, hi) = box_instance(seed)
            s = solve_qp(problem)
            wider = QpProblem(Q, q, a[None, :], [b],
                              np.vstack([np.eye(len(q)), -np.eye(len(q))]),
                              np.concatenate([hi + 0.5, -(lo - 0.5)]))
            s_wide = solve_qp(wider)
            assert s_wide.objective <= s.objective + 1e-6

    def test_lp_matches_vertex_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            n = int(rng.integers(2, 7))
            c = rng.normal(size=n)
            lo, hi = -rng.random(n) - 0.2, rng.random(n) + 0.2
            a = rng.normal(size=n)
            b = float(a @ rng.uniform(lo, hi))
            G = np.vstack([np.eye(n), -np.eye(n)])
            h = np.concatenate([hi, -lo])
            s = solve_qp(QpProblem(np.zeros((n, n)), c, a[None, :], [b], G, h))
            assert s.status is QpStatus.OPTIMAL
            ref = lp_vertex_oracle(c, a[None, :], [b], G, h)
            assert s.objective == pytest.approx(ref, abs=1e-5)

    def test_determinism(self):
        problem, _ = box_instance(3)
        s1 = solve_qp(problem)
        s2 = solve_qp(problem)
        assert np.array_equal(s1.primal, s2.primal)
        assert s1.objective == s2.objective


class TestFailureModes:
    def test_infeasible(self):
        p = QpProblem(np.zeros((1, 1)), [0.0],
                      ineq_mat=[[1.0], [-1.0]], ineq_rhs=[-1.0, -1.0])
        assert solve_qp(p).status in (QpStatus.INFEASIBLE, QpStatus.ITER_LIMIT)

    def test_unbounded(self):
        p = QpProblem(np.zeros((1, 1)), [-1.0], ineq_mat=[[-1.0]], ineq_rhs=[0.0])
        assert solve_qp(p).status in (QpStatus.UNBOUNDED, QpStatus.ITER_LIMIT)

    def test_non_psd_rejected(self):
        with pytest.raises(ValueError):
            QpProblem(-np.eye(2), np.zeros(2))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            QpProblem([[1.0, 2.0], [0.0, 1.0]], np.zeros(2))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            QpProblem(np.eye(2), np.zeros(2), eq_mat=[[1.0, 1.0, 1.0]], eq_rhs=[0.0])
