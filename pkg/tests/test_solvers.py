import numpy as np
import pytest

from lowrank import composite, operators as ops, penalties, problems, solvers
from lowrank.points import FactorSparsePoint, SymPoint
from lowrank.proxsub import QuadPlusLinear, Quadratic, Unconstrained
from lowrank.regularity import dist_procrustes, estimate_rip
from lowrank.solvers import (SolverConfig, geometric, gradient_descent,
                             initialize, polyak, prox_linear)

from test_composite import small_instance


def absolute_value_instance():
    """f = |s| via the sparse block of a scalar factor-plus-sparse problem."""
    e = ops.make_ensemble(ops.MASK, 1, 1, 1.0, seed=0)
    zero = np.zeros(1)
    obs = ops.Observation(b=zero.copy(), outliers=np.empty(0, dtype=np.int64),
                          noise=zero.copy(), clean=zero.copy(), p_fail=0.0)
    truth = FactorSparsePoint(np.zeros((1, 1)), np.zeros((1, 1)))
    return composite.ProblemInstance(ensemble=e, observation=obs,
                                     penalty=penalties.SCALED_L1, r=1,
                                     constraint=Unconstrained(), truth=truth,
                                     m_sharp=np.zeros((1, 1)))


class TestPolyak:
    def test_absolute_value_one_step(self):
        # f = |s|: the Polyak step (f - 0)/||zeta||^2 = 1 lands on the optimum
        inst = absolute_value_instance()
        x0 = FactorSparsePoint(np.zeros((1, 1)), np.array([[1.0]]))
        f0 = composite.objective(inst, x0)
        zeta = composite.subgradient(inst, x0)
        assert f0 == pytest.approx(1.0)
        step = f0 / zeta.dot(zeta)
        assert step == pytest.approx(1.0)
        x1 = x0 - step * zeta
        assert x1.s[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert composite.objective(inst, x1) == 0.0

    def test_start_at_truth_stalls(self):
        inst = small_instance()
        trace = polyak(inst, inst.truth, SolverConfig(max_iters=10))
        assert trace.status == solvers.STALLED
        assert trace.final_k == 0
        assert trace.final_rel_error == pytest.approx(0.0, abs=1e-10)

    def test_linear_convergence_clean(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_II, 30, 30, 2,
                                              8 * 2 * 30, p_fail=0.0, seed=4)
        x0 = initialize(inst.truth, 0.3, seed=1)
        trace = polyak(inst, x0, SolverConfig(max_iters=2000))
        assert trace.status == solvers.CONVERGED
        assert trace.final_rel_error < 1e-5

    def test_distance_monotone_in_sharp_regime(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_II, 20, 20, 2,
                                              8 * 2 * 20, p_fail=0.0, seed=7)
        x0 = initialize(inst.truth, 0.1, seed=2)
        cfg = SolverConfig(max_iters=300, keep_iterates=True)
        trace = polyak(inst, x0, cfg)
        dists = [dist_procrustes(p.x, inst.truth.x) for p in trace.iterates]
        assert all(b <= a + 1e-9 for a, b in zip(dists, dists[1:]))


class TestGeometric:
    def test_zero_lambda_keeps_iterates_constant(self):
        inst = small_instance(seed=6)
        x0 = initialize(inst.truth, 0.4, seed=3)
        cfg = SolverConfig(max_iters=20, stop_rel_error=1e-14)
        trace = geometric(inst, x0, 0.0, 0.5, cfg)
        assert np.ptp(trace.objectives) == 0.0

    def test_step_sizes_and_path_length(self):
        inst = small_instance(seed=6)
        x0 = initialize(inst.truth, 0.4, seed=3)
        lam, q = 0.5, 0.9
        cfg = solvers.SolverConfig(max_iters=60, keep_iterates=True,
                                   stop_rel_error=1e-14)
        trace = geometric(inst, x0, lam, q, cfg)
        moves = [(b - a).norm() for a, b in zip(trace.iterates, trace.iterates[1:])]
        for k, mv in enumerate(moves):
            assert mv <= lam * q ** k + 1e-12
        assert sum(moves) <= lam / (1 - q) + 1e-9

    def test_reaches_target_on_bilinear(self):
        inst = problems.make_sensing_instance(ops.BILINEAR, 30, 30, 1, 8 * 30,
                                              p_fail=0.2, seed=11)
        x0 = initialize(inst.truth, 0.4, seed=5)
        trace = geometric(inst, x0, 1.0, 0.95, solvers.SolverConfig(max_iters=800))
        assert trace.status == solvers.CONVERGED
        assert trace.final_rel_error < 1e-5

    def test_parameter_validation(self):
        inst = small_instance()
        with pytest.raises(ValueError):
            geometric(inst, inst.truth, -1.0, 0.5, solvers.SolverConfig())
        with pytest.raises(ValueError):
            geometric(inst, inst.truth, 1.0, 1.0, solvers.SolverConfig())


class TestProxLinear:
    def test_huge_beta_freezes(self):
        inst = small_instance(seed=8)
        x0 = initialize(inst.truth, 0.3, seed=1)
        cfg = SolverConfig(max_iters=1, keep_iterates=True)
        trace = prox_linear(inst, x0, Quadratic(1e8), cfg)
        assert (trace.iterates[-1] - x0).norm() <= 1e-6

    def test_rapid_convergence_with_outliers(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_I, 20, 20, 2,
                                              8 * 2 * 20, p_fail=0.25, seed=21)
        _, kappa2 = estimate_rip(inst.ensemble, inst.r, "scaled-l1", 100, seed=1)
        x0 = initialize(inst.truth, 0.3, seed=2)
        trace = prox_linear(inst, x0, Quadratic(kappa2), SolverConfig(max_iters=10))
        assert trace.status == solvers.CONVERGED
        assert trace.final_k <= 10

    def test_descent_up_to_gap(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_II, 16, 16, 2,
                                              8 * 2 * 16, p_fail=0.2, seed=13)
        _, kappa2 = estimate_rip(inst.ensemble, inst.r, "scaled-l1", 100, seed=1)
        x0 = initialize(inst.truth, 0.3, seed=9)
        trace = prox_linear(inst, x0, Quadratic(kappa2), SolverConfig(max_iters=6))
        for fa, fb, gap in zip(trace.objectives, trace.objectives[1:],
                               trace.sub_gaps):
            assert fb <= fa + 2.0 * gap + 1e-9

    def test_matcomp_modified_penalty(self):
        inst = problems.make_completion_instance(30, 2, 0.5, seed=17)
        p, eps = 0.5, 0.01
        pen = QuadPlusLinear(np.sqrt(p * (1 + eps)), np.sqrt(p * eps))
        x0 = initialize(inst.truth, 0.2, seed=3)
        trace = prox_linear(inst, x0, pen, SolverConfig(max_iters=25))
        assert trace.status == solvers.CONVERGED
        assert trace.final_k <= 25


class TestGradientDescent:
    def test_fixed_at_truth(self):
        inst = small_instance(penalty=penalties.SQUARED_L2, seed=2)
        trace = gradient_descent(inst, inst.truth, ("constant", 1e-3),
                                 SolverConfig(max_iters=5))
        assert trace.status in (solvers.STALLED, solvers.CONVERGED)
        assert trace.final_k == 0
        assert trace.final_rel_error == pytest.approx(0.0, abs=1e-10)

    def test_polyak_step_converges(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_II, 20, 20, 2,
                                              8 * 2 * 20,
                                              penalty=penalties.SQUARED_L2,
                                              p_fail=0.0, seed=5)
        x0 = initialize(inst.truth, 0.2, seed=4)
        trace = gradient_descent(inst, x0, ("polyak",),
                                 SolverConfig(max_iters=3000))
        assert trace.final_rel_error < 1e-4

    def test_rejects_nonsmooth(self):
        inst = small_instance()
        with pytest.raises(ValueError):
            gradient_descent(inst, inst.truth, ("constant", 1e-3), SolverConfig())


class TestInitialize:
    def test_zero_delta_returns_truth(self):
        inst = small_instance()
        x0 = initialize(inst.truth, 0.0, seed=1)
        assert (x0 - inst.truth).norm() == 0.0

    def test_exact_perturbation_norm(self):
        for inst in (small_instance(), small_instance(ops.BILINEAR)):
            x0 = initialize(inst.truth, 0.3, seed=1)
            if isinstance(inst.truth, SymPoint):
                want = 0.3 * np.linalg.norm(inst.truth.x)
                assert (x0 - inst.truth).norm() == pytest.approx(want, rel=1e-12)
            else:
                wx = 0.3 * np.linalg.norm(inst.truth.x)
                wy = 0.3 * np.linalg.norm(inst.truth.y)
                assert np.linalg.norm(x0.x - inst.truth.x) == pytest.approx(wx, rel=1e-12)
                assert np.linalg.norm(x0.y - inst.truth.y) == pytest.approx(wy, rel=1e-12)

    def test_seed_reproducible(self):
        inst = small_instance()
        a = initialize(inst.truth, 0.5, seed=42)
        b = initialize(inst.truth, 0.5, seed=42)
        assert np.array_equal(a.x, b.x)

    def test_factor_sparse_starts_sparse_at_zero(self):
        inst = problems.make_rpca_euclidean_instance(12, 2, seed=3)
        x0 = initialize(inst.truth, 0.2, seed=1)
        assert not x0.s.any()
        assert (np.linalg.norm(x0.x - inst.truth.x)
                == pytest.approx(0.2 * np.linalg.norm(inst.truth.x), rel=1e-12))


class TestTraceContract:
    def test_converged_status_implies_tolerance(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_II, 20, 20, 1,
                                              8 * 20, p_fail=0.0, seed=30)
        x0 = initialize(inst.truth, 0.2, seed=6)
        cfg = SolverConfig(max_iters=1500, stop_rel_error=1e-6)
        trace = polyak(inst, x0, cfg)
        assert trace.status == solvers.CONVERGED
        assert trace.final_rel_error < cfg.stop_rel_error

    def test_iteration_counter_monotone(self):
        inst = small_instance(seed=12)
        x0 = initialize(inst.truth, 0.4, seed=2)
        trace = geometric(inst, x0, 0.5, 0.9, SolverConfig(max_iters=40))
        assert all(b > a for a, b in zip(trace.ks, trace.ks[1:]))
