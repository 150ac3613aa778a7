import numpy as np
import pytest

from lowrank import operators as ops, penalties, problems, regularity
from lowrank.composite import ProblemInstance
from lowrank.points import SymPoint
from lowrank.proxsub import Unconstrained
from lowrank.regularity import (dist_procrustes, estimate_approx_modulus,
                                estimate_lipschitz, estimate_outlier_margin,
                                estimate_rip, estimate_sharpness,
                                rank1_l1_sharpness_check,
                                rank_r_l1_sharpness_probe,
                                rpca_cross_term_check)

SQRT_2_OVER_PI = np.sqrt(2.0 / np.pi)


def identity_mask_instance(d=8, r=2, scale=1.0, seed=5):
    """f(X) = ||XX^T - M#||_F via a full mask with the Frobenius penalty."""
    rng = np.random.default_rng(seed)
    x_sharp = scale * rng.standard_normal((d, r))
    m_sharp = x_sharp @ x_sharp.T
    e = ops.make_ensemble(ops.MASK, d, d, 1.0, seed=seed)
    clean = ops.apply(e, m_sharp)
    obs = ops.Observation(b=clean.copy(), outliers=np.empty(0, dtype=np.int64),
                          noise=np.zeros(e.m), clean=clean, p_fail=0.0)
    return ProblemInstance(ensemble=e, observation=obs,
                           penalty=penalties.FROBENIUS, r=r,
                           constraint=Unconstrained(), truth=SymPoint(x_sharp),
                           m_sharp=m_sharp)


class TestProcrustes:
    def test_zero_on_orbit(self, rng):
        x_sharp = rng.standard_normal((6, 3))
        q, rr = np.linalg.qr(rng.standard_normal((3, 3)))
        assert dist_procrustes(x_sharp @ q, x_sharp) <= 1e-10

    def test_zero_point(self, rng):
        x_sharp = rng.standard_normal((6, 3))
        assert dist_procrustes(np.zeros((6, 3)), x_sharp) == pytest.approx(
            np.linalg.norm(x_sharp))

    def test_rank_one_brute_force(self):
        # orbit of e1 under O(1) is {+-e1}; nearest to e2 is at distance sqrt(2)
        e1 = np.array([[1.0], [0.0]])
        e2 = np.array([[0.0], [1.0]])
        brute = min(np.linalg.norm(e2 - e1 * s) for s in (1.0, -1.0))
        assert brute == pytest.approx(np.sqrt(2.0))
        assert dist_procrustes(e2, e1) == pytest.approx(np.sqrt(2.0))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            dist_procrustes(np.zeros((3, 1)), np.zeros((4, 1)))


class TestEstimateRip:
    def test_gaussian_scaled_l1_folded_normal(self):
        # oracle: <P, W> ~ N(0, ||W||_F^2), so E|.| = sqrt(2/pi)
        e = ops.make_ensemble(ops.GAUSSIAN, 30, 30, 20 * 2 * 30, seed=1)
        k1, k2 = estimate_rip(e, 2, "scaled-l1", 80, seed=2)
        assert k1 <= SQRT_2_OVER_PI <= k2
        assert abs(k1 - SQRT_2_OVER_PI) <= 0.05
        assert abs(k2 - SQRT_2_OVER_PI) <= 0.05

    def test_gaussian_scaled_l2_near_isometry(self):
        e = ops.make_ensemble(ops.GAUSSIAN, 30, 30, 20 * 2 * 30, seed=1)
        k1, k2 = estimate_rip(e, 2, "scaled-l2", 80, seed=2)
        assert 0.8 <= k1 <= k2 <= 1.2

    def test_quadratic_scaling_signature(self):
        # quadratic-I upper constant grows ~ sqrt(r); quadratic-II stays flat
        d = 40
        k2 = {}
        for kind in (ops.QUADRATIC_I, ops.QUADRATIC_II):
            for r in (1, 4):
                e = ops.make_ensemble(kind, d, d, 8 * r * d, seed=3)
                k1, khi = estimate_rip(e, r, "scaled-l1", 400, seed=4)
                assert k1 > 0
                k2[kind, r] = khi
        assert k2[ops.QUADRATIC_I, 4] / k2[ops.QUADRATIC_I, 1] >= 1.3
        assert abs(k2[ops.QUADRATIC_II, 4] / k2[ops.QUADRATIC_II, 1] - 1.0) <= 0.25

    def test_invariants_all_kinds(self):
        for e in [ops.make_ensemble(ops.QUADRATIC_I, 20, 20, 300, 5),
                  ops.make_ensemble(ops.QUADRATIC_II, 20, 20, 300, 5),
                  ops.make_ensemble(ops.BILINEAR, 20, 15, 300, 5),
                  ops.make_ensemble(ops.GAUSSIAN, 12, 10, 300, 5)]:
            k1, k2 = estimate_rip(e, 2, "scaled-l1", 60, seed=6)
            assert 0 < k1 <= k2

    def test_rank_too_large(self):
        e = ops.make_ensemble(ops.QUADRATIC_I, 6, 6, 20, seed=1)
        with pytest.raises(ValueError):
            estimate_rip(e, 4, "scaled-l1", 10, seed=0)


class TestOutlierMargin:
    def test_empty_set_equals_kappa1(self):
        e = ops.make_ensemble(ops.QUADRATIC_II, 20, 20, 400, seed=9)
        k1, _ = estimate_rip(e, 2, "scaled-l1", 50, seed=11)
        margin = estimate_outlier_margin(e, np.empty(0, dtype=int), 2, 50, seed=11)
        assert margin == pytest.approx(k1, rel=1e-12)

    def test_monotone_in_nested_outlier_sets(self):
        e = ops.make_ensemble(ops.GAUSSIAN, 15, 15, 600, seed=9)
        perm = np.random.default_rng(0).permutation(e.m)
        margins = []
        for p_fail in (0.1, 0.25, 0.45):
            outliers = perm[:int(round(p_fail * e.m))]
            margins.append(estimate_outlier_margin(e, outliers, 2, 40, seed=13))
        assert margins[0] > margins[1] > margins[2]
        assert margins[2] > 0  # small but positive near the breakdown point

    def test_margin_below_kappa1(self):
        e = ops.make_ensemble(ops.BILINEAR, 15, 15, 500, seed=2)
        k1, _ = estimate_rip(e, 2, "scaled-l1", 40, seed=3)
        outliers = np.arange(0, e.m, 7)
        margin = estimate_outlier_margin(e, outliers, 2, 40, seed=3)
        assert margin <= k1

    def test_rejects_majority_outliers(self):
        e = ops.make_ensemble(ops.GAUSSIAN, 6, 6, 20, seed=2)
        with pytest.raises(ValueError):
            estimate_outlier_margin(e, np.arange(10), 1, 10, seed=0)


class TestApproxModulus:
    def test_bounded_by_kappa2(self):
        inst = problems.make_sensing_instance(ops.GAUSSIAN, 10, 10, 2, 600,
                                              penalty=penalties.SCALED_L1, seed=7)
        _, k2 = estimate_rip(inst.ensemble, 2, "scaled-l1", 400, seed=8)
        rho = estimate_approx_modulus(inst, 60, radius=0.8, seed=9)
        assert rho <= k2 + 1e-9

    def test_scalar_identity_ratio_one(self):
        # d=r=1 identity measurement, b=0: |f - f_x|/(z-x)^2 = 1 off the kink
        from test_composite import scalar_instance
        inst = scalar_instance(b=0.0)
        rho = estimate_approx_modulus(inst, 200, radius=0.5, seed=3)
        assert rho == pytest.approx(1.0, abs=1e-6)

    def test_matcomp_returns_two_term_fit(self):
        inst = problems.make_completion_instance(24, 2, 0.5, seed=5)
        a_hat, b_hat = estimate_approx_modulus(inst, 80, radius=0.4, seed=6)
        assert np.isfinite(a_hat) and np.isfinite(b_hat)
        assert a_hat > 0


class TestSharpness:
    def test_frobenius_identity_lower_bound(self):
        inst = identity_mask_instance(d=8, r=2, seed=5)
        sigma_r = np.linalg.svd(inst.truth.x, compute_uv=False)[-1]
        mu = estimate_sharpness(inst, 300, radius=0.5 * sigma_r, seed=7)
        assert mu >= np.sqrt(2.0 * (np.sqrt(2.0) - 1.0)) * sigma_r - 0.05

    def test_homogeneity_under_scaling(self):
        base = identity_mask_instance(d=8, r=2, scale=1.0, seed=5)
        scaled = identity_mask_instance(d=8, r=2, scale=2.0, seed=5)
        mu1 = estimate_sharpness(base, 100, radius=0.5, seed=7)
        mu2 = estimate_sharpness(scaled, 100, radius=1.0, seed=7)
        assert mu2 == pytest.approx(2.0 * mu1, rel=1e-9)

    def test_positive_with_outliers(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_II, 20, 20, 2,
                                              8 * 2 * 20, p_fail=0.25, seed=8)
        mu = estimate_sharpness(inst, 100, radius=1.0, seed=9)
        assert mu > 0


class TestLipschitz:
    def test_operator_norm_bound(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_II, 15, 15, 2,
                                              8 * 2 * 15, seed=3)
        _, k2 = estimate_rip(inst.ensemble, 2, "scaled-l1", 300, seed=4)
        radius = 0.5
        L = estimate_lipschitz(inst, 200, radius=radius, seed=5)
        sigma_1 = np.linalg.svd(inst.truth.x, compute_uv=False)[0]
        assert L <= 2.0 * k2 * (radius + sigma_1) + 0.1

    def test_penalty_scaling_scales_L(self):
        inst = problems.make_sensing_instance(ops.QUADRATIC_I, 10, 10, 2, 120,
                                              penalty=penalties.SCALED_L1, seed=6)
        from dataclasses import replace
        inst_scaled = replace(inst, penalty=penalties.ENTRYWISE_L1)
        L1 = estimate_lipschitz(inst, 50, radius=0.5, seed=7)
        L2 = estimate_lipschitz(inst_scaled, 50, radius=0.5, seed=7)
        # entrywise l1 = m * scaled l1, so subgradients scale by exactly m
        assert L2 == pytest.approx(inst.ensemble.m * L1, rel=1e-12)


class TestRankOneSharpness:
    def test_one_dimensional_factorization(self):
        min_ratio, bound = rank1_l1_sharpness_check(np.array([1.0]), 2000, seed=1)
        assert min_ratio >= bound - 1e-9
        # near x = 1 the ratio is |x + 1| ~ 2, well above sqrt(2) - 1
        assert min_ratio >= 1.0

    @pytest.mark.parametrize("d", [2, 5, 20])
    def test_random_directions_hold_bound(self, d):
        rng = np.random.default_rng(d)
        for trial in range(6):
            x_bar = rng.standard_normal(d)
            min_ratio, bound = rank1_l1_sharpness_check(x_bar, 2000,
                                                        seed=100 * d + trial)
            assert min_ratio >= bound - 1e-9

    def test_rank_r_probe_reports_positive_ratios(self):
        rng = np.random.default_rng(3)
        x_bar = rng.standard_normal((12, 2))
        min_ratio, ratios = rank_r_l1_sharpness_probe(x_bar, 200, seed=4)
        assert min_ratio > 0
        assert ratios.size > 0


class TestRpcaCrossTerm:
    def test_bound_holds_on_feasible_samples(self):
        inst = problems.make_rpca_euclidean_instance(30, 2, nu=3.0, sparsity=6,
                                                     seed=11)
        worst = rpca_cross_term_check(inst.truth.x, inst.truth.s,
                                      inst.meta["nu"], 500, seed=12)
        assert worst <= 1.0


class TestOrbitDistance:
    def test_asym_coupled_procrustes(self, rng):
        from lowrank import problems
        from lowrank.points import AsymPoint
        from lowrank.regularity import dist_orbit
        inst = problems.make_sensing_instance("bilinear", 8, 6, 2, 50, seed=21)
        truth = inst.truth
        # points on the O(r) suborbit are at distance ~0
        q, rr = np.linalg.qr(rng.standard_normal((2, 2)))
        q = q * np.sign(np.diag(rr))
        on_orbit = AsymPoint(truth.x @ q, q.T @ truth.y)
        assert dist_orbit(inst, on_orbit) <= 1e-10
        # and a perturbation is measured no larger than its blockwise norm
        off = AsymPoint(truth.x + 0.1, truth.y - 0.05)
        d = dist_orbit(inst, off)
        assert 0 < d <= (off - truth).norm() + 1e-12
