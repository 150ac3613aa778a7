import numpy as np
import pytest

from lowrank import operators as ops

from conftest import all_kind_ensembles


class TestMakeEnsemble:
    def test_quadratic_payload_size(self):
        e = ops.make_ensemble(ops.QUADRATIC_I, 100, 100, 8 * 1 * 100, seed=7)
        assert e.data["p"].shape == (800, 100)
        assert e.m == 800

    def test_full_mask_covers_all_pairs(self):
        e = ops.make_ensemble(ops.MASK, 4, 4, 1.0, seed=11)
        assert e.m == 16
        pairs = set(zip(e.data["rows"].tolist(), e.data["cols"].tolist()))
        assert pairs == {(i, j) for i in range(4) for j in range(4)}

    def test_mask_is_symmetric_and_canonical(self):
        e = ops.make_ensemble(ops.MASK, 8, 8, 0.4, seed=5)
        pairs = list(zip(e.data["rows"].tolist(), e.data["cols"].tolist()))
        assert sorted(pairs) == pairs
        pair_set = set(pairs)
        assert all((j, i) in pair_set for i, j in pair_set)

    def test_determinism(self):
        a = ops.make_ensemble(ops.BILINEAR, 3, 2, 5, seed=1)
        b = ops.make_ensemble(ops.BILINEAR, 3, 2, 5, seed=1)
        assert np.array_equal(a.data["p"], b.data["p"])
        assert np.array_equal(a.data["q"], b.data["q"])
        c = ops.make_ensemble(ops.BILINEAR, 3, 2, 5, seed=2)
        assert not np.array_equal(a.data["p"], c.data["p"])

    def test_validation(self):
        with pytest.raises(ValueError):
            ops.make_ensemble(ops.QUADRATIC_I, 4, 5, 10, seed=0)
        with pytest.raises(ValueError):
            ops.make_ensemble(ops.MASK, 4, 5, 0.5, seed=0)
        with pytest.raises(ValueError):
            ops.make_ensemble(ops.GAUSSIAN, 0, 3, 5, seed=0)
        with pytest.raises(ValueError):
            ops.make_ensemble(ops.GAUSSIAN, 3, 3, 0, seed=0)
        with pytest.raises(ValueError):
            ops.make_ensemble(ops.MASK, 4, 4, 0.0, seed=0)
        with pytest.raises(ValueError):
            ops.make_ensemble("fourier", 4, 4, 5, seed=0)

    def test_explicit_requires_flag(self):
        with pytest.raises(ValueError):
            ops.explicit_ensemble(ops.QUADRATIC_I, p=np.eye(2))

    def test_payload_immutable(self):
        e = ops.make_ensemble(ops.QUADRATIC_I, 4, 4, 6, seed=0)
        with pytest.raises(ValueError):
            e.data["p"][0, 0] = 1.0


class TestApply:
    def test_quadratic_i_unit_vector(self):
        e = ops.explicit_ensemble(ops.QUADRATIC_I, p=np.array([[1.0, 0.0]]),
                                  testing=True)
        m = np.outer([1.0, 0.0], [1.0, 0.0])
        assert ops.apply(e, m) == pytest.approx([1.0])

    def test_gaussian_trace_inner_product(self):
        e = ops.explicit_ensemble(ops.GAUSSIAN, mats=np.eye(2)[None], testing=True)
        assert ops.apply(e, np.diag([2.0, 3.0])) == pytest.approx([5.0])

    def test_quadratic_ii_difference(self):
        e = ops.explicit_ensemble(ops.QUADRATIC_II,
                                  p=np.array([[1.0, 0.0]]),
                                  p_tilde=np.array([[0.0, 1.0]]), testing=True)
        assert ops.apply(e, np.diag([2.0, 3.0])) == pytest.approx([-1.0])

    def test_shape_mismatch(self):
        e = ops.make_ensemble(ops.BILINEAR, 3, 2, 4, seed=0)
        with pytest.raises(ValueError):
            ops.apply(e, np.zeros((2, 3)))


class TestAdjoint:
    def test_zero_vector(self):
        for e in all_kind_ensembles():
            assert not ops.adjoint(e, np.zeros(e.m)).any()

    def test_bilinear_rank_one_sum(self):
        # brute-force oracle: A*(v) = sum_i v_i p_i q_i^T
        e = ops.explicit_ensemble(ops.BILINEAR, p=np.array([[1.0, 0.0, 0.0]]),
                                  q=np.array([[0.0, 1.0]]), testing=True)
        expected = 3.0 * np.outer([1.0, 0.0, 0.0], [0.0, 1.0])
        assert ops.adjoint(e, np.array([3.0])) == pytest.approx(expected)

    def test_adjoint_identity_all_kinds(self, rng):
        for e in all_kind_ensembles():
            for _ in range(5):
                m = rng.standard_normal((e.d1, e.d2))
                v = rng.standard_normal(e.m)
                lhs = ops.apply(e, m) @ v
                rhs = np.sum(m * ops.adjoint(e, v))
                assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), abs(rhs), 1.0)

    def test_length_mismatch(self):
        e = ops.make_ensemble(ops.QUADRATIC_I, 4, 4, 6, seed=0)
        with pytest.raises(ValueError):
            ops.adjoint(e, np.zeros(5))


class TestFactoredPaths:
    def test_apply_factored_matches_apply(self, rng):
        for e in all_kind_ensembles():
            L = rng.standard_normal((e.d1, 3))
            R = rng.standard_normal((e.d2, 3))
            got = ops.apply_factored(e, L, R)
            want = ops.apply(e, L @ R.T)
            assert got == pytest.approx(want, rel=1e-12, abs=1e-12)

    def test_adjoint_products_match_dense(self, rng):
        for e in all_kind_ensembles():
            v = rng.standard_normal(e.m)
            R = rng.standard_normal((e.d2, 2))
            L = rng.standard_normal((e.d1, 2))
            dense = ops.adjoint(e, v)
            assert ops.adjoint_right(e, v, R) == pytest.approx(dense @ R, abs=1e-10)
            assert ops.adjoint_left(e, v, L) == pytest.approx(dense.T @ L, abs=1e-10)


class TestObserve:
    def _truth(self, rng, d=6, r=2):
        x = rng.standard_normal((d, r))
        return x @ x.T

    def test_clean_observation(self, rng):
        e = ops.make_ensemble(ops.QUADRATIC_I, 6, 6, 20, seed=1)
        obs = ops.observe(e, self._truth(rng), p_fail=0.0, seed=4)
        assert obs.outliers.size == 0
        assert np.array_equal(obs.b, obs.clean)
        assert not obs.noise.any()

    def test_outlier_count_rounding(self, rng):
        e = ops.make_ensemble(ops.QUADRATIC_I, 4, 4, 8, seed=1)
        obs = ops.observe(e, self._truth(rng, 4), p_fail=0.25, seed=4)
        assert obs.outliers.size == 2

    def test_outliers_additive_only_on_set(self, rng):
        e = ops.make_ensemble(ops.BILINEAR, 5, 4, 40, seed=2)
        m = rng.standard_normal((5, 4))
        obs = ops.observe(e, m, p_fail=0.3, outlier_model=ops.AdditiveGaussian(2.0),
                          seed=9)
        inliers = np.setdiff1d(np.arange(e.m), obs.outliers)
        assert np.array_equal(obs.b[inliers], obs.clean[inliers])
        assert not np.array_equal(obs.b[obs.outliers], obs.clean[obs.outliers])

    def test_replace_model(self, rng):
        e = ops.make_ensemble(ops.BILINEAR, 5, 4, 40, seed=2)
        m = rng.standard_normal((5, 4))
        obs = ops.observe(e, m, p_fail=0.3, outlier_model=ops.ReplaceGaussian(1.0),
                          seed=9)
        # replaced entries carry no trace of the clean value
        corr = np.corrcoef(obs.b[obs.outliers], obs.clean[obs.outliers])[0, 1]
        assert abs(corr) < 0.9

    def test_dense_noise_rescaled_exactly(self, rng):
        x = rng.standard_normal((6, 2))
        m_sharp = x @ x.T
        sigma_r = np.sqrt(np.linalg.svd(m_sharp, compute_uv=False)[1])
        e = ops.make_ensemble(ops.QUADRATIC_II, 6, 6, 30, seed=3)
        obs = ops.observe(e, m_sharp, dense_noise=ops.ScaledNoise(0.1), rank=2,
                          seed=5)
        assert np.linalg.norm(obs.noise) == pytest.approx(0.1 * sigma_r, abs=1e-12)

    def test_unit_sigma_r_scaling(self):
        # sigma_r(X#)=1 gives ||e||_2 = delta exactly
        x = np.eye(4)[:, :2]
        e = ops.make_ensemble(ops.QUADRATIC_I, 4, 4, 10, seed=3)
        obs = ops.observe(e, x @ x.T, dense_noise=ops.ScaledNoise(0.1), rank=2, seed=5)
        assert np.linalg.norm(obs.noise) == pytest.approx(0.1, abs=1e-12)

    def test_determinism(self, rng):
        m = self._truth(rng)
        e = ops.make_ensemble(ops.QUADRATIC_I, 6, 6, 20, seed=1)
        a = ops.observe(e, m, p_fail=0.25, dense_noise=ops.ScaledNoise(0.05),
                        rank=2, seed=7)
        b = ops.observe(e, m, p_fail=0.25, dense_noise=ops.ScaledNoise(0.05),
                        rank=2, seed=7)
        assert np.array_equal(a.b, b.b)
        assert np.array_equal(a.outliers, b.outliers)

    def test_pfail_range(self, rng):
        e = ops.make_ensemble(ops.QUADRATIC_I, 4, 4, 8, seed=1)
        with pytest.raises(ValueError):
            ops.observe(e, self._truth(rng, 4), p_fail=0.5)
