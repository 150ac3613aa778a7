"""Instance generators for the recovery problems the experiments run on."""

from __future__ import annotations

import numpy as np

from . import operators as ops, penalties
from ._rng import child_seed, rng_from
from .composite import ProblemInstance
from .points import AsymPoint, FactorSparsePoint, SymPoint
from .proxsub import RowBall, RpcaEuclidean, Unconstrained

SYM_KINDS = (ops.QUADRATIC_I, ops.QUADRATIC_II)


def make_sensing_instance(kind, d1, d2, r, m, *, penalty=penalties.SCALED_L1,
                          p_fail=0.0, outlier_model=None, dense_noise=None,
                          seed=0) -> ProblemInstance:
    """Quadratic/bilinear/Gaussian sensing with a Gaussian ground truth.

    Quadratic kinds use the symmetric factorization X# X#^T with Gaussian X#;
    bilinear and Gaussian sensing use a balanced asymmetric pair from the SVD
    of a Gaussian product.
    """
    rng = rng_from(seed, "truth", kind)
    if kind in SYM_KINDS:
        x_sharp = rng.standard_normal((d1, r))
        truth = SymPoint(x_sharp)
        m_sharp = x_sharp @ x_sharp.T
    else:
        g1 = rng.standard_normal((d1, r))
        g2 = rng.standard_normal((r, d2))
        u, s, vt = np.linalg.svd(g1 @ g2, full_matrices=False)
        root = np.sqrt(s[:r])
        truth = AsymPoint(u[:, :r] * root, root[:, None] * vt[:r])
        m_sharp = truth.x @ truth.y
    if outlier_model is None:
        outlier_model = ops.AdditiveGaussian(1.0)
    ensemble = ops.make_ensemble(kind, d1, d2, m, child_seed(seed, "ensemble"))
    obs = ops.observe(ensemble, m_sharp, p_fail=p_fail,
                      outlier_model=outlier_model, dense_noise=dense_noise,
                      rank=r, seed=child_seed(seed, "observe"))
    # In dense-noise mode the Polyak step needs the optimum of the problem
    # *before* the dense perturbation, which at the truth is h(Delta); it is
    # zero in every noiseless or outlier-only setting.
    min_f = 0.0
    if obs.noise.any():
        min_f = penalties.value(penalty, (obs.b - obs.noise) - obs.clean)
    return ProblemInstance(ensemble=ensemble, observation=obs, penalty=penalty,
                           r=r, constraint=Unconstrained(), truth=truth,
                           m_sharp=m_sharp, min_f=min_f,
                           meta={"kind": kind, "seed": seed})


def make_completion_instance(d, r, p, *, nu=3.0, penalty=penalties.FROBENIUS,
                             dense_noise=None, seed=0) -> ProblemInstance:
    """Matrix completion of an incoherent PSD truth with equal singular values.

    The factor is a Haar-random orthonormal d x r frame (all nonzero singular
    values of M# equal one); the incoherence constraint radius sqrt(nu r / d)
    is widened if the realized truth needs it.
    """
    rng = rng_from(seed, "truth", "completion")
    q, rr = np.linalg.qr(rng.standard_normal((d, r)))
    x_sharp = q * np.sign(np.diag(rr))
    m_sharp = x_sharp @ x_sharp.T
    max_row = np.linalg.norm(x_sharp, axis=1).max()
    radius = max(np.sqrt(nu * r / d), 1.02 * max_row)
    ensemble = ops.make_ensemble(ops.MASK, d, d, p, child_seed(seed, "ensemble"))
    obs = ops.observe(ensemble, m_sharp, p_fail=0.0, dense_noise=dense_noise,
                      rank=r, seed=child_seed(seed, "observe"))
    return ProblemInstance(ensemble=ensemble, observation=obs, penalty=penalty,
                           r=r, constraint=RowBall(radius), truth=SymPoint(x_sharp),
                           m_sharp=m_sharp, min_f=0.0,
                           meta={"kind": "matrix-completion", "p": p, "nu": nu,
                                 "seed": seed})


def _full_mask(d, seed):
    return ops.make_ensemble(ops.MASK, d, d, 1.0, seed)


def make_rpca_l1_instance(d, r, tau, *, radius_factor=2.0, sigma=1.0,
                          seed=0) -> ProblemInstance:
    """Non-Euclidean robust PCA: min ||XX^T - W||_1 over a row-norm ball.

    W = X# X#^T + S# where S# has i.i.d. Bernoulli(tau) support filled from a
    fixed symmetric Gaussian matrix.
    """
    if not 0.0 <= tau < 0.5:
        raise ValueError("tau must lie in [0, 1/2)")
    rng = rng_from(seed, "truth", "rpca-l1")
    x_sharp = rng.standard_normal((d, r))
    m_sharp = x_sharp @ x_sharp.T
    g = rng.standard_normal((d, d))
    s_hat = sigma * np.triu(g) + sigma * np.triu(g, 1).T
    support = rng.random((d, d)) < tau
    s_sharp = np.where(support, s_hat, 0.0)
    w = m_sharp + s_sharp

    ensemble = _full_mask(d, child_seed(seed, "ensemble"))
    b = ops.apply(ensemble, w)
    clean = ops.apply(ensemble, m_sharp)
    corrupted = np.flatnonzero(ops.apply(ensemble, s_sharp)).astype(np.int64)
    obs = ops.Observation(b=b, outliers=corrupted, noise=np.zeros(ensemble.m),
                          p_fail=corrupted.size / ensemble.m, clean=clean)
    radius = radius_factor * np.linalg.norm(x_sharp, axis=1).max()
    return ProblemInstance(ensemble=ensemble, observation=obs,
                           penalty=penalties.ENTRYWISE_L1, r=r,
                           constraint=RowBall(radius), truth=SymPoint(x_sharp),
                           m_sharp=m_sharp, min_f=0.0,
                           meta={"kind": "rpca-l1", "tau": tau, "seed": seed,
                                 "s_sharp_l1": float(np.abs(s_sharp).sum())})


def make_rpca_euclidean_instance(d, r, *, nu=3.0, sparsity=8, sigma=1.0,
                                 seed=0) -> ProblemInstance:
    """Euclidean robust PCA over (X, S): min ||XX^T + S - W||_F.

    The truth factor is an orthonormal frame (operator norm one) inside the
    incoherence row ball; S# is symmetric with about ``sparsity`` nonzeros
    per row/column, and the S constraint uses its column l1 norms as budgets.
    """
    rng = rng_from(seed, "truth", "rpca-euclid")
    q, rr = np.linalg.qr(rng.standard_normal((d, r)))
    x_sharp = q * np.sign(np.diag(rr))
    max_row = np.linalg.norm(x_sharp, axis=1).max()
    nu_eff = max(nu, 1.05 * d * max_row ** 2 / r)
    row_radius = np.sqrt(nu_eff * r / d)
    m_sharp = x_sharp @ x_sharp.T

    prob = min(sparsity / (2.0 * d), 0.5)
    g = rng.standard_normal((d, d))
    s_hat = sigma * np.triu(g) + sigma * np.triu(g, 1).T
    upper = rng.random((d, d)) < prob
    support = np.triu(upper) | np.triu(upper, 1).T
    s_sharp = np.where(support, s_hat, 0.0)
    w = m_sharp + s_sharp

    ensemble = _full_mask(d, child_seed(seed, "ensemble"))
    b = ops.apply(ensemble, w)
    clean = ops.apply(ensemble, m_sharp)
    corrupted = np.flatnonzero(ops.apply(ensemble, s_sharp)).astype(np.int64)
    obs = ops.Observation(b=b, outliers=corrupted, noise=np.zeros(ensemble.m),
                          p_fail=corrupted.size / ensemble.m, clean=clean)
    budgets = np.abs(s_sharp).sum(axis=0)
    constraint = RpcaEuclidean(row_radius=row_radius, col_budgets=budgets)
    truth = FactorSparsePoint(x_sharp, s_sharp)
    return ProblemInstance(ensemble=ensemble, observation=obs,
                           penalty=penalties.FROBENIUS, r=r,
                           constraint=constraint, truth=truth, m_sharp=m_sharp,
                           min_f=0.0,
                           meta={"kind": "rpca-euclidean", "nu": nu_eff,
                                 "sparsity": sparsity, "seed": seed})
