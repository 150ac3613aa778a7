"""Built-in sanity suite: fast worked examples with known answers.

Runs the hand-checkable identities from every module so a fresh checkout (or
install) can be validated without the test suite.  Exit status is the number
of failing checks.
"""

from __future__ import annotations

import numpy as np

from .. import composite, operators as ops, penalties, proxsub, regularity, solvers
from ..points import FactorSparsePoint, SymPoint
from ..proxsub import Quadratic, RowBall, Unconstrained


def _check_adjoint_identity():
    rng = np.random.default_rng(1)
    ensembles = [
        ops.make_ensemble(ops.GAUSSIAN, 5, 4, 12, 3),
        ops.make_ensemble(ops.QUADRATIC_I, 6, 6, 15, 3),
        ops.make_ensemble(ops.QUADRATIC_II, 6, 6, 15, 3),
        ops.make_ensemble(ops.BILINEAR, 5, 4, 12, 3),
        ops.make_ensemble(ops.MASK, 6, 6, 0.6, 3),
    ]
    for e in ensembles:
        m = rng.standard_normal((e.d1, e.d2))
        v = rng.standard_normal(e.m)
        lhs = ops.apply(e, m) @ v
        rhs = np.sum(m * ops.adjoint(e, v))
        assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0), e.kind


def _check_apply_examples():
    e = ops.explicit_ensemble(ops.QUADRATIC_I, p=np.array([[1.0, 0.0]]),
                              testing=True)
    assert np.allclose(ops.apply(e, np.outer([1, 0], [1, 0])), [1.0])
    e = ops.explicit_ensemble(ops.GAUSSIAN, mats=np.eye(2)[None], testing=True)
    assert np.allclose(ops.apply(e, np.diag([2.0, 3.0])), [5.0])
    e = ops.explicit_ensemble(ops.QUADRATIC_II, p=np.array([[1.0, 0.0]]),
                              p_tilde=np.array([[0.0, 1.0]]), testing=True)
    assert np.allclose(ops.apply(e, np.diag([2.0, 3.0])), [-1.0])


def _check_observation():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((4, 2))
    e = ops.make_ensemble(ops.QUADRATIC_I, 4, 4, 8, 1)
    obs = ops.observe(e, x @ x.T, p_fail=0.25, seed=4)
    assert obs.outliers.size == 2
    obs2 = ops.observe(e, x @ x.T, p_fail=0.25, seed=4)
    assert np.array_equal(obs.b, obs2.b)
    x_unit = np.eye(4)[:, :2]
    obs3 = ops.observe(e, x_unit @ x_unit.T, dense_noise=ops.ScaledNoise(0.1),
                       rank=2, seed=5)
    assert abs(np.linalg.norm(obs3.noise) - 0.1) < 1e-12


def _check_penalties():
    assert penalties.value(penalties.SCALED_L1, np.array([1.0, -2.0, 3.0])) == 2.0
    got = penalties.value(penalties.SCALED_L2, np.array([3.0, 4.0]))
    assert abs(got - 5.0 / np.sqrt(2.0)) < 1e-15
    assert penalties.subgradient(penalties.SCALED_L1, np.array([0.0, 2.0]))[0] == 0


def _check_model_expansion():
    from ..composite import ProblemInstance
    e = ops.explicit_ensemble(ops.QUADRATIC_I, p=np.array([[1.0]]), testing=True)
    zero = np.zeros(1)
    obs = ops.Observation(b=zero.copy(), outliers=np.empty(0, dtype=np.int64),
                          noise=zero.copy(), clean=zero.copy(), p_fail=0.0)
    inst = ProblemInstance(ensemble=e, observation=obs,
                           penalty=penalties.SCALED_L1, r=1,
                           constraint=Unconstrained(),
                           truth=SymPoint(np.zeros((1, 1))),
                           m_sharp=np.zeros((1, 1)))
    assert composite.objective(inst, SymPoint([[2.0]])) == 4.0
    assert composite.model_value(inst, SymPoint([[1.0]]), SymPoint([[2.0]])) == 3.0
    g = composite.subgradient(inst, SymPoint([[2.0]]))
    assert abs(g.x[0, 0] - 4.0) < 1e-14
    return inst


def _check_subproblem():
    inst = _check_model_expansion()
    res = proxsub.solve_subproblem(inst, SymPoint([[1.0]]), Quadratic(1.0),
                                   Unconstrained(), tol=1e-11, max_iter=2000)
    assert abs(res.point.x[0, 0] - 0.5) < 1e-6


def _check_projection():
    got = proxsub.project(RowBall(1.0), SymPoint(np.array([[3.0, 4.0]])))
    assert np.allclose(got.x, [[0.6, 0.8]])
    col = proxsub._project_columns_l1(np.array([[3.0], [-1.0]]), np.array([2.0]))
    assert np.allclose(col[:, 0], [2.0, 0.0])


def _check_polyak_step():
    e = ops.make_ensemble(ops.MASK, 1, 1, 1.0, 0)
    zero = np.zeros(1)
    obs = ops.Observation(b=zero.copy(), outliers=np.empty(0, dtype=np.int64),
                          noise=zero.copy(), clean=zero.copy(), p_fail=0.0)
    inst = composite.ProblemInstance(
        ensemble=e, observation=obs, penalty=penalties.SCALED_L1, r=1,
        constraint=Unconstrained(),
        truth=FactorSparsePoint(np.zeros((1, 1)), np.zeros((1, 1))),
        m_sharp=np.zeros((1, 1)))
    x0 = FactorSparsePoint(np.zeros((1, 1)), np.array([[1.0]]))
    f0 = composite.objective(inst, x0)
    zeta = composite.subgradient(inst, x0)
    x1 = x0 - (f0 / zeta.dot(zeta)) * zeta
    assert composite.objective(inst, x1) == 0.0


def _check_initialize():
    truth = SymPoint(np.random.default_rng(3).standard_normal((6, 2)))
    x0 = solvers.initialize(truth, 0.3, seed=1)
    want = 0.3 * np.linalg.norm(truth.x)
    assert abs((x0 - truth).norm() - want) < 1e-12 * want
    again = solvers.initialize(truth, 0.3, seed=1)
    assert np.array_equal(x0.x, again.x)


def _check_procrustes():
    e1 = np.array([[1.0], [0.0]])
    e2 = np.array([[0.0], [1.0]])
    assert abs(regularity.dist_procrustes(e2, e1) - np.sqrt(2.0)) < 1e-12


def _check_rank1_sharpness():
    rng = np.random.default_rng(4)
    for d in (2, 5):
        min_ratio, bound = regularity.rank1_l1_sharpness_check(
            rng.standard_normal(d), 500, seed=d)
        assert min_ratio >= bound - 1e-9


def _check_ensemble_determinism():
    a = ops.make_ensemble(ops.BILINEAR, 3, 2, 5, 1)
    b = ops.make_ensemble(ops.BILINEAR, 3, 2, 5, 1)
    assert np.array_equal(a.data["p"], b.data["p"])
    assert np.array_equal(a.data["q"], b.data["q"])


CHECKS = [
    ("adjoint-identity", _check_adjoint_identity),
    ("apply-examples", _check_apply_examples),
    ("observation", _check_observation),
    ("penalties", _check_penalties),
    ("model-expansion", _check_model_expansion),
    ("subproblem-1d", _check_subproblem),
    ("projection", _check_projection),
    ("polyak-step", _check_polyak_step),
    ("initialize", _check_initialize),
    ("procrustes", _check_procrustes),
    ("rank1-sharpness", _check_rank1_sharpness),
    ("determinism", _check_ensemble_determinism),
]


def run_selftest(out=print) -> int:
    """Run every check; returns the number of failures."""
    failures = 0
    for name, fn in CHECKS:
        try:
            fn()
        except Exception as exc:  # report and keep going
            failures += 1
            out(f"FAIL {name}: {exc!r}")
        else:
            out(f"ok   {name}")
    return failures
