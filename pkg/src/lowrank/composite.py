"""Composite objectives f = h(F(x)), their convex models, and chain-rule subgradients.

The smooth map F is the measurement residual: A(XX^T) - b in the symmetric
setting, A(XY) - b in the asymmetric one, and the entrywise stack of
XX^T + S - W for the factor-plus-sparse decomposition.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import operators as ops
from . import penalties
from .points import AsymPoint, FactorSparsePoint, Point, SymPoint

SYM = "sym"
ASYM = "asym"
FACTOR_SPARSE = "factor-sparse"


@dataclass(frozen=True)
class ProblemInstance:
    """One recovery problem: ensemble + observation + penalty + ground truth.

    ``truth`` is the Point whose candidate matrix reproduces the clean
    measurements; ``min_f`` is the known optimal value of the clean problem
    (zero in every noiseless or outlier-only setting).
    """
    ensemble: ops.MeasurementEnsemble
    observation: ops.Observation
    penalty: str
    r: int
    constraint: Any
    truth: Point
    m_sharp: np.ndarray
    min_f: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> str:
        if isinstance(self.truth, SymPoint):
            return SYM
        if isinstance(self.truth, AsymPoint):
            return ASYM
        return FACTOR_SPARSE

    def _check(self, pt: Point):
        if not isinstance(pt, type(self.truth)):
            raise ValueError(f"point {pt!r} does not match instance shape {self.shape}")
        for a, b in zip(pt._blocks(), self.truth._blocks()):
            if a.shape != b.shape:
                raise ValueError(f"block shape {a.shape} != expected {b.shape}")


def residual(inst: ProblemInstance, pt: Point) -> np.ndarray:
    """F(pt): the measurement residual as an m-vector."""
    inst._check(pt)
    E, b = inst.ensemble, inst.observation.b
    if isinstance(pt, SymPoint):
        return ops.apply_factored(E, pt.x, pt.x) - b
    if isinstance(pt, AsymPoint):
        return ops.apply_factored(E, pt.x, pt.y.T) - b
    return ops.apply_factored(E, pt.x, pt.x) + ops.apply(E, pt.s) - b


def objective(inst: ProblemInstance, pt: Point) -> float:
    return penalties.value(inst.penalty, residual(inst, pt))


class Linearization:
    """The model residual c + J(step) frozen at a basepoint.

    ``apply_step`` maps a step Point to measurement space, ``adjoint_step``
    is its adjoint; together they realize the convex model
    f_x(y) = h(F(x) + dF(x)(y - x)) and the chain rule dF(x)* s.  Products
    against the frozen base (P X and friends) are cached at construction,
    which matters inside the subproblem solver's inner iterations.
    """

    def __init__(self, inst: ProblemInstance, base: Point, c):
        self.inst = inst
        self.base = base
        self.c = c
        self._fast = _fast_paths(inst.ensemble, base)

    def apply_step(self, step: Point) -> np.ndarray:
        if self._fast is not None:
            return self._fast[0](step)
        E, x = self.inst.ensemble, self.base
        if isinstance(x, SymPoint):
            return (ops.apply_factored(E, x.x, step.x)
                    + ops.apply_factored(E, step.x, x.x))
        if isinstance(x, AsymPoint):
            return (ops.apply_factored(E, step.x, x.y.T)
                    + ops.apply_factored(E, x.x, step.y.T))
        return (ops.apply_factored(E, x.x, step.x)
                + ops.apply_factored(E, step.x, x.x)
                + ops.apply(E, step.s))

    def adjoint_step(self, v: np.ndarray) -> Point:
        if self._fast is not None:
            return self._fast[1](v)
        E, x = self.inst.ensemble, self.base
        if isinstance(x, SymPoint):
            return SymPoint(ops.adjoint_right(E, v, x.x) + ops.adjoint_left(E, v, x.x))
        if isinstance(x, AsymPoint):
            return AsymPoint(ops.adjoint_right(E, v, x.y.T),
                             ops.adjoint_left(E, v, x.x).T)
        gx = ops.adjoint_right(E, v, x.x) + ops.adjoint_left(E, v, x.x)
        return FactorSparsePoint(gx, ops.adjoint(E, v))


def _rowdot(a, b):
    return np.einsum("ij,ij->i", a, b)


def _fast_paths(E, base):
    """Cached apply/adjoint closures for the common kind/shape pairs."""
    kind = E.kind
    if isinstance(base, SymPoint) and kind in (ops.QUADRATIC_I, ops.QUADRATIC_II):
        P = E.data["p"]
        px = P @ base.x
        if kind == ops.QUADRATIC_I:
            def fwd(step):
                return 2.0 * _rowdot(px, P @ step.x)

            def adj(v):
                return SymPoint(2.0 * (P.T @ (v[:, None] * px)))
        else:
            Pt = E.data["p_tilde"]
            ptx = Pt @ base.x

            def fwd(step):
                return (2.0 * _rowdot(px, P @ step.x)
                        - 2.0 * _rowdot(ptx, Pt @ step.x))

            def adj(v):
                return SymPoint(2.0 * (P.T @ (v[:, None] * px))
                                - 2.0 * (Pt.T @ (v[:, None] * ptx)))
        return fwd, adj
    if isinstance(base, AsymPoint) and kind == ops.BILINEAR:
        P, Q = E.data["p"], E.data["q"]
        px = P @ base.x
        qyt = Q @ base.y.T

        def fwd(step):
            return _rowdot(P @ step.x, qyt) + _rowdot(px, Q @ step.y.T)

        def adj(v):
            return AsymPoint(P.T @ (v[:, None] * qyt),
                             (Q.T @ (v[:, None] * px)).T)
        return fwd, adj
    if kind == ops.MASK and isinstance(base, (SymPoint, FactorSparsePoint)):
        rows, cols = E.data["rows"], E.data["cols"]
        xr = base.x[rows]
        xc = base.x[cols]
        d = E.d1

        def scatter(v):
            g = np.zeros((d, d))
            g[rows, cols] = v
            return g

        if isinstance(base, SymPoint):
            def fwd(step):
                return _rowdot(xr, step.x[cols]) + _rowdot(step.x[rows], xc)

            def adj(v):
                g = scatter(v)
                return SymPoint(g @ base.x + g.T @ base.x)
        else:
            def fwd(step):
                return (_rowdot(xr, step.x[cols]) + _rowdot(step.x[rows], xc)
                        + step.s[rows, cols])

            def adj(v):
                g = scatter(v)
                return FactorSparsePoint(g @ base.x + g.T @ base.x, g)
        return fwd, adj
    return None


def linearize(inst: ProblemInstance, base: Point) -> Linearization:
    return Linearization(inst, base, residual(inst, base))


def model_value(inst: ProblemInstance, base: Point, trial: Point) -> float:
    """Convex model f_base(trial): penalty of the linearized residual."""
    lin = linearize(inst, base)
    return penalties.value(inst.penalty, lin.c + lin.apply_step(trial - base))


def subgradient(inst: ProblemInstance, pt: Point) -> Point:
    """Chain-rule element dF(pt)* s with s picked from the h subdifferential."""
    # kink tolerance at the instance's measurement scale keeps truth a fixed point
    tol = 1e-11 * (1.0 + np.abs(inst.observation.b).max())
    s = penalties.subgradient(inst.penalty, residual(inst, pt), kink_tol=tol)
    return Linearization(inst, pt, None).adjoint_step(s)


def smooth_gradient(inst: ProblemInstance, pt: Point) -> Point:
    """Exact gradient of the smooth squared-l2 objective."""
    if inst.penalty not in penalties.SMOOTH:
        raise ValueError(f"smooth gradient undefined for penalty {inst.penalty!r}")
    s = 2.0 * residual(inst, pt) / inst.ensemble.m
    return Linearization(inst, pt, None).adjoint_step(s)


def recovered_matrix(inst: ProblemInstance, pt: Point) -> np.ndarray:
    """The low-rank candidate matrix (XX^T, or XY in the asymmetric case)."""
    if isinstance(pt, AsymPoint):
        return pt.x @ pt.y
    return pt.x @ pt.x.T


def rel_error(inst: ProblemInstance, pt: Point) -> float:
    """Normalized matrix error; entrywise-l1 metric for the l1 robust-PCA objective."""
    diff = recovered_matrix(inst, pt) - inst.m_sharp
    if inst.penalty == penalties.ENTRYWISE_L1:
        denom = np.abs(inst.m_sharp).sum()
        return float(np.abs(diff).sum() / denom) if denom > 0 else \
            float(np.abs(diff).sum())
    denom = np.linalg.norm(inst.m_sharp)
    return float(np.linalg.norm(diff) / denom) if denom > 0 else \
        float(np.linalg.norm(diff))
