"""Constraint projections and the strongly convex prox-linear subproblem solver.

The subproblem  min_{v in C} h(c + J(v - base)) + phi(v - base)  is solved by
two-block consensus splitting: a proximal step on h in an auxiliary
measurement-space variable, a regularized least-squares step in the factor
step (conjugate gradient on the normal equations), and scaled dual updates.
Nontrivial constraints and non-quadratic step-penalty parts each get an extra
consensus block.  The splitting penalty is auto-scaled by residual balancing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import composite, penalties
from .points import FactorSparsePoint, Point, SymPoint


# ---------------------------------------------------------------------------
# constraint sets

class Unconstrained:
    """The whole space; projection is the identity."""

    trivial = True

    def project(self, pt: Point) -> Point:
        return pt

    def __repr__(self):
        return "Unconstrained()"


def _clip_rows(X, radius):
    norms = np.linalg.norm(X, axis=1)
    scale = np.ones_like(norms)
    over = norms > radius
    scale[over] = radius / norms[over]
    return X * scale[:, None]


def _project_columns_l1(S, budgets):
    """Euclidean projection of each column onto its l1 ball (sort-and-threshold)."""
    S = np.asarray(S, dtype=float)
    budgets = np.asarray(budgets, dtype=float)
    A = np.abs(S)
    totals = A.sum(axis=0)
    out = S.copy()
    over = totals > budgets
    if not over.any():
        return out
    cols = np.nonzero(over)[0]
    u = -np.sort(-A[:, cols], axis=0)
    css = np.cumsum(u, axis=0)
    ks = np.arange(1, S.shape[0] + 1)[:, None]
    cand = (css - budgets[cols]) / ks
    valid = u > cand
    counts = valid.sum(axis=0)
    theta = np.where(counts > 0,
                     (np.take_along_axis(css, np.maximum(counts - 1, 0)[None, :],
                                         axis=0)[0] - budgets[cols])
                     / np.maximum(counts, 1),
                     0.0)
    # zero-budget columns project to zero
    theta = np.where(budgets[cols] <= 0, np.inf, theta)
    out[:, cols] = np.sign(S[:, cols]) * np.maximum(A[:, cols] - theta, 0.0)
    return out


@dataclass(frozen=True)
class RowBall:
    """{X : ||X||_{2,inf} <= radius}; rows over the radius rescale onto it."""
    radius: float

    trivial = False

    def project(self, pt: Point) -> Point:
        if not isinstance(pt, SymPoint):
            raise ValueError("row-ball constraint applies to symmetric factors")
        return SymPoint(_clip_rows(pt.x, self.radius))


@dataclass(frozen=True, eq=False)
class RpcaEuclidean:
    """Product set for robust PCA: row-ball on X times column l1 budgets on S.

    The blocks project independently (the set is a product).  With
    ``symmetric_budgets`` (test-only) the S block is re-symmetrized and
    re-projected, at most two passes.
    """
    row_radius: float
    col_budgets: np.ndarray
    symmetric_budgets: bool = False

    trivial = False

    def project(self, pt: Point) -> Point:
        if not isinstance(pt, FactorSparsePoint):
            raise ValueError("rpca-euclidean constraint applies to (X, S) points")
        x = _clip_rows(pt.x, self.row_radius)
        s = _project_columns_l1(pt.s, self.col_budgets)
        if self.symmetric_budgets:
            s = _project_columns_l1(0.5 * (s + s.T), self.col_budgets)
        return FactorSparsePoint(x, s)


@dataclass(frozen=True)
class Box:
    """Entrywise box (test-only)."""
    lo: float
    hi: float

    trivial = False

    def project(self, pt: Point) -> Point:
        return pt._wrap([np.clip(a, self.lo, self.hi) for a in pt._blocks()])


def project(cset, pt: Point) -> Point:
    """Euclidean nearest point of ``pt`` in the constraint set."""
    return cset.project(pt)


# ---------------------------------------------------------------------------
# step penalties

@dataclass(frozen=True)
class Quadratic:
    """(beta/2) ||step||_2^2."""
    beta: float

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    quad_coeff = property(lambda self: self.beta)
    has_prox_block = property(lambda self: False)

    def value(self, step: Point) -> float:
        return 0.5 * self.beta * step.dot(step)


@dataclass(frozen=True)
class QuadPlusLinear:
    """a ||step||_2^2 + b ||step||_2 (the modified matrix-completion penalty)."""
    a: float
    b: float = 0.0

    def __post_init__(self):
        if self.a <= 0 or self.b < 0:
            raise ValueError("need a > 0 and b >= 0")

    quad_coeff = property(lambda self: 2.0 * self.a)
    has_prox_block = property(lambda self: self.b > 0)

    def value(self, step: Point) -> float:
        n2 = step.dot(step)
        return self.a * n2 + self.b * np.sqrt(n2)

    def prox_block(self, v: Point, rho: float) -> Point:
        n = v.norm()
        t = self.b / rho
        if n <= t:
            return v.zeros_like()
        return v * (1.0 - t / n)


def _prox_sq21(V, gamma, rho):
    """argmin_T (1/2gamma) ||T||_{2,1}^2 + (rho/2) ||T - V||_F^2, rowwise.

    The squared (2,1)-norm couples rows only through their norms, so the
    problem reduces to the l1-square prox over the row-norm vector: solve
    gamma*rho*theta = sum_i max(nu_i - theta, 0) by the sorted-scan rule.
    """
    nu = np.linalg.norm(V, axis=1)
    total = nu.sum()
    if total == 0:
        return V.copy()
    srt = -np.sort(-nu)
    css = np.cumsum(srt)
    ks = np.arange(1, nu.size + 1)
    cand = css / (ks + gamma * rho)
    valid = srt > cand
    k = int(valid.sum())
    theta = cand[k - 1] if k > 0 else 0.0
    scale = np.maximum(nu - theta, 0.0) / np.where(nu > 0, nu, 1.0)
    return V * scale[:, None]


@dataclass(frozen=True)
class RowNormSquared:
    """(1/2gamma) ||step||_{2,1}^2, the non-Euclidean robust-PCA step penalty."""
    gamma: float

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")

    quad_coeff = property(lambda self: 0.0)
    has_prox_block = property(lambda self: True)

    def value(self, step: Point) -> float:
        if not isinstance(step, SymPoint):
            raise ValueError("row-norm-squared penalty applies to symmetric factors")
        return np.linalg.norm(step.x, axis=1).sum() ** 2 / (2.0 * self.gamma)

    def prox_block(self, v: Point, rho: float) -> Point:
        return SymPoint(_prox_sq21(v.x, self.gamma, rho))


def prox_row_norm(V: Point, base: Point, gamma: float) -> Point:
    """Exact proximal map of (1/2gamma) ||. - base||_{2,1}^2 evaluated at V."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    step = V - base
    return base + SymPoint(_prox_sq21(step.x, gamma, 1.0))


# ---------------------------------------------------------------------------
# subproblem solver

def _cg(apply_op, rhs: Point, x0: Point, rel_tol: float, max_iter: int):
    """Conjugate gradient over the Point algebra, warm-started at x0."""
    x = x0
    r = rhs - apply_op(x)
    p = r
    rs = r.dot(r)
    stop2 = (rel_tol ** 2) * max(rhs.dot(rhs), 1e-300)
    it = 0
    while rs > stop2 and it < max_iter:
        Ap = apply_op(p)
        alpha = rs / p.dot(Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        rs_new = r.dot(r)
        p = r + (rs_new / rs) * p
        rs = rs_new
        it += 1
    return x, it


@dataclass
class SubproblemResult:
    point: Point
    gap: float
    iters: int
    objective_curve: np.ndarray


def solve_subproblem(inst, base: Point, step_penalty, cset=None,
                     tol=None, max_iter=2000, start=None) -> SubproblemResult:
    """Approximately minimize h(c + J(v - base)) + phi(v - base) over v in the set.

    Returns the best feasible candidate seen, the final primal/dual residual
    measure (``gap``), and the sweep count.  Non-convergence within
    ``max_iter`` is reported through ``gap``; the caller decides.
    """
    if cset is None:
        cset = inst.constraint
    lin = composite.linearize(inst, base)
    c = lin.c
    h = inst.penalty
    if tol is None:
        tol = 1e-10 * (1.0 + abs(penalties.value(h, c)))

    q = step_penalty.quad_coeff
    has_s = step_penalty.has_prox_block
    has_w = not cset.trivial
    n_extra = int(has_s) + int(has_w)

    t = (start - base) if start is not None else base.zeros_like()
    if has_w:
        t = cset.project(base + t) - base
    z = c + lin.apply_step(t)
    u_z = np.zeros_like(z)
    s = t.copy() if has_s else None
    u_s = t.zeros_like() if has_s else None
    w = t.copy() if has_w else None
    u_w = t.zeros_like() if has_w else None

    def candidate_value(tc, jtc):
        return penalties.value(h, c + jtc) + step_penalty.value(tc)

    jt = lin.apply_step(t)
    best_t = t
    best_val = candidate_value(t, jt)
    curve = [best_val]

    # start the splitting penalty at the dual/primal scale ratio; residual
    # balancing then only needs small corrections
    c_norm = np.linalg.norm(c)
    g0 = np.linalg.norm(penalties.subgradient(h, c))
    rho = g0 / (1.0 + c_norm) if g0 > 0 else 1.0
    gap = np.inf
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        def normal_op(d, _rho=rho):
            out = (q + _rho * n_extra) * d + _rho * lin.adjoint_step(lin.apply_step(d))
            return out

        rhs = rho * lin.adjoint_step(z - u_z - c)
        if has_s:
            rhs = rhs + rho * (s - u_s)
        if has_w:
            rhs = rhs + rho * (w - u_w)
        cg_rel = min(1e-6, max(1e-12, 1e-3 * gap / (1.0 + c_norm)))
        t, _ = _cg(normal_op, rhs, t, cg_rel, 200)
        jt = lin.apply_step(t)

        z_old = z
        z = penalties.prox(h, c + jt + u_z, 1.0 / rho)
        u_z = u_z + (c + jt - z)
        pr2 = np.linalg.norm(c + jt - z) ** 2
        dz = lin.adjoint_step(z - z_old)
        dr2 = dz.dot(dz)

        if has_s:
            s_old = s
            s = step_penalty.prox_block(t + u_s, rho)
            u_s = u_s + (t - s)
            diff = t - s
            pr2 += diff.dot(diff)
            ds = s - s_old
            dr2 += ds.dot(ds)
        if has_w:
            w_old = w
            w = cset.project(base + (t + u_w)) - base
            u_w = u_w + (t - w)
            diff = t - w
            pr2 += diff.dot(diff)
            dw = w - w_old
            dr2 += dw.dot(dw)

        pr = np.sqrt(pr2)
        dr = rho * np.sqrt(dr2)
        gap = max(pr, dr)

        cand = w if has_w else t
        jc = lin.apply_step(cand) if has_w else jt
        val = candidate_value(cand, jc)
        if val < best_val:
            best_val = val
            best_t = cand
        curve.append(best_val)

        if gap <= tol:
            break
        if sweeps % 10 == 0:
            if pr > 10.0 * dr:
                rho *= 2.0
                u_z = u_z / 2.0
                if has_s:
                    u_s = u_s * 0.5
                if has_w:
                    u_w = u_w * 0.5
            elif dr > 10.0 * pr:
                rho /= 2.0
                u_z = u_z * 2.0
                if has_s:
                    u_s = u_s * 2.0
                if has_w:
                    u_w = u_w * 2.0

    return SubproblemResult(point=base + best_t, gap=float(gap), iters=sweeps,
                            objective_curve=np.asarray(curve))
