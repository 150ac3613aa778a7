"""Outer iterative methods: Polyak and geometric subgradient, prox-linear,
and smooth gradient-descent baselines.  Every solver emits a SolveTrace.

A trace holds rows k = 0..K with K <= max_iters - 1; max_iters therefore
bounds the number of recorded iterates (max_iters = 1 evaluates the start
point and takes no step).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import composite, penalties, proxsub, regularity
from ._rng import rng_from
from .points import AsymPoint, FactorSparsePoint, Point, SymPoint

CONVERGED = "converged"
MAX_ITERS = "max_iters"
STALLED = "stalled"


@dataclass
class SolverConfig:
    max_iters: int = 1000
    stop_rel_error: float = 1e-5
    record_every: int = 1
    seed: int = 0
    min_f: float | None = None  # None: use the instance's known clean optimum
    subproblem_tol: float | None = None
    subproblem_max_iter: int | None = None
    keep_iterates: bool = False

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.stop_rel_error <= 0:
            raise ValueError("stop_rel_error must be positive")


@dataclass
class SolveTrace:
    """Per-iteration record of a solve plus the terminal status."""
    ks: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    rel_errors: list = field(default_factory=list)
    dists: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)
    sub_iters: list = field(default_factory=list)
    sub_gaps: list = field(default_factory=list)
    times: list = field(default_factory=list)
    iterates: list = field(default_factory=list)
    status: str = MAX_ITERS

    def record(self, k, f, rel, dist, step=0.0, sub_it=0, sub_gap=0.0, t=0.0):
        self.ks.append(k)
        self.objectives.append(f)
        self.rel_errors.append(rel)
        self.dists.append(dist)
        self.step_sizes.append(step)
        self.sub_iters.append(sub_it)
        self.sub_gaps.append(sub_gap)
        self.times.append(t)

    @property
    def final_rel_error(self) -> float:
        return self.rel_errors[-1]

    @property
    def final_k(self) -> int:
        return self.ks[-1]

    def __len__(self):
        return len(self.ks)


def _metrics(inst, pt):
    rel = composite.rel_error(inst, pt)
    if isinstance(pt, SymPoint):
        dist = regularity.dist_procrustes(pt.x, inst.truth.x)
    else:
        dist = float("nan")
    return rel, dist


def initialize(truth: Point, delta: float, seed: int) -> Point:
    """Perturbed-truth start X0 = X# + delta*||X#||_F * (G/||G||_F), blockwise.

    The asymmetric pair perturbs each factor with an independent direction;
    the factor-plus-sparse variant perturbs X only and starts S at zero.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    rng = rng_from(seed, "init")
    if isinstance(truth, SymPoint):
        g = rng.standard_normal(truth.x.shape)
        return SymPoint(truth.x + delta * np.linalg.norm(truth.x) * g / np.linalg.norm(g))
    if isinstance(truth, AsymPoint):
        gx = rng.standard_normal(truth.x.shape)
        gy = rng.standard_normal(truth.y.shape)
        return AsymPoint(
            truth.x + delta * np.linalg.norm(truth.x) * gx / np.linalg.norm(gx),
            truth.y + delta * np.linalg.norm(truth.y) * gy / np.linalg.norm(gy))
    g = rng.standard_normal(truth.x.shape)
    x0 = truth.x + delta * np.linalg.norm(truth.x) * g / np.linalg.norm(g)
    return FactorSparsePoint(x0, np.zeros_like(truth.s))


def _loop(inst, x0, cfg, direction_fn, stall_first=False):
    """Shared outer loop.  ``direction_fn(k, x, f)`` returns None to stall or
    (step, extras) where extras carries either a ``direction`` Point to move
    against or the precomputed ``next`` iterate plus subproblem stats.

    Subgradient methods pass ``stall_first`` so the zero-subgradient exit
    branch precedes the convergence check; prox-linear keeps the opposite
    order to avoid solving a subproblem at an already-converged iterate.
    """
    x = proxsub.project(inst.constraint, x0)
    trace = SolveTrace()
    t0 = time.perf_counter()
    k = 0
    while True:
        f = composite.objective(inst, x)
        rel, dist = _metrics(inst, x)
        if cfg.keep_iterates:
            trace.iterates.append(x)
        move = direction_fn(k, x, f) if stall_first else False
        terminal = None
        if stall_first and move is None:
            terminal = STALLED
        elif rel < cfg.stop_rel_error:
            terminal = CONVERGED
        elif k >= cfg.max_iters - 1:
            terminal = MAX_ITERS
        else:
            if not stall_first:
                move = direction_fn(k, x, f)
            if move is None:
                terminal = STALLED
        if terminal is not None:
            trace.record(k, f, rel, dist, 0.0, t=time.perf_counter() - t0)
            trace.status = terminal
            return trace
        step, extras = move
        if k % cfg.record_every == 0:
            trace.record(k, f, rel, dist, step,
                         extras.get("sub_iters", 0), extras.get("sub_gap", 0.0),
                         t=time.perf_counter() - t0)
        x = extras["next"] if "next" in extras else \
            proxsub.project(inst.constraint, x - step * extras["direction"])
        k += 1


def polyak(inst, x0: Point, cfg: SolverConfig) -> SolveTrace:
    """Polyak-step projected subgradient method.

    The step length is (f(x_k) - min_f) / ||zeta_k||^2; a zero subgradient
    exits with status ``stalled``.  Passing the clean optimum as ``min_f``
    gives the modified variant for dense-noise problems.
    """
    min_f = inst.min_f if cfg.min_f is None else cfg.min_f

    def direction(k, x, f):
        zeta = composite.subgradient(inst, x)
        n2 = zeta.dot(zeta)
        if n2 <= 1e-28:
            return None
        step = max(f - min_f, 0.0) / n2
        return step, {"direction": zeta}

    return _loop(inst, x0, cfg, direction, stall_first=True)


def geometric(inst, x0: Point, lam: float, q: float, cfg: SolverConfig) -> SolveTrace:
    """Projected subgradient method with geometrically decaying steps lam*q^k.

    Iterates move along the normalized subgradient, so each update moves the
    point by at most lam*q^k (projections are nonexpansive).
    """
    if lam < 0 or not 0.0 < q < 1.0:
        raise ValueError("need lam >= 0 and q in (0, 1)")

    def direction(k, x, f):
        zeta = composite.subgradient(inst, x)
        norm = zeta.norm()
        if norm <= 1e-14:
            return None
        return lam * q ** k, {"direction": zeta * (1.0 / norm)}

    return _loop(inst, x0, cfg, direction, stall_first=True)


def _subproblem_schedule(inst, cfg, k, f):
    """Tolerance/cap defaults: the 1e-4/(2k) schedule with cap 500 for the
    l1 robust-PCA objective, desk-scale accuracy elsewhere."""
    if inst.penalty == penalties.ENTRYWISE_L1:
        tol = 1e-4 / (2.0 * (k + 1))
        cap = 500
    else:
        tol = 1e-10 * (1.0 + abs(f))
        cap = 2000
    if cfg.subproblem_tol is not None:
        tol = cfg.subproblem_tol
    if cfg.subproblem_max_iter is not None:
        cap = cfg.subproblem_max_iter
    return tol, cap


def prox_linear(inst, x0: Point, step_penalty, cfg: SolverConfig) -> SolveTrace:
    """Prox-linear outer loop: minimize the convex model plus a step penalty.

    A subproblem that exhausts its sweep cap surfaces through the recorded
    gap; the outer loop continues from the best candidate it returned.
    """
    def direction(k, x, f):
        tol, cap = _subproblem_schedule(inst, cfg, k, f)
        res = proxsub.solve_subproblem(inst, x, step_penalty, inst.constraint,
                                       tol=tol, max_iter=cap, start=x)
        step = (res.point - x).norm()
        return step, {"next": res.point, "sub_iters": res.iters,
                      "sub_gap": res.gap}

    return _loop(inst, x0, cfg, direction)


def gradient_descent(inst, x0: Point, step_rule, cfg: SolverConfig) -> SolveTrace:
    """Projected gradient descent on the smooth squared-l2 formulation.

    ``step_rule`` is ("constant", eta) or ("polyak",); the latter uses the
    step (f - min_f)/||grad||^2.
    """
    if inst.penalty not in penalties.SMOOTH:
        raise ValueError("gradient descent needs the squared-l2 penalty")
    if step_rule[0] not in ("constant", "polyak"):
        raise ValueError(f"unknown step rule {step_rule!r}")
    min_f = inst.min_f if cfg.min_f is None else cfg.min_f

    def direction(k, x, f):
        grad = composite.smooth_gradient(inst, x)
        n2 = grad.dot(grad)
        if n2 <= 1e-28:
            return None
        if step_rule[0] == "constant":
            step = float(step_rule[1])
        else:
            step = max(f - min_f, 0.0) / n2
        return step, {"direction": grad}

    return _loop(inst, x0, cfg, direction)
