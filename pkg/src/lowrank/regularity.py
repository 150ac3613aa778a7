"""Empirical estimation of the regularity constants that drive convergence.

Every routine here samples a Monte Carlo envelope (min/max over random
low-rank probes); none of the outputs are certificates.  Sampling loops are
reduction-by-min/max over per-sample derived streams, so results do not
depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from . import composite, operators as ops
from ._rng import rng_from
from .points import AsymPoint, Point, SymPoint
from .proxsub import _clip_rows, _project_columns_l1

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class RegularityReport:
    """Estimated constants for one ensemble/instance configuration.

    The instance-dependent fields (rho, mu, L) are NaN when no instance was
    supplied to estimate them from; the RIP envelope always satisfies
    0 <= kappa1_hat <= kappa2_hat.
    """
    kappa1_hat: float
    kappa2_hat: float
    kappa3_hat: float
    rho_hat: float
    mu_hat: float
    L_hat: float
    n_samples: int
    seed: int
    norm_kind: str

    def __post_init__(self):
        if not (0.0 <= self.kappa1_hat <= self.kappa2_hat):
            raise ValueError("need 0 <= kappa1_hat <= kappa2_hat")

    def to_dict(self):
        return asdict(self)


def dist_procrustes(X, X_sharp) -> float:
    """min over orthogonal R of ||X - X_sharp R||_F, closed form via SVD."""
    X = np.asarray(X, dtype=float)
    X_sharp = np.asarray(X_sharp, dtype=float)
    if X.shape != X_sharp.shape:
        raise ValueError(f"shapes {X.shape} and {X_sharp.shape} differ")
    sv = np.linalg.svd(X_sharp.T @ X, compute_uv=False)
    d2 = (X * X).sum() + (X_sharp * X_sharp).sum() - 2.0 * sv.sum()
    return float(np.sqrt(max(d2, 0.0)))


def dist_orbit(inst, pt: Point) -> float:
    """Distance to the solution orbit of the instance's ground truth.

    Symmetric factors use the O(r) Procrustes distance.  The asymmetric pair
    is measured against the O(r)-suborbit {(X# R, R^T Y#)} (the full GL(r)
    orbit has no closed form), via Procrustes on the stacked blocks.
    """
    truth = inst.truth
    if isinstance(pt, SymPoint):
        return dist_procrustes(pt.x, truth.x)
    if isinstance(pt, AsymPoint):
        return dist_procrustes(np.vstack([pt.x, pt.y.T]),
                               np.vstack([truth.x, truth.y.T]))
    dx = dist_procrustes(pt.x, truth.x)
    ds = np.linalg.norm(pt.s - truth.s)
    return float(np.hypot(dx, ds))


# ---------------------------------------------------------------------------
# RIP and outlier margins

def _unit_probe(ensemble, r, rng, idx):
    """A(W) for a random unit-Frobenius rank-2r probe W with Gaussian factors.

    Square kinds only see symmetric matrices, so their probes cycle through
    three symmetric families: generic UV^T + VU^T, signed differences
    UU^T - VV^T (the class traversed by factorization residuals), and PSD
    UU^T (the family attaining the upper envelope, e.g. the sqrt(r) growth
    of quadratic sensing I).  A single generic family misses the extremal
    directions with probability exponentially small in r.
    """
    if ensemble.kind in ops.SQUARE_KINDS:
        family = idx % 3
        if family == 0:
            U = rng.standard_normal((ensemble.d1, r))
            V = rng.standard_normal((ensemble.d1, r))
            av = ops.apply_factored(ensemble, U, V) + ops.apply_factored(ensemble, V, U)
            G = U.T @ V
            fro2 = 2.0 * np.sum((U.T @ U) * (V.T @ V)) + 2.0 * np.sum(G * G.T)
        elif family == 1:
            U = rng.standard_normal((ensemble.d1, r))
            V = rng.standard_normal((ensemble.d1, r))
            av = ops.apply_factored(ensemble, U, U) - ops.apply_factored(ensemble, V, V)
            gu, gv, gc = U.T @ U, V.T @ V, U.T @ V
            fro2 = np.sum(gu * gu) + np.sum(gv * gv) - 2.0 * np.sum(gc * gc)
        else:
            U = rng.standard_normal((ensemble.d1, 2 * r))
            av = ops.apply_factored(ensemble, U, U)
            g = U.T @ U
            fro2 = np.sum(g * g)
    else:
        U = rng.standard_normal((ensemble.d1, 2 * r))
        V = rng.standard_normal((ensemble.d2, 2 * r))
        av = ops.apply_factored(ensemble, U, V)
        fro2 = np.sum((U.T @ U) * (V.T @ V))
    return av / np.sqrt(fro2)


def estimate_rip(ensemble, r, norm_kind, n_samples, seed):
    """Sampled envelope (kappa1_hat, kappa2_hat) of the RIP ratio.

    Ratio is |||A(W)||| / ||W||_F over ``n_samples`` random unit rank-2r
    probes, with the scaled l1 or l2 measurement norm.
    """
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if 2 * r > min(ensemble.d1, ensemble.d2):
        raise ValueError("rank too large for the ensemble dimensions")
    if norm_kind not in ("scaled-l1", "scaled-l2"):
        raise ValueError(f"unsupported norm kind {norm_kind!r}")
    rng = rng_from(seed, "rip", ensemble.kind, r)
    m = ensemble.m
    lo, hi = np.inf, -np.inf
    for i in range(n_samples):
        av = _unit_probe(ensemble, r, rng, i)
        ratio = np.abs(av).sum() / m if norm_kind == "scaled-l1" \
            else np.linalg.norm(av) / np.sqrt(m)
        lo = min(lo, ratio)
        hi = max(hi, ratio)
    return float(lo), float(hi)


def estimate_outlier_margin(ensemble, outlier_set, r, n_samples, seed) -> float:
    """Sampled lower envelope of (1/m)(||A_{Ic}(W)||_1 - ||A_I(W)||_1).

    With the same (r, n_samples, seed) the probe stream matches
    :func:`estimate_rip`, so an empty outlier set reproduces kappa1_hat.
    """
    outliers = np.asarray(outlier_set, dtype=np.int64)
    m = ensemble.m
    if outliers.size >= m / 2:
        raise ValueError("outlier set must cover fewer than half the measurements")
    inlier_mask = np.ones(m, dtype=bool)
    inlier_mask[outliers] = False
    rng = rng_from(seed, "rip", ensemble.kind, r)
    worst = np.inf
    for i in range(n_samples):
        av = np.abs(_unit_probe(ensemble, r, rng, i))
        margin = (av[inlier_mask].sum() - av[~inlier_mask].sum()) / m
        worst = min(worst, margin)
    return float(worst)


# ---------------------------------------------------------------------------
# approximation, sharpness, Lipschitz

def _random_unit_point(like: Point, rng) -> Point:
    blocks = [rng.standard_normal(a.shape) for a in like._blocks()]
    pt = like._wrap(blocks)
    return pt * (1.0 / pt.norm())


def estimate_approx_modulus(inst, n_pairs, radius, seed, two_term=None):
    """Worst sampled ratio |f(y) - f_x(y)| / ||y - x||^2 near the truth.

    With ``two_term`` (the default for mask-ensemble Frobenius instances,
    i.e. matrix completion) a least-squares fit of the two-term model
    a*||y-x||^2 + b*||y-x|| is returned as the pair (a_hat, b_hat).
    """
    if n_pairs < 1:
        raise ValueError("need at least one pair")
    if two_term is None:
        two_term = (inst.ensemble.kind == ops.MASK
                    and inst.penalty == "frobenius")
    rng = rng_from(seed, "approx")
    truth = inst.truth
    gaps, h1s = [], []
    for _ in range(n_pairs):
        x = truth + (radius * rng.random()) * _random_unit_point(truth, rng)
        y = truth + (radius * rng.random()) * _random_unit_point(truth, rng)
        h = (y - x).norm()
        if h < 1e-12:
            continue
        gaps.append(abs(composite.objective(inst, y) - composite.model_value(inst, x, y)))
        h1s.append(h)
    gaps = np.asarray(gaps)
    h1s = np.asarray(h1s)
    if two_term:
        design = np.column_stack([h1s ** 2, h1s])
        coef, *_ = np.linalg.lstsq(design, gaps, rcond=None)
        return float(coef[0]), float(coef[1])
    return float(np.max(gaps / h1s ** 2))


def _shell_radii(radius):
    # log-spaced shells expose the small-distance regime where ratios bind
    return radius * np.geomspace(1e-2, 1.0, 10)


def estimate_sharpness(inst, n_samples, radius, seed) -> float:
    """Smallest sampled ratio (f(x) - min f) / dist(x, orbit) near the orbit."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = rng_from(seed, "sharpness")
    truth = inst.truth
    per_shell = max(1, n_samples // 10)
    worst = np.inf
    for s in _shell_radii(radius):
        for _ in range(per_shell):
            x = truth + s * _random_unit_point(truth, rng)
            d = dist_orbit(inst, x)
            if d < 1e-12:
                continue
            ratio = (composite.objective(inst, x) - inst.min_f) / d
            worst = min(worst, ratio)
    return float(worst)


def estimate_lipschitz(inst, n_samples, radius, seed) -> float:
    """Largest sampled subgradient norm within the radius around the truth."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    rng = rng_from(seed, "lipschitz")
    truth = inst.truth
    per_shell = max(1, n_samples // 10)
    best = 0.0
    for s in _shell_radii(radius):
        for _ in range(per_shell):
            x = truth + s * _random_unit_point(truth, rng)
            best = max(best, composite.subgradient(inst, x).norm())
    return float(best)


# ---------------------------------------------------------------------------
# rank-1 l1 sharpness and its general-rank probe

def rank1_l1_sharpness_check(x_bar, n_samples, seed, chunk=2048):
    """Check ||xx^T - xbar xbar^T||_1 >= (sqrt(2)-1)||xbar||_1 * dist_l1(x, {+-xbar}).

    Samples x inside the validity radius (sqrt(2)-1)||xbar||_1; returns
    (min_ratio, bound).  Direct evaluation is the oracle: the bound is exact,
    so min_ratio < bound - 1e-9 indicates a violation.
    """
    x_bar = np.asarray(x_bar, dtype=float)
    if not x_bar.any():
        raise ValueError("x_bar must be nonzero")
    bound = (SQRT2 - 1.0) * np.abs(x_bar).sum()
    outer_bar = np.outer(x_bar, x_bar)
    rng = rng_from(seed, "rank1")
    min_ratio = np.inf
    done = 0
    while done < n_samples:
        n = min(chunk, n_samples - done)
        dirs = rng.standard_normal((n, x_bar.size))
        dirs /= np.abs(dirs).sum(axis=1, keepdims=True)
        radii = bound * rng.random(n)
        xs = x_bar[None, :] + radii[:, None] * dirs
        dist = np.minimum(np.abs(xs - x_bar).sum(axis=1),
                          np.abs(xs + x_bar).sum(axis=1))
        num = np.abs(xs[:, :, None] * xs[:, None, :] - outer_bar).sum(axis=(1, 2))
        ok = dist > 1e-12
        if ok.any():
            min_ratio = min(min_ratio, float(np.min(num[ok] / dist[ok])))
        done += n
    return float(min_ratio), float(bound)


def _random_orthogonal(r, rng):
    q, rr = np.linalg.qr(rng.standard_normal((r, r)))
    return q * np.sign(np.diag(rr))


def rank_r_l1_sharpness_probe(x_bar, n_samples, seed, n_rotations=64,
                              radius_scale=0.3):
    """Diagnostic probe of a conjectured general-rank l1 sharpness bound.

    Samples X near the orbit of ``x_bar`` and reports the empirical ratios
    ||XX^T - xbar xbar^T||_1 / dist_{2,1}(X, orbit), with the orbit distance
    approximated over the Procrustes-optimal rotation plus random rotations.
    No pass/fail: returns (min_ratio, ratios) for inspection only.
    """
    X_bar = np.asarray(x_bar, dtype=float)
    d, r = X_bar.shape
    m_bar = X_bar @ X_bar.T
    sigma_r = np.linalg.svd(X_bar, compute_uv=False)[-1]
    rng = rng_from(seed, "rankr")
    rotations = [_random_orthogonal(r, rng) for _ in range(n_rotations)]
    ratios = []
    for _ in range(n_samples):
        g = rng.standard_normal((d, r))
        s = radius_scale * sigma_r * rng.random()
        X = X_bar + s * g / np.linalg.norm(g)
        u, _, vt = np.linalg.svd(X_bar.T @ X)
        cands = [u @ vt] + rotations
        dist21 = min(np.linalg.norm(X - X_bar @ R, axis=1).sum() for R in cands)
        if dist21 < 1e-12:
            continue
        ratios.append(np.abs(X @ X.T - m_bar).sum() / dist21)
    ratios = np.asarray(ratios)
    return float(ratios.min()), ratios


def rpca_cross_term_check(x_sharp, s_sharp, nu, n_samples, seed,
                          radius=0.5) -> float:
    """Worst sampled ratio of the robust-PCA cross-term to its bound.

    Samples feasible pairs (X in the row ball, S in the column-budget set)
    and evaluates |<S - S#, XX^T - X#X#^T>| against
    10 sqrt(nu r k / d) ||S - S#||_F ||X - X#||_F, where k is the realized
    max nonzero count per row/column of S#.  Values <= 1 confirm the bound.
    """
    X_sharp = np.asarray(x_sharp, dtype=float)
    S_sharp = np.asarray(s_sharp, dtype=float)
    d, r = X_sharp.shape
    k = max(int(np.max((S_sharp != 0).sum(axis=0))),
            int(np.max((S_sharp != 0).sum(axis=1))), 1)
    row_radius = np.sqrt(nu * r / d)
    if np.linalg.norm(X_sharp, axis=1).max() > row_radius + 1e-12:
        raise ValueError("x_sharp violates the incoherence row bound")
    budgets = np.abs(S_sharp).sum(axis=0)
    coeff = 10.0 * np.sqrt(nu * r * k / d)
    m_sharp = X_sharp @ X_sharp.T
    rng = rng_from(seed, "crossterm")
    worst = 0.0
    for _ in range(n_samples):
        gx = rng.standard_normal((d, r))
        X = _clip_rows(X_sharp + radius * rng.random() * gx / np.linalg.norm(gx),
                       row_radius)
        gs = rng.standard_normal((d, d))
        S = _project_columns_l1(S_sharp + np.linalg.norm(S_sharp) * rng.random()
                                * gs / np.linalg.norm(gs), budgets)
        dx = np.linalg.norm(X - X_sharp)
        ds = np.linalg.norm(S - S_sharp)
        if dx < 1e-12 or ds < 1e-12:
            continue
        cross = abs(np.sum((S - S_sharp) * (X @ X.T - m_sharp)))
        worst = max(worst, cross / (coeff * ds * dx))
    return float(worst)
