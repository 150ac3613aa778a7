"""Measurement ensembles: the linear map A, its adjoint, and corrupted observations.

Five sampling families are supported.  Payloads are materialized explicitly
(vectors/matrices stored, not matrix-free), which keeps adjoint tests exact at
the desk scales this library targets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._rng import rng_from

GAUSSIAN = "gaussian-sensing"
QUADRATIC_I = "quadratic-I"
QUADRATIC_II = "quadratic-II"
BILINEAR = "bilinear"
MASK = "entrywise-mask"

KINDS = (GAUSSIAN, QUADRATIC_I, QUADRATIC_II, BILINEAR, MASK)
#: kinds that act on square (symmetric) matrices only
SQUARE_KINDS = (QUADRATIC_I, QUADRATIC_II, MASK)

_EXPLICIT_SEED = -1  # seed sentinel for test-injected payloads


class MeasurementEnsemble:
    """Immutable sampling data defining A : R^{d1 x d2} -> R^m.

    Payload arrays per kind:
      gaussian-sensing  ``mats``: (m, d1, d2) measurement matrices
      quadratic-I       ``p``: (m, d) vectors, component p_i' M p_i
      quadratic-II      ``p``, ``p_tilde``: (m, d), component p_i'Mp_i - pt_i'Mpt_i
      bilinear          ``p``: (m, d1), ``q``: (m, d2), component p_i' M q_i
      entrywise-mask    ``rows``, ``cols``: (m,) observed index pairs in
                        canonical row-major order; ``prob`` sampling rate.
    """

    __slots__ = ("kind", "d1", "d2", "m", "seed", "prob", "data")

    def __init__(self, kind, d1, d2, m, seed, data, prob=None):
        if kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {kind!r}")
        self.kind = kind
        self.d1 = int(d1)
        self.d2 = int(d2)
        self.m = int(m)
        self.seed = seed
        self.prob = prob
        for arr in data.values():
            arr.setflags(write=False)
        self.data = data

    def __repr__(self):
        return (f"MeasurementEnsemble(kind={self.kind!r}, d1={self.d1}, "
                f"d2={self.d2}, m={self.m}, seed={self.seed})")


def make_ensemble(kind, d1, d2, m_or_p, seed) -> MeasurementEnsemble:
    """Sample an ensemble with i.i.d. standard Gaussian payload.

    For ``entrywise-mask`` the fourth argument is the Bernoulli observation
    probability p in (0, 1]; the observed set is symmetric ((i,j) observed iff
    (j,i) is) and m = |Omega|.  Otherwise it is the measurement count m >= 1.
    Reconstruction from (kind, dims, m_or_p, seed) is bit-identical.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    d1, d2 = int(d1), int(d2)
    if d1 < 1 or d2 < 1:
        raise ValueError("dimensions must be positive")
    if kind in SQUARE_KINDS and d1 != d2:
        raise ValueError(f"{kind} requires square dimensions, got {d1}x{d2}")

    rng = rng_from(seed, "ensemble", kind, d1, d2)
    if kind == MASK:
        p = float(m_or_p)
        if not 0.0 < p <= 1.0:
            raise ValueError("mask probability must lie in (0, 1]")
        iu, ju = np.triu_indices(d1)
        keep = rng.random(iu.size) < p
        ui, uj = iu[keep], ju[keep]
        off = ui != uj
        rows = np.concatenate([ui, uj[off]])
        cols = np.concatenate([uj, ui[off]])
        order = np.lexsort((cols, rows))
        data = {"rows": rows[order].astype(np.int64),
                "cols": cols[order].astype(np.int64)}
        return MeasurementEnsemble(kind, d1, d2, rows.size, seed, data, prob=p)

    m = int(m_or_p)
    if m < 1:
        raise ValueError("measurement count must be positive")
    if kind == GAUSSIAN:
        data = {"mats": rng.standard_normal((m, d1, d2))}
    elif kind == QUADRATIC_I:
        data = {"p": rng.standard_normal((m, d1))}
    elif kind == QUADRATIC_II:
        data = {"p": rng.standard_normal((m, d1)),
                "p_tilde": rng.standard_normal((m, d1))}
    else:  # BILINEAR
        data = {"p": rng.standard_normal((m, d1)),
                "q": rng.standard_normal((m, d2))}
    return MeasurementEnsemble(kind, d1, d2, m, seed, data)


def explicit_ensemble(kind, *, testing=False, prob=None, **payload) -> MeasurementEnsemble:
    """Build an ensemble from an explicitly injected payload (tests only).

    Guarded by ``testing=True`` so production paths always go through
    :func:`make_ensemble` and stay reproducible from the seed tuple.
    """
    if not testing:
        raise ValueError("explicit payloads are test-only; pass testing=True")
    data = {k: np.ascontiguousarray(np.asarray(v, dtype=float)) for k, v in payload.items()}
    if kind == GAUSSIAN:
        m, d1, d2 = data["mats"].shape
    elif kind == QUADRATIC_I:
        m, d1 = data["p"].shape
        d2 = d1
    elif kind == QUADRATIC_II:
        m, d1 = data["p"].shape
        d2 = d1
        if data["p_tilde"].shape != (m, d1):
            raise ValueError("p and p_tilde shapes differ")
    elif kind == BILINEAR:
        m, d1 = data["p"].shape
        d2 = data["q"].shape[1]
        if data["q"].shape[0] != m:
            raise ValueError("p and q measurement counts differ")
    elif kind == MASK:
        rows = np.asarray(payload["rows"], dtype=np.int64)
        cols = np.asarray(payload["cols"], dtype=np.int64)
        d1 = d2 = int(max(rows.max(), cols.max())) + 1
        data = {"rows": rows, "cols": cols}
        m = rows.size
    else:
        raise ValueError(f"unknown ensemble kind {kind!r}")
    return MeasurementEnsemble(kind, d1, d2, m, _EXPLICIT_SEED, data, prob=prob)


def apply(ensemble, M) -> np.ndarray:
    """Evaluate A(M) for a full d1 x d2 matrix M."""
    M = np.asarray(M, dtype=float)
    if M.shape != (ensemble.d1, ensemble.d2):
        raise ValueError(f"matrix shape {M.shape} does not match "
                         f"({ensemble.d1}, {ensemble.d2})")
    k, data = ensemble.kind, ensemble.data
    if k == GAUSSIAN:
        return np.tensordot(data["mats"], M, axes=([1, 2], [0, 1]))
    if k == QUADRATIC_I:
        P = data["p"]
        return np.einsum("ij,ij->i", P @ M, P)
    if k == QUADRATIC_II:
        P, Pt = data["p"], data["p_tilde"]
        return np.einsum("ij,ij->i", P @ M, P) - np.einsum("ij,ij->i", Pt @ M, Pt)
    if k == BILINEAR:
        P, Q = data["p"], data["q"]
        return np.einsum("ij,ij->i", P @ M, Q)
    return M[data["rows"], data["cols"]]


def adjoint(ensemble, v) -> np.ndarray:
    """Evaluate A*(v) = sum_i v_i G_i as a dense d1 x d2 matrix."""
    v = np.asarray(v, dtype=float)
    if v.shape != (ensemble.m,):
        raise ValueError(f"vector length {v.shape} does not match m={ensemble.m}")
    k, data = ensemble.kind, ensemble.data
    if k == GAUSSIAN:
        return np.tensordot(v, data["mats"], axes=(0, 0))
    if k == QUADRATIC_I:
        P = data["p"]
        return P.T @ (v[:, None] * P)
    if k == QUADRATIC_II:
        P, Pt = data["p"], data["p_tilde"]
        return P.T @ (v[:, None] * P) - Pt.T @ (v[:, None] * Pt)
    if k == BILINEAR:
        P, Q = data["p"], data["q"]
        return P.T @ (v[:, None] * Q)
    G = np.zeros((ensemble.d1, ensemble.d2))
    G[data["rows"], data["cols"]] = v
    return G


def apply_factored(ensemble, L, R) -> np.ndarray:
    """Evaluate A(L R^T) without forming L R^T when the kind allows it.

    L is d1 x k, R is d2 x k.  Agrees with ``apply(ensemble, L @ R.T)``; the
    factored path costs O(m (d1 + d2) k) for the vector-payload kinds.
    """
    k, data = ensemble.kind, ensemble.data
    if k == GAUSSIAN:
        return np.tensordot(data["mats"], L @ R.T, axes=([1, 2], [0, 1]))
    if k == QUADRATIC_I:
        P = data["p"]
        return np.einsum("ij,ij->i", P @ L, P @ R)
    if k == QUADRATIC_II:
        P, Pt = data["p"], data["p_tilde"]
        return (np.einsum("ij,ij->i", P @ L, P @ R)
                - np.einsum("ij,ij->i", Pt @ L, Pt @ R))
    if k == BILINEAR:
        P, Q = data["p"], data["q"]
        return np.einsum("ij,ij->i", P @ L, Q @ R)
    return np.einsum("ij,ij->i", L[data["rows"]], R[data["cols"]])


def adjoint_right(ensemble, v, R) -> np.ndarray:
    """Evaluate A*(v) @ R (shape d1 x k) without materializing A*(v)."""
    k, data = ensemble.kind, ensemble.data
    if k == GAUSSIAN:
        return adjoint(ensemble, v) @ R
    if k == QUADRATIC_I:
        P = data["p"]
        return P.T @ (v[:, None] * (P @ R))
    if k == QUADRATIC_II:
        P, Pt = data["p"], data["p_tilde"]
        return P.T @ (v[:, None] * (P @ R)) - Pt.T @ (v[:, None] * (Pt @ R))
    if k == BILINEAR:
        P, Q = data["p"], data["q"]
        return P.T @ (v[:, None] * (Q @ R))
    return adjoint(ensemble, v) @ R


def adjoint_left(ensemble, v, L) -> np.ndarray:
    """Evaluate A*(v)^T @ L (shape d2 x k) without materializing A*(v)."""
    k, data = ensemble.kind, ensemble.data
    if k in (QUADRATIC_I, QUADRATIC_II):
        return adjoint_right(ensemble, v, L)  # A*(v) is symmetric
    if k == GAUSSIAN:
        return adjoint(ensemble, v).T @ L
    if k == BILINEAR:
        P, Q = data["p"], data["q"]
        return Q.T @ (v[:, None] * (P @ L))
    return adjoint(ensemble, v).T @ L


@dataclass(frozen=True)
class AdditiveGaussian:
    """Outliers b_i = clean_i + sigma * g_i on the corrupted set."""
    sigma: float = 1.0


@dataclass(frozen=True)
class ReplaceGaussian:
    """Outliers b_i = sigma * g_i, discarding the clean value."""
    sigma: float = 1.0


@dataclass(frozen=True)
class ScaledNoise:
    """Dense Gaussian noise rescaled to ||e||_2 = delta * sigma_r(X_sharp)."""
    delta: float


@dataclass(frozen=True)
class Observation:
    """Corrupted measurement vector together with its generation record."""
    b: np.ndarray
    outliers: np.ndarray  # sorted indices into [m]
    noise: np.ndarray
    p_fail: float
    clean: np.ndarray

    def __post_init__(self):
        for arr in (self.b, self.outliers, self.noise, self.clean):
            arr.setflags(write=False)


def observe(ensemble, m_sharp, p_fail=0.0, outlier_model=None,
            dense_noise=None, rank=None, seed=0) -> Observation:
    """Generate corrupted measurements of the ground-truth matrix.

    A fraction p_fail in [0, 1/2) of the indices is drawn uniformly without
    replacement and corrupted per ``outlier_model``; optional dense noise is
    drawn Gaussian and rescaled to ||e||_2 = delta * sigma_r(X_sharp), where
    sigma_r(X_sharp) = sqrt(sigma_r(M_sharp)) requires ``rank``.
    """
    if not 0.0 <= p_fail < 0.5:
        raise ValueError("p_fail must lie in [0, 1/2)")
    clean = apply(ensemble, m_sharp)
    m = ensemble.m
    rng = rng_from(seed, "observe", ensemble.kind, m)

    n_out = int(round(p_fail * m))
    outliers = np.sort(rng.choice(m, size=n_out, replace=False)) if n_out else \
        np.empty(0, dtype=np.int64)
    b = clean.copy()
    if n_out:
        if outlier_model is None:
            outlier_model = AdditiveGaussian()
        g = rng.standard_normal(n_out)
        if isinstance(outlier_model, AdditiveGaussian):
            b[outliers] += outlier_model.sigma * g
        elif isinstance(outlier_model, ReplaceGaussian):
            b[outliers] = outlier_model.sigma * g
        else:
            raise ValueError(f"unknown outlier model {outlier_model!r}")

    noise = np.zeros(m)
    if dense_noise is not None and dense_noise.delta > 0:
        if rank is None:
            raise ValueError("dense noise scaling needs the ground-truth rank")
        sigma_r = np.sqrt(np.linalg.svd(np.asarray(m_sharp, dtype=float),
                                        compute_uv=False)[rank - 1])
        g = rng.standard_normal(m)
        noise = g * (dense_noise.delta * sigma_r / np.linalg.norm(g))
        b = b + noise

    return Observation(b=b, outliers=outliers, noise=noise,
                       p_fail=float(p_fail), clean=clean)
