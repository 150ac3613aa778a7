"""Residual penalties h: values, subgradient selections, and proximal maps.

At kinks we pick sign(0) = 0 for l1-type penalties and the zero element at
zero residual for the norm penalties, so the ground truth is a fixed point of
subgradient methods.  ``squared-l2`` exists only for the smooth baselines.
"""

from __future__ import annotations

import numpy as np

SCALED_L1 = "scaled-l1"        # h(z) = ||z||_1 / m
SCALED_L2 = "scaled-l2"        # h(z) = ||z||_2 / sqrt(m)
FROBENIUS = "frobenius"        # h(z) = ||z||_2
SQUARED_L2 = "squared-l2"      # h(z) = ||z||_2^2 / m
ENTRYWISE_L1 = "entrywise-l1"  # h(z) = ||z||_1

PENALTIES = (SCALED_L1, SCALED_L2, FROBENIUS, SQUARED_L2, ENTRYWISE_L1)
SMOOTH = (SQUARED_L2,)


def value(kind, z) -> float:
    z = np.asarray(z)
    m = z.size
    if kind == SCALED_L1:
        return float(np.abs(z).sum() / m)
    if kind == SCALED_L2:
        return float(np.linalg.norm(z) / np.sqrt(m))
    if kind == FROBENIUS:
        return float(np.linalg.norm(z))
    if kind == SQUARED_L2:
        return float(z @ z / m)
    if kind == ENTRYWISE_L1:
        return float(np.abs(z).sum())
    raise ValueError(f"unknown penalty {kind!r}")


def subgradient(kind, z, kink_tol=0.0) -> np.ndarray:
    """A subgradient of h at z (the gradient where h is smooth).

    ``kink_tol`` widens the kink selection to entries within floating-point
    noise of zero, so residuals that are analytically zero but numerically
    ~1e-13 still pick the zero element.
    """
    z = np.asarray(z)
    m = z.size
    if kind == SCALED_L1 or kind == ENTRYWISE_L1:
        s = np.sign(z)
        if kink_tol > 0:
            s[np.abs(z) <= kink_tol] = 0.0
        return s / m if kind == SCALED_L1 else s
    if kind == SCALED_L2 or kind == FROBENIUS:
        n = np.linalg.norm(z)
        if n <= kink_tol * np.sqrt(m) or n == 0.0:
            return np.zeros_like(z)
        return z / (np.sqrt(m) * n) if kind == SCALED_L2 else z / n
    if kind == SQUARED_L2:
        return 2.0 * z / m
    raise ValueError(f"unknown penalty {kind!r}")


def _soft(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def _block_soft(v, t):
    n = np.linalg.norm(v)
    if n <= t:
        return np.zeros_like(v)
    return v * (1.0 - t / n)


def prox(kind, v, t) -> np.ndarray:
    """Proximal map of t*h at v, closed form for every penalty kind."""
    v = np.asarray(v)
    m = v.size
    if kind == SCALED_L1:
        return _soft(v, t / m)
    if kind == SCALED_L2:
        return _block_soft(v, t / np.sqrt(m))
    if kind == FROBENIUS:
        return _block_soft(v, t)
    if kind == SQUARED_L2:
        return v / (1.0 + 2.0 * t / m)
    if kind == ENTRYWISE_L1:
        return _soft(v, t)
    raise ValueError(f"unknown penalty {kind!r}")
