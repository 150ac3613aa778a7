"""Decision variables as tagged blocks of matrices with Euclidean vector ops.

Inner products and norms are blockwise-Euclidean, e.g. the asymmetric pair
satisfies ||(X, Y)||^2 = ||X||_F^2 + ||Y||_F^2, matching the product-space
distance used throughout.
"""

from __future__ import annotations

import numpy as np


class Point:
    """Base class; subclasses define the block structure."""

    __slots__ = ()

    def _blocks(self):
        raise NotImplementedError

    def _wrap(self, blocks):
        raise NotImplementedError

    def __add__(self, other):
        return self._wrap([a + b for a, b in zip(self._blocks(), other._blocks())])

    def __sub__(self, other):
        return self._wrap([a - b for a, b in zip(self._blocks(), other._blocks())])

    def __mul__(self, t):
        t = float(t)
        return self._wrap([t * a for a in self._blocks()])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def dot(self, other) -> float:
        return float(sum(np.vdot(a, b) for a, b in zip(self._blocks(), other._blocks())))

    def norm(self) -> float:
        return np.sqrt(self.dot(self))

    def copy(self):
        return self._wrap([a.copy() for a in self._blocks()])

    def zeros_like(self):
        return self._wrap([np.zeros_like(a) for a in self._blocks()])


class SymPoint(Point):
    """Symmetric factor X (d x r); the candidate matrix is X X^T."""

    __slots__ = ("x",)

    def __init__(self, x):
        self.x = np.asarray(x, dtype=float)

    def _blocks(self):
        return (self.x,)

    def _wrap(self, blocks):
        return SymPoint(blocks[0])

    def __repr__(self):
        return f"SymPoint(x: {self.x.shape})"


class AsymPoint(Point):
    """Factor pair (X: d1 x r, Y: r x d2); the candidate matrix is X Y."""

    __slots__ = ("x", "y")

    def __init__(self, x, y):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)

    def _blocks(self):
        return (self.x, self.y)

    def _wrap(self, blocks):
        return AsymPoint(blocks[0], blocks[1])

    def __repr__(self):
        return f"AsymPoint(x: {self.x.shape}, y: {self.y.shape})"


class FactorSparsePoint(Point):
    """Factor plus sparse pair (X: d x r, S: d x d) for robust PCA."""

    __slots__ = ("x", "s")

    def __init__(self, x, s):
        self.x = np.asarray(x, dtype=float)
        self.s = np.asarray(s, dtype=float)

    def _blocks(self):
        return (self.x, self.s)

    def _wrap(self, blocks):
        return FactorSparsePoint(blocks[0], blocks[1])

    def __repr__(self):
        return f"FactorSparsePoint(x: {self.x.shape}, s: {self.s.shape})"
