import numpy as np
import pytest

from lowrank import composite, operators as ops
from lowrank.points import AsymPoint, FactorSparsePoint, SymPoint


def finite_difference_gradient(fn, pt, step=1e-6):
    """Central differences of a scalar function over every block entry."""
    blocks = [b.copy() for b in pt._blocks()]
    grads = []
    for bi, block in enumerate(blocks):
        g = np.zeros_like(block)
        it = np.nditer(block, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = block[idx]
            block[idx] = orig + step
            fp = fn(pt._wrap(blocks))
            block[idx] = orig - step
            fm = fn(pt._wrap(blocks))
            block[idx] = orig
            g[idx] = (fp - fm) / (2 * step)
        grads.append(g)
    return pt._wrap(grads)


def random_point_like(pt, rng, scale=1.0):
    return pt._wrap([scale * rng.standard_normal(b.shape) for b in pt._blocks()])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def all_kind_ensembles(seed=3):
    """One small ensemble per kind, for identity-style property tests."""
    return [
        ops.make_ensemble(ops.GAUSSIAN, 5, 4, 12, seed),
        ops.make_ensemble(ops.QUADRATIC_I, 6, 6, 15, seed),
        ops.make_ensemble(ops.QUADRATIC_II, 6, 6, 15, seed),
        ops.make_ensemble(ops.BILINEAR, 5, 4, 12, seed),
        ops.make_ensemble(ops.MASK, 6, 6, 0.6, seed),
    ]
