"""Deterministic stream derivation for reproducible (and parallel) runs."""

import hashlib
import struct

import numpy as np

_MASK64 = (1 << 64) - 1


def child_seed(base_seed: int, *tags) -> int:
    """Derive a 64-bit stream key from a base seed and a tuple of tags.

    Tags may be ints or strings.  Unlike the builtin ``hash``, the result is
    stable across processes and interpreter restarts, so worker pools and
    re-runs see identical streams.
    """
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack("<Q", int(base_seed) & _MASK64))
    for tag in tags:
        if isinstance(tag, str):
            h.update(b"s")
            h.update(tag.encode())
        elif isinstance(tag, (int, np.integer)):
            h.update(b"i")
            h.update(struct.pack("<q", int(tag)))
        else:
            raise TypeError(f"seed tags must be int or str, got {tag!r}")
    return int.from_bytes(h.digest(), "little")


def rng_from(base_seed: int, *tags) -> np.random.Generator:
    """Counter-based generator on an independent stream keyed by the tags."""
    return np.random.Generator(np.random.Philox(key=child_seed(base_seed, *tags)))
