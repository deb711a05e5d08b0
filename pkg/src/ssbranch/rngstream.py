"""Counter-based random streams keyed by tree node.

Every node of a simulated tree gets its own stream derived from the tree
seed and the node's label path, so a tree is a pure function of its seed:
growth order, lazy materialization, and worker scheduling cannot change
it.  The same construction is implemented three ways with identical
output bits: scalar Python (object-level trees), vectorized numpy
(batched kernels), and C (the compiled kernel).

Construction: splitmix64.  A node with hash ``h`` draws its k-th variate
by finalizing ``h + (k+1)*GOLDEN``; child ``i`` (1-based) of ``h`` has
hash ``finalize(h + i*GOLDEN ^ CHILD_SALT)``.  Uniforms take the top 53
bits offset by half an ulp so they lie strictly inside (0, 1).
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
CHILD_SALT = 0x3C6EF372FE94F82A

_U64 = np.uint64
_GOLDEN64 = _U64(GOLDEN)
_SALT64 = _U64(CHILD_SALT)


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def tree_hash(seed: int) -> int:
    """Root hash for a tree with the given seed."""
    return mix64((seed & MASK64) + GOLDEN)


def child_hash(h: int, i: int) -> int:
    """Hash of the i-th child (i >= 1) of a node with hash h."""
    return mix64(((h + (i * GOLDEN)) & MASK64) ^ CHILD_SALT)


def node_hash(seed: int, label: tuple[int, ...]) -> int:
    h = tree_hash(seed)
    for i in label:
        h = child_hash(h, i)
    return h


def uniform(h: int, k: int) -> float:
    """k-th uniform variate (strictly inside (0,1)) of the node stream h."""
    z = mix64(h + (k + 1) * GOLDEN)
    return ((z >> 11) + 0.5) * 2.0 ** -53


def exponential(h: int, k: int) -> float:
    """k-th variate of stream h mapped to a unit-mean exponential.

    Routed through np.log (not math.log): numpy's scalar and array log
    agree bitwise, so scalar tree growth, the vectorized kernel, and the
    compiled kernel all see identical lifetimes.
    """
    return float(-np.log(uniform(h, k)))


# vectorized counterparts; uint64 overflow wraps, which is intended


def _mix64_vec(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _U64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> _U64(27))) * _U64(0x94D049BB133111EB)
        return z ^ (z >> _U64(31))


def child_hash_vec(h, i):
    """Vectorized child_hash; h uint64 array, i int array or scalar (1-based)."""
    with np.errstate(over="ignore"):
        base = (h + np.asarray(i, dtype=np.uint64) * _GOLDEN64) ^ _SALT64
    return _mix64_vec(base)


def uniform_vec(h, k):
    """Vectorized uniform; k may be a scalar counter or an array."""
    with np.errstate(over="ignore"):
        z = _mix64_vec(h + (np.asarray(k, dtype=np.uint64) + _U64(1)) * _GOLDEN64)
    return ((z >> _U64(11)).astype(np.float64) + 0.5) * 2.0 ** -53


def replica_seed(seed: int, index: int) -> int:
    """Derived seed for one replica of a batch; stable under scheduling."""
    return mix64(mix64((seed & MASK64) ^ 0xA5A5A5A5A5A5A5A5) + index * GOLDEN)


def replica_root_hashes(seed: int, start: int, n: int) -> np.ndarray:
    """tree_hash(replica_seed(seed, i)) for i in [start, start+n), vectorized."""
    base = _U64(mix64((seed & MASK64) ^ 0xA5A5A5A5A5A5A5A5))
    idx = np.arange(start, start + n, dtype=np.uint64)
    with np.errstate(over="ignore"):
        seeds = _mix64_vec(base + idx * _GOLDEN64)
        return _mix64_vec(seeds + _GOLDEN64)
