"""Vectorized (numpy) growth kernels.

Fallback implementation of the hot simulation loops; the compiled
extension in _ckernels.pyx implements the same contracts and must
produce bit-identical output (all transcendental math is routed through
numpy ufuncs in both, and per-node randomness is counter-based, so
traversal order cannot matter).

Law packing (see kernels.pack_law): ``kind`` 0 = fixed ratio vector
(no draw), 1 = uniform binary split (one uniform), 2 = discrete mixture
(one uniform).  ``cum`` are cumulative component probabilities, ``offs``
component offsets into the flat ``atoms`` ratio array.

Node stream contract: variate 0 is the lifetime exponential, variate 1
the reproduction draw; child i (1-based) hashes from its parent via
rngstream.child_hash.
"""

from __future__ import annotations

import numpy as np

from .errors import CapExceeded
from .rngstream import child_hash_vec, uniform_vec

BACKEND_NAME = "python"


def _children(kind, cum, offs, atoms, sizes, hashes):
    """All children of the batch: (child_sizes, child_hashes, parent_idx)."""
    n = sizes.size
    empty = (np.empty(0), np.empty(0, np.uint64), np.empty(0, np.int64))
    if n == 0:
        return empty
    if kind == 0:
        k = int(offs[1] - offs[0])
        parent = np.repeat(np.arange(n, dtype=np.int64), k)
        pos = np.tile(np.arange(k, dtype=np.int64), n)
        csizes = sizes[parent] * atoms[pos]
    elif kind == 1:
        u = uniform_vec(hashes, 1)
        parent = np.repeat(np.arange(n, dtype=np.int64), 2)
        pos = np.tile(np.arange(2, dtype=np.int64), n)
        ratios = np.empty(2 * n)
        ratios[0::2] = u
        ratios[1::2] = 1.0 - u
        csizes = sizes[parent] * ratios
    elif kind == 2:
        u = uniform_vec(hashes, 1)
        comp = np.searchsorted(cum, u, side="right")
        comp = np.minimum(comp, cum.size - 1)
        nc = offs[comp + 1] - offs[comp]
        tot = int(nc.sum())
        if tot == 0:
            return empty
        parent = np.repeat(np.arange(n, dtype=np.int64), nc)
        start = np.concatenate(([0], np.cumsum(nc)[:-1]))
        pos = np.arange(tot, dtype=np.int64) - np.repeat(start, nc)
        aidx = offs[comp][parent] + pos
        csizes = sizes[parent] * atoms[aidx]
    else:
        raise ValueError(f"unknown law kind {kind}")
    chashes = child_hash_vec(hashes[parent], pos + 1)
    return csizes, chashes, parent


def cascade_stats(kind, cum, offs, atoms, root_sizes, root_hashes,
                  n_gens, powers, cap):
    """Generation-by-generation cascade over independent replicas.

    Returns (counts, msums) with counts[r, g] the number of generation-g
    individuals of replica r and msums[r, j, g] their powers[j]-power
    sum.  Lifetimes are never drawn (generation quantities do not depend
    on them); the lifetime variate slot stays reserved so the same seed
    grows the same tree here and in time-based growth.
    """
    root_sizes = np.asarray(root_sizes, dtype=np.float64)
    root_hashes = np.asarray(root_hashes, dtype=np.uint64)
    nrep = root_sizes.size
    npow = len(powers)
    counts = np.zeros((nrep, n_gens + 1), dtype=np.int64)
    msums = np.zeros((nrep, npow, n_gens + 1))
    sizes, hashes = root_sizes.copy(), root_hashes.copy()
    owner = np.arange(nrep, dtype=np.int64)
    counts[:, 0] = 1
    for j, p in enumerate(powers):
        msums[:, j, 0] = np.power(sizes, p)
    realized = np.ones(nrep, dtype=np.int64)
    for g in range(1, n_gens + 1):
        sizes, hashes, parent = _children(kind, cum, offs, atoms,
                                          sizes, hashes)
        owner = owner[parent]
        if sizes.size == 0:
            break
        realized += np.bincount(owner, minlength=nrep)
        if realized.max() > cap:
            raise CapExceeded(
                f"replica exceeded node cap {cap} at generation {g}")
        counts[:, g] = np.bincount(owner, minlength=nrep)
        for j, p in enumerate(powers):
            msums[:, j, g] = np.bincount(owner, weights=np.power(sizes, p),
                                         minlength=nrep)
    return counts, msums


def time_stats(kind, cum, offs, atoms, root_sizes, root_hashes, root_births,
               owners, n_owners, alpha, t_grid, powers, cap, collect):
    """Grow each root in continuous time and snapshot at the grid times.

    An individual of size x lives an Exp(x^alpha) lifetime and is alive
    on [birth, death).  Returns per-owner per-time atom counts, power
    sums, and largest atom, plus (when ``collect``) the flat alive atom
    sizes and their owners for each grid time.
    """
    sizes = np.asarray(root_sizes, dtype=np.float64).copy()
    hashes = np.asarray(root_hashes, dtype=np.uint64).copy()
    births = np.asarray(root_births, dtype=np.float64).copy()
    owner = np.asarray(owners, dtype=np.int64).copy()
    t_grid = np.asarray(t_grid, dtype=np.float64)
    tn = t_grid.size
    npow = len(powers)
    t_max = t_grid[-1]
    counts = np.zeros((n_owners, tn), dtype=np.int64)
    msums = np.zeros((n_owners, npow, tn))
    largest = np.zeros((n_owners, tn))
    atom_sizes = [[] for _ in range(tn)]
    atom_owners = [[] for _ in range(tn)]
    realized = np.bincount(owner, minlength=n_owners)
    while sizes.size:
        if realized.max() > cap:
            raise CapExceeded(f"owner exceeded node cap {cap}")
        u0 = uniform_vec(hashes, 0)
        life = (-np.log(u0)) * np.power(sizes, -alpha)
        death = births + life
        for ti in range(tn):
            t = t_grid[ti]
            alive = (births <= t) & (t < death)
            if not alive.any():
                continue
            ow = owner[alive]
            sz = sizes[alive]
            counts[:, ti] += np.bincount(ow, minlength=n_owners)
            for j, p in enumerate(powers):
                msums[:, j, ti] += np.bincount(ow, weights=np.power(sz, p),
                                               minlength=n_owners)
            np.maximum.at(largest[:, ti], ow, sz)
            if collect:
                atom_sizes[ti].append(sz.copy())
                atom_owners[ti].append(ow.copy())
        spawn = death <= t_max
        csizes, chashes, parent = _children(kind, cum, offs, atoms,
                                            sizes[spawn], hashes[spawn])
        births = death[spawn][parent]
        owner = owner[spawn][parent]
        sizes, hashes = csizes, chashes
        if sizes.size:
            realized = realized + np.bincount(owner, minlength=n_owners)
    out_sizes = [np.concatenate(x) if x else np.empty(0) for x in atom_sizes]
    out_owners = [np.concatenate(x) if x else np.empty(0, np.int64)
                  for x in atom_owners]
    return counts, msums, largest, out_sizes, out_owners
