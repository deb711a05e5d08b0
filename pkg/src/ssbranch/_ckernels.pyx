# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled growth kernels.

Same contracts as _pykernels (see there for the law packing and node
stream conventions).  Per-node bookkeeping runs in C; transcendental
math (log, pow) goes through numpy ufuncs on whole sweeps so output is
bit-identical to the fallback.
"""

import numpy as np

from libc.stdint cimport int64_t, uint64_t

from .errors import CapExceeded

BACKEND_NAME = "c"

cdef uint64_t GOLDEN = <uint64_t>0x9E3779B97F4A7C15u
cdef uint64_t SALT = <uint64_t>0x3C6EF372FE94F82Au
cdef double U53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9u
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EBu
    return z ^ (z >> 31)


cdef inline uint64_t _child_hash(uint64_t h, uint64_t i) nogil:
    return _mix64((h + i * GOLDEN) ^ SALT)


cdef inline double _uniform(uint64_t h, uint64_t k) nogil:
    cdef uint64_t z = _mix64(h + (k + 1) * GOLDEN)
    return (<double>(z >> 11) + 0.5) * U53


cdef inline int64_t _component(const double[::1] cum, double u) nogil:
    # np.searchsorted(cum, u, side="right"), clipped to the last slot
    cdef int64_t i = 0
    cdef int64_t n = cum.shape[0]
    while i < n and cum[i] <= u:
        i += 1
    if i > n - 1:
        i = n - 1
    return i


def _expand(int kind, const double[::1] cum, const int64_t[::1] offs,
            const double[::1] atoms, const double[::1] sizes,
            const uint64_t[::1] hashes):
    """Children of a batch: (child_sizes, child_hashes, parent_idx)."""
    cdef int64_t n = sizes.shape[0]
    cdef int64_t i, j, c, tot, pos, k
    comp_np = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] comp = comp_np
    cdef double u
    tot = 0
    if kind == 0:
        k = offs[1] - offs[0]
        for i in range(n):
            comp[i] = 0
        tot = n * k
    elif kind == 1:
        tot = 2 * n
    else:
        for i in range(n):
            u = _uniform(hashes[i], 1)
            c = _component(cum, u)
            comp[i] = c
            tot += offs[c + 1] - offs[c]
    csizes_np = np.empty(tot, dtype=np.float64)
    chashes_np = np.empty(tot, dtype=np.uint64)
    parent_np = np.empty(tot, dtype=np.int64)
    cdef double[::1] csizes = csizes_np
    cdef uint64_t[::1] chashes = chashes_np
    cdef int64_t[::1] parent = parent_np
    cdef int64_t w = 0
    cdef int64_t nc
    cdef double s, ru
    if kind == 1:
        for i in range(n):
            ru = _uniform(hashes[i], 1)
            s = sizes[i]
            csizes[w] = s * ru
            chashes[w] = _child_hash(hashes[i], 1)
            parent[w] = i
            w += 1
            csizes[w] = s * (1.0 - ru)
            chashes[w] = _child_hash(hashes[i], 2)
            parent[w] = i
            w += 1
    else:
        for i in range(n):
            c = comp[i] if kind == 2 else 0
            nc = offs[c + 1] - offs[c]
            s = sizes[i]
            for j in range(nc):
                csizes[w] = s * atoms[offs[c] + j]
                chashes[w] = _child_hash(hashes[i], <uint64_t>(j + 1))
                parent[w] = i
                w += 1
    return csizes_np, chashes_np, parent_np


def cascade_stats(int kind, cum_in, offs_in, atoms_in, roots_in, hashes_in,
                  int n_gens, powers_in, int64_t cap):
    cum_np = np.ascontiguousarray(cum_in, dtype=np.float64)
    offs_np = np.ascontiguousarray(offs_in, dtype=np.int64)
    atoms_np = np.ascontiguousarray(atoms_in, dtype=np.float64)
    powers_np = np.ascontiguousarray(powers_in, dtype=np.float64)
    cdef double[::1] cum = cum_np
    cdef int64_t[::1] offs = offs_np
    cdef double[::1] atoms = atoms_np
    cdef int64_t nrep = roots_in.shape[0]
    cdef int64_t npow = powers_np.shape[0]
    counts_np = np.zeros((nrep, n_gens + 1), dtype=np.int64)
    msums_np = np.zeros((nrep, npow, n_gens + 1), dtype=np.float64)
    cdef int64_t[:, ::1] counts = counts_np
    cdef double[:, :, ::1] msums = msums_np
    realized_np = np.ones(nrep, dtype=np.int64)
    cdef int64_t[::1] realized = realized_np
    sizes_np = np.ascontiguousarray(roots_in, dtype=np.float64).copy()
    hashes_np = np.ascontiguousarray(hashes_in, dtype=np.uint64).copy()
    owner_np = np.arange(nrep, dtype=np.int64)
    counts_np[:, 0] = 1
    cdef int64_t j, g, i, m
    for j in range(npow):
        msums_np[:, j, 0] = np.power(sizes_np, powers_np[j])
    cdef int64_t[::1] owner
    cdef double[::1] w
    cdef int64_t maxreal
    for g in range(1, n_gens + 1):
        if sizes_np.shape[0] == 0:
            break
        sizes_np, hashes_np, parent_np = _expand(
            kind, cum, offs, atoms, sizes_np, hashes_np)
        owner_np = owner_np[parent_np]
        m = sizes_np.shape[0]
        if m == 0:
            break
        owner = owner_np
        maxreal = 0
        for i in range(m):
            realized[owner[i]] += 1
        for i in range(nrep):
            if realized[i] > maxreal:
                maxreal = realized[i]
        if maxreal > cap:
            raise CapExceeded(
                f"replica exceeded node cap {cap} at generation {g}")
        for i in range(m):
            counts[owner[i], g] += 1
        for j in range(npow):
            w_np = np.power(sizes_np, powers_np[j])
            w = w_np
            for i in range(m):
                msums[owner[i], j, g] += w[i]
    return counts_np, msums_np


def time_stats(int kind, cum_in, offs_in, atoms_in, roots_in, hashes_in,
               births_in, owners_in, int64_t n_owners, double alpha,
               t_grid_in, powers_in, int64_t cap, collect_in):
    cum_np = np.ascontiguousarray(cum_in, dtype=np.float64)
    offs_np = np.ascontiguousarray(offs_in, dtype=np.int64)
    atoms_np = np.ascontiguousarray(atoms_in, dtype=np.float64)
    powers_np = np.ascontiguousarray(powers_in, dtype=np.float64)
    t_grid_np = np.ascontiguousarray(t_grid_in, dtype=np.float64)
    cdef double[::1] cum = cum_np
    cdef int64_t[::1] offs = offs_np
    cdef double[::1] atoms = atoms_np
    cdef double[::1] t_grid = t_grid_np
    cdef int collect = 1 if collect_in else 0
    cdef int64_t tn = t_grid_np.shape[0]
    cdef int64_t npow = powers_np.shape[0]
    cdef double t_max = t_grid[tn - 1]
    counts_np = np.zeros((n_owners, tn), dtype=np.int64)
    msums_np = np.zeros((n_owners, npow, tn), dtype=np.float64)
    largest_np = np.zeros((n_owners, tn), dtype=np.float64)
    cdef int64_t[:, ::1] counts = counts_np
    cdef double[:, :, ::1] msums = msums_np
    cdef double[:, ::1] largest = largest_np
    atom_sizes = [[] for _ in range(tn)]
    atom_owners = [[] for _ in range(tn)]
    sizes_np = np.ascontiguousarray(roots_in, dtype=np.float64).copy()
    hashes_np = np.ascontiguousarray(hashes_in, dtype=np.uint64).copy()
    births_np = np.ascontiguousarray(births_in, dtype=np.float64).copy()
    owner_np = np.ascontiguousarray(owners_in, dtype=np.int64).copy()
    realized_np = np.bincount(owner_np, minlength=n_owners).astype(np.int64)
    cdef int64_t[::1] realized = realized_np
    cdef int64_t n, i, j, ti, nalive, m, nspawn
    cdef double t
    cdef double[::1] sizes, births, death, logu, spow
    cdef uint64_t[::1] hashes
    cdef int64_t[::1] owner
    while sizes_np.shape[0]:
        n = sizes_np.shape[0]
        m = 0
        for i in range(n_owners):
            if realized[i] > m:
                m = realized[i]
        if m > cap:
            raise CapExceeded(f"owner exceeded node cap {cap}")
        sizes = sizes_np
        hashes = hashes_np
        births = births_np
        owner = owner_np
        u0_np = np.empty(n, dtype=np.float64)
        _fill_uniform0(hashes, u0_np)
        logu_np = np.log(u0_np)
        spow_np = np.power(sizes_np, -alpha)
        logu = logu_np
        spow = spow_np
        death_np = np.empty(n, dtype=np.float64)
        death = death_np
        for i in range(n):
            death[i] = births[i] + (-logu[i]) * spow[i]
        for ti in range(tn):
            t = t_grid[ti]
            nalive = 0
            for i in range(n):
                if births[i] <= t and t < death[i]:
                    nalive += 1
            if nalive == 0:
                continue
            al_sz_np = np.empty(nalive, dtype=np.float64)
            al_ow_np = np.empty(nalive, dtype=np.int64)
            _gather_alive(sizes, births, death, owner, t, al_sz_np, al_ow_np)
            _acc_counts(counts, al_ow_np, ti)
            for j in range(npow):
                wpow_np = np.power(al_sz_np, powers_np[j])
                # per-sweep subtotal first, to match the fallback's
                # "msums += bincount(...)" rounding exactly
                tmp_np = np.zeros(n_owners, dtype=np.float64)
                _acc_bin(tmp_np, al_ow_np, wpow_np)
                msums_np[:, j, ti] += tmp_np
            _acc_largest(largest, al_ow_np, al_sz_np, ti)
            if collect:
                atom_sizes[ti].append(al_sz_np)
                atom_owners[ti].append(al_ow_np)
        # spawn children of nodes dying within the grid
        nspawn = 0
        for i in range(n):
            if death[i] <= t_max:
                nspawn += 1
        if nspawn == 0:
            break
        sp_sizes_np = np.empty(nspawn, dtype=np.float64)
        sp_hashes_np = np.empty(nspawn, dtype=np.uint64)
        sp_death_np = np.empty(nspawn, dtype=np.float64)
        sp_owner_np = np.empty(nspawn, dtype=np.int64)
        _gather_spawn(sizes, hashes, death, owner, t_max,
                      sp_sizes_np, sp_hashes_np, sp_death_np, sp_owner_np)
        csizes_np, chashes_np, parent_np = _expand(
            kind, cum, offs, atoms, sp_sizes_np, sp_hashes_np)
        births_np = sp_death_np[parent_np]
        owner_np = sp_owner_np[parent_np]
        sizes_np = csizes_np
        hashes_np = chashes_np
        m = sizes_np.shape[0]
        if m:
            owner = owner_np
            for i in range(m):
                realized[owner[i]] += 1
    out_sizes = [np.concatenate(x) if x else np.empty(0) for x in atom_sizes]
    out_owners = [np.concatenate(x) if x else np.empty(0, dtype=np.int64)
                  for x in atom_owners]
    return counts_np, msums_np, largest_np, out_sizes, out_owners


def _fill_uniform0(const uint64_t[::1] hashes, u_out):
    cdef double[::1] u = u_out
    cdef int64_t i
    for i in range(hashes.shape[0]):
        u[i] = _uniform(hashes[i], 0)


def _gather_alive(const double[::1] sizes, const double[::1] births,
                  const double[::1] death, const int64_t[::1] owner,
                  double t, sz_out, ow_out):
    cdef double[::1] sz = sz_out
    cdef int64_t[::1] ow = ow_out
    cdef int64_t i, w = 0
    for i in range(sizes.shape[0]):
        if births[i] <= t and t < death[i]:
            sz[w] = sizes[i]
            ow[w] = owner[i]
            w += 1


def _gather_spawn(const double[::1] sizes, const uint64_t[::1] hashes,
                  const double[::1] death, const int64_t[::1] owner,
                  double t_max, sz_out, h_out, d_out, ow_out):
    cdef double[::1] sz = sz_out
    cdef uint64_t[::1] hh = h_out
    cdef double[::1] dd = d_out
    cdef int64_t[::1] ow = ow_out
    cdef int64_t i, w = 0
    for i in range(sizes.shape[0]):
        if death[i] <= t_max:
            sz[w] = sizes[i]
            hh[w] = hashes[i]
            dd[w] = death[i]
            ow[w] = owner[i]
            w += 1


def _acc_counts(int64_t[:, ::1] counts, ow_in, int64_t ti):
    cdef int64_t[::1] ow = ow_in
    cdef int64_t i
    for i in range(ow.shape[0]):
        counts[ow[i], ti] += 1


def _acc_bin(tmp_in, ow_in, w_in):
    cdef double[::1] tmp = tmp_in
    cdef int64_t[::1] ow = ow_in
    cdef double[::1] w = w_in
    cdef int64_t i
    for i in range(ow.shape[0]):
        tmp[ow[i]] += w[i]


def _acc_largest(double[:, ::1] largest, ow_in, sz_in, int64_t ti):
    cdef int64_t[::1] ow = ow_in
    cdef double[::1] sz = sz_in
    cdef int64_t i
    for i in range(ow.shape[0]):
        if sz[i] > largest[ow[i], ti]:
            largest[ow[i], ti] = sz[i]
