"""Marked genealogical trees grown lazily from a seed.

A tree realizes nodes u with marks (size, birth, lifetime).  Labels are
tuples of positive ints in genealogical order: () is the root and
u + (i,) the i-th daughter of u.  Each node's randomness comes from a
counter stream keyed by (tree seed, label), so the same seed always
grows the same tree no matter how much of it, or in which order, is
materialized:

* lifetime = size^(-alpha) * Exp(1), drawn as the node's variate 0;
* daughter ratios are the law's draw from the node's stream (variate 1
  onward); daughters are born at their mother's death.

Two growth modes: by generation (every node of generations 0..n) and by
time horizon (every node born up to the horizon).  Batch statistics over
many replicas delegate to the selected growth kernel (compiled if
available) and agree node-for-node with object-level growth.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import kernels, replaw, rngstream
from .errors import CapExceeded, ConfigError, InvalidLine, NotGrown
from .measures import FinitePointMeasure

__all__ = [
    "Label",
    "MarkedNode",
    "MarkedTree",
    "grow_to_generation",
    "grow_to_time",
    "martingale_generation_sample",
    "population_time_sample",
    "DEFAULT_CAP",
]

Label = tuple  # tuple of ints; () is the root
DEFAULT_CAP = 10 ** 7


@dataclass(frozen=True)
class MarkedNode:
    label: Label
    size: float
    birth: float
    lifetime: float

    @property
    def death(self) -> float:
        return self.birth + self.lifetime

    @property
    def generation(self) -> int:
        return len(self.label)


def _validate_params(alpha, x, cap):
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha)):
        raise ConfigError("alpha must be a finite real")
    if alpha < 0:
        raise ConfigError("alpha must be nonnegative")
    if not (x > 0 and math.isfinite(x)):
        raise ConfigError("root size must be finite and positive")
    if not cap >= 1:
        raise ConfigError("node cap must be at least 1")


class MarkedTree:
    """Realized portion of one branching tree.

    Construct through :func:`grow_to_generation` or
    :func:`grow_to_time`.  Nodes are exposed as a dict keyed by label;
    dead ancestors stay in the store (snapshots at earlier times need
    them).
    """

    def __init__(self, law, alpha, root_size, seed, cap, mode, bound):
        self.law = law
        self.alpha = float(alpha)
        self.root_size = float(root_size)
        self.seed = int(seed)
        self.cap = int(cap)
        self.mode = mode            # "generation" | "time"
        self.bound = bound          # generation n or horizon T
        self.nodes: dict[Label, MarkedNode] = {}

    # -- growth (internal) --------------------------------------------

    def _make_node(self, label, size, birth):
        h = rngstream.node_hash(self.seed, label)
        life = size ** (-self.alpha) * rngstream.exponential(h, 0)
        node = MarkedNode(label, size, birth, life)
        self.nodes[label] = node
        if len(self.nodes) > self.cap:
            raise CapExceeded(f"tree exceeded node cap {self.cap}")
        return node, h

    def _offspring(self, label, h, node):
        ratios = replaw.sample_node(self.law, h)
        out = []
        for i, r in enumerate(ratios, start=1):
            out.append((label + (i,), float(r) * node.size, node.death))
        return out

    # -- queries ------------------------------------------------------

    def generation_nodes(self, n: int) -> "list[MarkedNode]":
        return [nd for nd in self.nodes.values() if nd.generation == n]

    def time_horizon(self) -> float:
        """Largest t for which the alive population is fully realized."""
        if self.mode == "time":
            return float(self.bound)
        frontier = self.generation_nodes(self.bound)
        if not frontier:
            return math.inf
        return min(nd.death for nd in frontier)

    def snapshot(self, t: float) -> FinitePointMeasure:
        """Point measure of sizes alive at time t (interval [birth, death))."""
        if t < 0:
            raise ValueError("negative time")
        horizon = self.time_horizon()
        if self.mode == "time":
            ok = t <= horizon
        else:
            ok = t < horizon or math.isinf(horizon)
        if not ok:
            raise NotGrown(
                f"snapshot at t={t} needs growth beyond horizon {horizon}")
        return FinitePointMeasure(
            [nd.size for nd in self.nodes.values()
             if nd.birth <= t < nd.death])

    def martingale_generation(self, p0: float, n: int) -> float:
        """sum over generation-n nodes of size^p0 (0 if extinct by n)."""
        if self.mode != "generation" or n > self.bound:
            raise NotGrown(f"generation {n} not fully materialized")
        return float(sum(nd.size ** p0 for nd in self.generation_nodes(n)))

    def martingale_time(self, p0: float, t: float) -> float:
        snap = self.snapshot(t)
        return float(np.sum(snap.atoms ** p0)) if snap.count else 0.0

    # -- lines --------------------------------------------------------

    @staticmethod
    def _is_antichain(labels: Iterable[Label]) -> bool:
        labs = [tuple(l) for l in labels]
        for i, a in enumerate(labs):
            for b in labs[i + 1:]:
                shorter, longer = (a, b) if len(a) <= len(b) else (b, a)
                if longer[: len(shorter)] == shorter:
                    return False
        return True

    def line_mass(self, labels: Iterable[Label], p0: float) -> float:
        """sum of size^p0 over the line; extinct labels contribute 0.

        ``labels`` must form an antichain (no label an ancestor of
        another), otherwise :class:`InvalidLine` is raised.
        """
        labs = [tuple(l) for l in labels]
        if not self._is_antichain(labs):
            raise InvalidLine("labels are not an antichain")
        return float(sum(self.nodes[l].size ** p0
                         for l in labs if l in self.nodes))

    def is_covering(self, labels: Iterable[Label]) -> bool:
        """Does every surviving lineage from the root pass through the line?

        Lineages that die out before reaching the line are ignored (they
        carry no mass).  Requires a generation-grown tree at least as
        deep as the deepest label.
        """
        labs = set(tuple(l) for l in labels)
        if not self._is_antichain(labs):
            raise InvalidLine("labels are not an antichain")
        maxgen = max((len(l) for l in labs), default=0)
        if self.mode != "generation" or self.bound < maxgen:
            raise NotGrown(
                "covering can only be decided on a generation-grown tree "
                "at least as deep as the line")

        def walk(label):
            if label in labs:
                return True
            if len(label) >= maxgen:
                return False
            kids = []
            i = 1
            while label + (i,) in self.nodes:  # children are contiguous 1..k
                kids.append(label + (i,))
                i += 1
            if not kids:
                return True  # lineage extinct before the line
            return all(walk(k) for k in kids)

        return walk(())

    # -- export -------------------------------------------------------

    def to_jsonl(self) -> str:
        """One JSON object per node, sorted by (generation, label)."""
        lines = []
        for label in sorted(self.nodes, key=lambda l: (len(l), l)):
            nd = self.nodes[label]
            lines.append(json.dumps({
                "label": list(label),
                "size": nd.size,
                "birth": nd.birth,
                "lifetime": nd.lifetime,
            }))
        return "\n".join(lines) + "\n"

    @staticmethod
    def nodes_from_jsonl(text: str) -> "list[MarkedNode]":
        out = []
        for line in text.splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            out.append(MarkedNode(tuple(obj["label"]), float(obj["size"]),
                                  float(obj["birth"]), float(obj["lifetime"])))
        return out


def grow_to_generation(law, alpha, x, n, seed, cap=DEFAULT_CAP) -> MarkedTree:
    """Materialize all nodes of generations 0..n."""
    _validate_params(alpha, x, cap)
    if n < 0:
        raise ConfigError("generation must be nonnegative")
    tree = MarkedTree(law, alpha, x, seed, cap, "generation", int(n))
    node, h = tree._make_node((), float(x), 0.0)
    wave = [((), h, node)]
    for _ in range(n):
        nxt = []
        for label, h, node in wave:
            for clabel, csize, cbirth in tree._offspring(label, h, node):
                cnode, ch = tree._make_node(clabel, csize, cbirth)
                nxt.append((clabel, ch, cnode))
        wave = nxt
        if not wave:
            break
    return tree


def grow_to_time(law, alpha, x, horizon, seed, cap=DEFAULT_CAP) -> MarkedTree:
    """Materialize all nodes born at or before the horizon."""
    _validate_params(alpha, x, cap)
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ConfigError("horizon must be finite and nonnegative")
    tree = MarkedTree(law, alpha, x, seed, cap, "time", float(horizon))
    node, h = tree._make_node((), float(x), 0.0)
    wave = [((), h, node)]
    while wave:
        nxt = []
        for label, h, node in wave:
            if node.death > horizon:
                continue
            for clabel, csize, cbirth in tree._offspring(label, h, node):
                cnode, ch = tree._make_node(clabel, csize, cbirth)
                nxt.append((clabel, ch, cnode))
        wave = nxt
    return tree


# ----------------------------------------------------------------------
# batch statistics (kernel-backed, with an object-level fallback for
# laws the kernels cannot encode)


def martingale_generation_sample(law, x, powers, n_gens, n_replicas, seed,
                                 cap=DEFAULT_CAP, replica_start=0):
    """Per-replica generation counts and power sums.

    Returns (counts[r, g], msums[r, j, g]) for g = 0..n_gens and the
    exponents in ``powers``.  Replica r is the tree grown from seed
    ``rngstream.replica_seed(seed, replica_start + r)``, so a run split
    into chunks with matching offsets reproduces the unchunked run.
    """
    powers = [float(p) for p in powers]
    try:
        packed = kernels.pack_law(law)
    except ConfigError:
        packed = None
    if packed is not None:
        hashes = rngstream.replica_root_hashes(seed, replica_start,
                                               n_replicas)
        roots = np.full(n_replicas, float(x))
        return kernels.cascade_stats(*packed, roots, hashes, int(n_gens),
                                     powers, int(cap))
    counts = np.zeros((n_replicas, n_gens + 1), dtype=np.int64)
    msums = np.zeros((n_replicas, len(powers), n_gens + 1))
    for r in range(n_replicas):
        tree = grow_to_generation(
            law, 0.0, x, n_gens,
            rngstream.replica_seed(seed, replica_start + r), cap)
        for g in range(n_gens + 1):
            nodes = tree.generation_nodes(g)
            counts[r, g] = len(nodes)
            for j, p in enumerate(powers):
                msums[r, j, g] = sum(nd.size ** p for nd in nodes)
    return counts, msums


def population_time_sample(law, alpha, t_grid, powers, seed, cap=DEFAULT_CAP,
                           n_replicas=None, x=None,
                           root_sizes=None, root_births=None, owners=None,
                           n_owners=None, collect=False, replica_start=0):
    """Time-grown population statistics, one tree per root.

    Either pass ``n_replicas`` and a common root size ``x`` (each
    replica owns one root), or explicit ``root_sizes``/``root_births``/
    ``owners`` arrays for regrowing from a snapshot, where several roots
    can feed one owner.  Root j uses seed
    ``replica_seed(seed, replica_start + j)``, so chunked runs with
    matching offsets reproduce the unchunked run.

    Returns (counts[o, t], msums[o, j, t], largest[o, t], atom_sizes,
    atom_owners); the last two are per-grid-time flat arrays, empty
    unless ``collect``.
    """
    if root_sizes is None:
        if n_replicas is None or x is None:
            raise ConfigError("need n_replicas and x, or explicit roots")
        root_sizes = np.full(n_replicas, float(x))
        root_births = np.zeros(n_replicas)
        owners = np.arange(n_replicas, dtype=np.int64)
        n_owners = n_replicas
    else:
        root_sizes = np.asarray(root_sizes, dtype=np.float64)
        root_births = (np.zeros(root_sizes.size) if root_births is None
                       else np.asarray(root_births, dtype=np.float64))
        owners = (np.arange(root_sizes.size, dtype=np.int64) if owners is None
                  else np.asarray(owners, dtype=np.int64))
        n_owners = int(owners.max()) + 1 if n_owners is None else int(n_owners)
    powers = [float(p) for p in powers]
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.size == 0 or np.any(np.diff(t_grid) < 0):
        raise ConfigError("t_grid must be nonempty and ascending")
    hashes = rngstream.replica_root_hashes(seed, replica_start,
                                           root_sizes.size)
    try:
        packed = kernels.pack_law(law)
    except ConfigError:
        packed = None
    if packed is not None:
        return kernels.time_stats(*packed, root_sizes, hashes, root_births,
                                  owners, n_owners, float(alpha), t_grid,
                                  powers, int(cap), bool(collect))
    # object-level fallback, one tree per root
    tn = t_grid.size
    counts = np.zeros((n_owners, tn), dtype=np.int64)
    msums = np.zeros((n_owners, len(powers), tn))
    largest = np.zeros((n_owners, tn))
    atom_sizes = [[] for _ in range(tn)]
    atom_owners = [[] for _ in range(tn)]
    for j in range(root_sizes.size):
        horizon = float(t_grid[-1] - root_births[j])
        if horizon < 0:
            continue
        tree = grow_to_time(law, alpha, root_sizes[j], horizon,
                            rngstream.replica_seed(seed, replica_start + j),
                            cap)
        ow = int(owners[j])
        for ti, t in enumerate(t_grid):
            local_t = float(t - root_births[j])
            if local_t < 0:
                continue
            snap = tree.snapshot(local_t)
            counts[ow, ti] += snap.count
            for jj, p in enumerate(powers):
                msums[ow, jj, ti] += float(np.sum(snap.atoms ** p))
            if snap.count:
                largest[ow, ti] = max(largest[ow, ti], snap.largest())
                if collect:
                    atom_sizes[ti].append(snap.atoms)
                    atom_owners[ti].append(np.full(snap.count, ow, np.int64))
    out_sizes = [np.concatenate(xx) if xx else np.empty(0) for xx in atom_sizes]
    out_owners = [np.concatenate(xx) if xx else np.empty(0, np.int64)
                  for xx in atom_owners]
    return counts, msums, largest, out_sizes, out_owners
