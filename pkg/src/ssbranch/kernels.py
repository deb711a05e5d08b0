"""Growth kernel selection and law packing.

The compiled extension (_ckernels) is used when importable; otherwise
the vectorized numpy backend (_pykernels) takes over.  Both implement
the same contracts with bit-identical output; set SSBRANCH_FORCE_PY=1
to force the fallback (benchmarks and parity tests do).
"""

from __future__ import annotations

import os

import numpy as np

from . import _pykernels, replaw
from .errors import ConfigError

_compiled = None
if not os.environ.get("SSBRANCH_FORCE_PY"):
    try:
        from . import _ckernels as _compiled  # type: ignore
    except ImportError:
        _compiled = None

_impl = _compiled if _compiled is not None else _pykernels


def backend_name() -> str:
    return _impl.BACKEND_NAME


def backends() -> dict:
    """All available backends keyed by name (for benchmarks and tests)."""
    out = {"python": _pykernels}
    if _compiled is not None:
        out["c"] = _compiled
    return out


def pack_law(law):
    """Encode a law for the kernels: (kind, cum, offs, atoms).

    Raises ConfigError for laws without a flat encoding (their batch
    statistics fall back to object-level growth).
    """
    if isinstance(law, replaw.DeterministicBinary):
        return (0, np.empty(0), np.array([0, 2], dtype=np.int64),
                np.array([0.5, 0.5]))
    if isinstance(law, replaw.UniformBinary):
        return (1, np.empty(0), np.array([0, 2], dtype=np.int64),
                np.empty(0))
    if isinstance(law, replaw.DiscreteMixture):
        offs = np.zeros(len(law.components) + 1, dtype=np.int64)
        flat = []
        for k, (_, atoms) in enumerate(law.components):
            offs[k + 1] = offs[k] + len(atoms)
            flat.extend(atoms)
        return (2, np.asarray(law._cum, dtype=np.float64), offs,
                np.asarray(flat, dtype=np.float64))
    raise ConfigError(
        f"law {type(law).__name__} has no kernel encoding")


def cascade_stats(kind, cum, offs, atoms, root_sizes, root_hashes, n_gens,
                  powers, cap):
    return _impl.cascade_stats(kind, cum, offs, atoms,
                               np.asarray(root_sizes, dtype=np.float64),
                               np.asarray(root_hashes, dtype=np.uint64),
                               int(n_gens),
                               np.asarray(powers, dtype=np.float64),
                               int(cap))


def time_stats(kind, cum, offs, atoms, root_sizes, root_hashes, root_births,
               owners, n_owners, alpha, t_grid, powers, cap, collect):
    return _impl.time_stats(kind, cum, offs, atoms,
                            np.asarray(root_sizes, dtype=np.float64),
                            np.asarray(root_hashes, dtype=np.uint64),
                            np.asarray(root_births, dtype=np.float64),
                            np.asarray(owners, dtype=np.int64),
                            int(n_owners), float(alpha),
                            np.asarray(t_grid, dtype=np.float64),
                            np.asarray(powers, dtype=np.float64),
                            int(cap), bool(collect))
