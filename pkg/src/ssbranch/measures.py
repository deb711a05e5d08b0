"""Finite point measures on (0, infinity).

A population state is the measure sum_i delta_{x_i} of the sizes of the
individuals currently alive.  Dead individuals contribute no atom, so
the empty measure is a valid state (extinction).  Atoms are stored in
descending order, which fixes the serialized form.
"""

from __future__ import annotations

import json
from typing import Callable, Iterable, Sequence

import numpy as np

__all__ = ["FinitePointMeasure", "pair", "power_mass"]


class FinitePointMeasure:
    """Multiset of strictly positive atom sizes.

    Parameters
    ----------
    atoms : iterable of float
        Atom sizes.  Must all be finite and strictly positive; pass
        nothing for the empty measure.  Use :meth:`from_sizes` to build
        from raw simulation output where exact zeros mark dead
        individuals and are silently dropped.
    """

    __slots__ = ("_atoms",)

    def __init__(self, atoms: Iterable[float] = ()):
        arr = np.asarray(list(atoms) if not isinstance(atoms, np.ndarray) else atoms,
                         dtype=np.float64)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if arr.size and (not np.all(np.isfinite(arr)) or np.any(arr <= 0.0)):
            raise ValueError("atoms must be finite and strictly positive")
        self._atoms = np.sort(arr)[::-1].copy()
        self._atoms.flags.writeable = False

    @classmethod
    def from_sizes(cls, sizes: Iterable[float]) -> "FinitePointMeasure":
        """Build a measure from sizes, dropping exact zeros (dead mass)."""
        arr = np.asarray(list(sizes) if not isinstance(sizes, np.ndarray) else sizes,
                         dtype=np.float64).reshape(-1)
        return cls(arr[arr != 0.0])

    @property
    def atoms(self) -> np.ndarray:
        """Atom sizes in descending order (read-only view)."""
        return self._atoms

    @property
    def count(self) -> int:
        return int(self._atoms.size)

    def __len__(self) -> int:
        return self.count

    def __bool__(self) -> bool:  # empty measure is falsy, like an empty set
        return self.count > 0

    def __eq__(self, other) -> bool:
        if not isinstance(other, FinitePointMeasure):
            return NotImplemented
        return self._atoms.shape == other._atoms.shape and bool(
            np.all(self._atoms == other._atoms))

    def __repr__(self) -> str:
        if self.count > 6:
            shown = ", ".join(f"{a:g}" for a in self._atoms[:6])
            return f"FinitePointMeasure([{shown}, ...], count={self.count})"
        return "FinitePointMeasure([" + ", ".join(f"{a:g}" for a in self._atoms) + "])"

    def largest(self) -> float:
        """Largest atom; 0.0 for the empty measure."""
        return float(self._atoms[0]) if self.count else 0.0

    def scaled(self, c: float) -> "FinitePointMeasure":
        """Image measure under x -> c*x, c > 0."""
        if not (c > 0.0 and np.isfinite(c)):
            raise ValueError("scale factor must be finite and positive")
        return FinitePointMeasure(self._atoms * c)

    def merged(self, other: "FinitePointMeasure") -> "FinitePointMeasure":
        """Superposition (atom multisets concatenated)."""
        return FinitePointMeasure(np.concatenate([self._atoms, other._atoms]))

    # -- serialization ------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({"atoms": self._atoms.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "FinitePointMeasure":
        obj = json.loads(text)
        if not isinstance(obj, dict) or "atoms" not in obj:
            raise ValueError("expected an object with an 'atoms' array")
        return cls(obj["atoms"])


def pair(measure: FinitePointMeasure, f: Callable[[np.ndarray], np.ndarray]) -> float:
    """Integrate f against the measure: sum_i f(x_i).

    ``f`` is applied to the atom array; a callable that only accepts
    scalars is applied atom by atom.  The empty measure integrates to 0
    for any f.  A non-finite term raises, and the error names the atom.
    """
    if measure.count == 0:
        return 0.0
    x = measure.atoms
    try:
        vals = np.asarray(f(x), dtype=np.float64)
        if vals.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.array([float(f(float(a))) for a in x], dtype=np.float64)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ValueError(f"f evaluated to a non-finite value at atom {x[i]!r}")
    return float(vals.sum())


def power_mass(measure: FinitePointMeasure, p: float) -> float:
    """sum_i x_i**p; equals the atom count at p = 0."""
    if measure.count == 0:
        return 0.0
    vals = measure.atoms ** p
    if not np.all(np.isfinite(vals)):
        i = int(np.argmax(~np.isfinite(vals)))
        raise ValueError(
            f"x**{p} is non-finite at atom {measure.atoms[i]!r}")
    return float(vals.sum())


def snapshot_rows(t: float, measure: FinitePointMeasure) -> "list[tuple[float, float]]":
    """Rows (t, atom) for CSV snapshot dumps, atoms descending."""
    return [(float(t), float(a)) for a in measure.atoms]


def measure_from_rows(rows: Sequence[tuple[float, float]], t: float) -> FinitePointMeasure:
    """Inverse of snapshot_rows for a single time slice."""
    return FinitePointMeasure([a for (s, a) in rows if s == t])
