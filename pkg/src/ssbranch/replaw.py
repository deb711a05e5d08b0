"""Reproduction laws and their Malthusian analysis.

A reproduction law nu is a distribution on finite sequences of positive
daughter/mother size ratios.  Everything downstream is driven by the
moment function

    moment(p) = E sum_i s_i^p,      kappa(p) = 1 - moment(p),

whose smallest root p0 (the Malthusian exponent) normalizes the
intrinsic martingale, and whose derivative at p0 sets the drift of the
size-biased log walk.  kappa is concave, so it has at most two roots;
the second one, when present, bounds the supermartingale exponent range.

Four law families are built in:

* ``DeterministicBinary``  split into two halves, no randomness
* ``UniformBinary``        split at a uniform point: ratios (U, 1-U)
* ``DiscreteMixture``      finitely many ratio tuples with probabilities
                           (tuples may be empty: death without offspring)
* ``DirichletScaled``      a scaled Dirichlet vector; by default the
                           scale is v(v+1)/sum_i v_i(v_i+1)

Laws serialize to small JSON specs (see ``law_from_spec``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma, gammaln

from .errors import ConfigError, NoMalthusianExponent
from . import rngstream

__all__ = [
    "DeterministicBinary",
    "UniformBinary",
    "DiscreteMixture",
    "DirichletScaled",
    "MalthusianProfile",
    "sample",
    "sample_node",
    "moment",
    "moment_mc",
    "kappa",
    "kappa_prime",
    "kappa_prime_fd",
    "malthusian_exponent",
    "second_root",
    "offspring_pgf",
    "mean_offspring",
    "extinction_prob",
    "step_sampler",
    "step_exp_moment",
    "solve_profile",
    "law_from_spec",
    "law_to_spec",
]

_LATTICE_RTOL = 1e-9


# ----------------------------------------------------------------------
# law families


@dataclass(frozen=True)
class DeterministicBinary:
    """Always two daughters of ratio 1/2 each."""

    def ratios_node(self, h: int) -> np.ndarray:
        return np.array([0.5, 0.5])

    def ratios(self, rng) -> np.ndarray:
        return np.array([0.5, 0.5])

    def moment(self, p: float) -> float:
        return 2.0 ** (1.0 - p)

    def moment_deriv(self, p: float) -> float:
        return -math.log(2.0) * 2.0 ** (1.0 - p)

    p_lower = -math.inf
    max_children = 2

    def pgf(self, u: float) -> float:
        return u * u

    def pgf_mean(self) -> float:
        return 2.0

    def lattice_step(self) -> Optional[float]:
        return math.log(2.0)


@dataclass(frozen=True)
class UniformBinary:
    """Two daughters (U, 1-U) with U uniform on (0,1); mass conserving."""

    def ratios_node(self, h: int) -> np.ndarray:
        u = rngstream.uniform(h, 1)
        return np.array([u, 1.0 - u])

    def ratios(self, rng) -> np.ndarray:
        u = float(rng.random())
        return np.array([u, 1.0 - u])

    def moment(self, p: float) -> float:
        if p <= -1.0:
            raise ValueError(f"moment diverges for p <= -1 (got p={p})")
        return 2.0 / (p + 1.0)

    def moment_deriv(self, p: float) -> float:
        if p <= -1.0:
            raise ValueError(f"moment diverges for p <= -1 (got p={p})")
        return -2.0 / (p + 1.0) ** 2

    p_lower = -1.0
    max_children = 2

    def pgf(self, u: float) -> float:
        return u * u

    def pgf_mean(self) -> float:
        return 2.0

    def lattice_step(self) -> Optional[float]:
        return None


@dataclass(frozen=True)
class DiscreteMixture:
    """Finite mixture of fixed ratio tuples.

    ``components`` is a sequence of (probability, ratio tuple) pairs.
    An empty tuple is death without offspring.  Ratios may exceed 1
    (daughters larger than the mother).
    """

    components: tuple[tuple[float, tuple[float, ...]], ...]

    def __post_init__(self):
        if not self.components:
            raise ConfigError("discrete law needs at least one component")
        total = 0.0
        for prob, atoms in self.components:
            if not (prob >= 0.0 and math.isfinite(prob)):
                raise ConfigError(f"component probability {prob!r} invalid")
            if any(not (a > 0.0 and math.isfinite(a)) for a in atoms):
                raise ConfigError("ratios must be finite and positive")
            total += prob
        if abs(total - 1.0) > 1e-9:
            raise ConfigError(f"component probabilities sum to {total!r}, not 1")
        object.__setattr__(self, "_cum", np.cumsum([p for p, _ in self.components]))

    def ratios_node(self, h: int) -> np.ndarray:
        u = rngstream.uniform(h, 1)
        k = int(np.searchsorted(self._cum, u, side="right"))
        k = min(k, len(self.components) - 1)
        return np.asarray(self.components[k][1], dtype=np.float64)

    def ratios(self, rng) -> np.ndarray:
        u = float(rng.random())
        k = int(np.searchsorted(self._cum, u, side="right"))
        k = min(k, len(self.components) - 1)
        return np.asarray(self.components[k][1], dtype=np.float64)

    def moment(self, p: float) -> float:
        return float(sum(prob * sum(a ** p for a in atoms)
                         for prob, atoms in self.components))

    def moment_deriv(self, p: float) -> float:
        return float(sum(prob * sum(a ** p * math.log(a) for a in atoms)
                         for prob, atoms in self.components))

    p_lower = -math.inf

    @property
    def max_children(self) -> int:
        return max(len(atoms) for _, atoms in self.components)

    def pgf(self, u: float) -> float:
        return float(sum(prob * u ** len(atoms) for prob, atoms in self.components))

    def pgf_mean(self) -> float:
        return float(sum(prob * len(atoms) for prob, atoms in self.components))

    def lattice_step(self) -> Optional[float]:
        logs = [math.log(a) for _, atoms in self.components for a in atoms
                if a != 1.0]
        if not logs:
            return None
        g = 0.0
        for v in logs:
            g = _real_gcd(g, abs(v))
            if g == 0.0:
                return None
        for v in logs:
            ratio = v / g
            if abs(ratio - round(ratio)) > _LATTICE_RTOL * (1.0 + abs(ratio)):
                return None
        return g


@dataclass(frozen=True)
class DirichletScaled:
    """Daughters a*X with X Dirichlet(weights).

    With the default scale a = v(v+1)/sum_i v_i(v_i+1), v = sum_i v_i.
    Note the daughters sum to a, which may exceed 1.
    """

    weights: tuple[float, ...]
    scale: Optional[float] = None

    def __post_init__(self):
        if not self.weights or any(not (w > 0.0 and math.isfinite(w))
                                   for w in self.weights):
            raise ConfigError("weights must be finite and positive")
        if self.scale is not None and not (self.scale > 0.0
                                           and math.isfinite(self.scale)):
            raise ConfigError("scale must be positive or null")

    @property
    def effective_scale(self) -> float:
        if self.scale is not None:
            return float(self.scale)
        v = sum(self.weights)
        return v * (v + 1.0) / sum(w * (w + 1.0) for w in self.weights)

    def ratios_node(self, h: int) -> np.ndarray:
        rng = np.random.Generator(np.random.Philox(key=h))
        return self.effective_scale * rng.dirichlet(self.weights)

    def ratios(self, rng) -> np.ndarray:
        return self.effective_scale * rng.dirichlet(self.weights)

    # moment blows up at the pole of Gamma(p + min(weights))
    @property
    def p_lower(self) -> float:
        return -sum(self.weights)

    @property
    def _p_pole(self) -> float:
        return -min(self.weights)

    def moment(self, p: float) -> float:
        if p <= self._p_pole:
            raise ValueError(
                f"moment diverges for p <= {self._p_pole} (got p={p})")
        a = self.effective_scale
        v = sum(self.weights)
        logc = gammaln(v) - gammaln(v + p)
        terms = [math.exp(logc + gammaln(p + w) - gammaln(w))
                 for w in self.weights]
        return a ** p * float(sum(terms))

    def moment_deriv(self, p: float) -> float:
        if p <= self._p_pole:
            raise ValueError(
                f"moment diverges for p <= {self._p_pole} (got p={p})")
        a = self.effective_scale
        v = sum(self.weights)
        logc = gammaln(v) - gammaln(v + p)
        tot = 0.0
        for w in self.weights:
            term = math.exp(logc + gammaln(p + w) - gammaln(w))
            tot += term * (math.log(a) + digamma(p + w) - digamma(v + p))
        return float(tot)

    @property
    def max_children(self) -> int:
        return len(self.weights)

    def pgf(self, u: float) -> float:
        return u ** len(self.weights)

    def pgf_mean(self) -> float:
        return float(len(self.weights))

    def lattice_step(self) -> Optional[float]:
        return None


Law = object  # any of the four families above


def _real_gcd(a: float, b: float, tol: float = 1e-12) -> float:
    """Approximate gcd of positive reals (Euclid with rounding)."""
    a, b = abs(a), abs(b)
    if a < b:
        a, b = b, a
    if a == 0.0:
        return 0.0
    while b > tol * a:
        r = math.fmod(a, b)
        r = min(r, b - r)
        a, b = b, r
    return a


# ----------------------------------------------------------------------
# dispatch layer


def sample(law, rng) -> np.ndarray:
    """One draw of the daughter ratio vector (may be empty)."""
    return law.ratios(rng)


def sample_node(law, h: int) -> np.ndarray:
    """Ratio draw from the counter stream of the node with hash ``h``.

    The node's variate 0 is reserved for its lifetime, so ratio draws
    start at variate 1.  This is the canonical draw used by trees and
    batch kernels alike.
    """
    return law.ratios_node(h)


def moment(law, p: float) -> float:
    """E sum_i s_i^p, by closed form."""
    return law.moment(p)


def moment_mc(law, p: float, n: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate of moment(p) with its standard error."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    vals = np.empty(n)
    for j in range(n):
        s = law.ratios(rng)
        vals[j] = float(np.sum(s ** p)) if s.size else 0.0
    est = float(vals.mean())
    se = float(vals.std(ddof=1) / math.sqrt(n))
    return est, se


def kappa(law, p: float) -> float:
    """1 - moment(p); concave in p, at most two roots."""
    return 1.0 - law.moment(p)


def kappa_prime(law, p: float) -> float:
    """Derivative of kappa, by closed form."""
    return -law.moment_deriv(p)


def kappa_prime_fd(law, p: float, h: float = 1e-5) -> float:
    """Central-difference derivative of kappa with one Richardson step.

    Kept for laws without a closed moment derivative and as an
    independent cross-check of ``kappa_prime``.
    """
    def cd(step):
        return (kappa(law, p + step) - kappa(law, p - step)) / (2.0 * step)

    d1 = cd(h)
    d2 = cd(h / 2.0)
    return (4.0 * d2 - d1) / 3.0


def offspring_pgf(law, u: float) -> float:
    """Generating function of the number of daughters at u in [0,1]."""
    if not 0.0 <= u <= 1.0:
        raise ValueError("pgf argument must lie in [0,1]")
    return law.pgf(u)


def mean_offspring(law) -> float:
    return law.pgf_mean()


def extinction_prob(law, tol: float = 1e-14, max_iter: int = 100000) -> float:
    """Smallest fixed point of the offspring generating function.

    Iterating u -> F(u) from 0 converges monotonically to the smallest
    fixed point, which is the extinction probability of the embedded
    Galton-Watson genealogy.
    """
    u = 0.0
    for _ in range(max_iter):
        nxt = law.pgf(u)
        if abs(nxt - u) <= tol:
            return nxt
        u = nxt
    return u


def is_lattice(law) -> bool:
    """True when all possible log-ratios sit on a common lattice."""
    return law.lattice_step() is not None


# ----------------------------------------------------------------------
# Malthusian exponent


def _scan_grid(law, p_min: Optional[float], p_cap: float, n_grid: int) -> np.ndarray:
    lo = 1e-9 if p_min is None else p_min
    pole = getattr(law, "_p_pole", getattr(law, "p_lower", -math.inf))
    if math.isfinite(pole):
        lo = max(lo, pole + 1e-9)
    if not lo < p_cap:
        raise ValueError("empty scan window")
    if lo > 0:
        return np.geomspace(lo, p_cap, n_grid)
    # window reaching into negative exponents: linear below 1, geometric above
    left = np.linspace(lo, 1.0, n_grid // 2, endpoint=False)
    right = np.geomspace(1.0, p_cap, n_grid - n_grid // 2)
    return np.concatenate([left, right])


def malthusian_exponent(law, p_cap: float = 64.0, n_grid: int = 512,
                        p_min: Optional[float] = None,
                        xtol: float = 1e-14) -> float:
    """Smallest root of kappa located by a bracket scan plus Brent polish.

    Scans a geometric grid on (0, p_cap] by default (pass ``p_min`` to
    reach negative exponents).  Raises :class:`NoMalthusianExponent`
    with a diagnostic of the closest approach when no sign change is
    found, which happens exactly when the minimal moment stays above 1.
    """
    grid = _scan_grid(law, p_min, p_cap, n_grid)
    vals = np.array([kappa(law, p) for p in grid])
    if vals[0] > 0.0:
        raise NoMalthusianExponent(
            "kappa is already positive at the left edge of the scan window; "
            "any smaller root lies below it (pass p_min to widen the scan)",
            diagnostic={"left_edge": float(grid[0]),
                        "kappa_left_edge": float(vals[0])})
    hit = np.nonzero(vals == 0.0)[0]
    if hit.size:
        return float(grid[hit[0]])
    sign_change = np.nonzero((vals[:-1] < 0.0) & (vals[1:] > 0.0))[0]
    if sign_change.size == 0:
        imax = int(np.argmax(vals))
        raise NoMalthusianExponent(
            "kappa has no root on the scan grid: the moment function stays "
            f"above 1 (minimal moment {1.0 - vals[imax]:.6g} at "
            f"p = {grid[imax]:.6g})",
            diagnostic={"max_kappa": float(vals[imax]),
                        "min_moment": float(1.0 - vals[imax]),
                        "arg_p": float(grid[imax]),
                        "p_cap": float(p_cap)})
    i = int(sign_change[0])
    return float(brentq(lambda p: kappa(law, p), grid[i], grid[i + 1],
                        xtol=xtol, rtol=8.9e-16))


def second_root(law, p0: float, p_cap: float = 64.0, n_grid: int = 512,
                xtol: float = 1e-12) -> Optional[float]:
    """Second root of kappa above p0, or None if kappa stays positive.

    None means no root up to p_cap; for laws whose moment decays to 0
    the supermartingale exponent range is then unbounded.
    """
    grid = np.geomspace(p0 * (1.0 + 1e-9) + 1e-12, p_cap, n_grid)
    prev_p, prev_v = None, None
    for p in grid:
        v = kappa(law, p)
        if prev_v is not None and prev_v > 0.0 and v < 0.0:
            return float(brentq(lambda q: kappa(law, q), prev_p, p, xtol=xtol))
        if prev_v is not None and v == 0.0:
            return float(p)
        prev_p, prev_v = p, v
    return None


# ----------------------------------------------------------------------
# size-biased step law


class StepSampler:
    """Sampler for one step of the size-biased log walk.

    Under the size-biased change of measure a step is ln(s_i) where the
    pair (s, i) is drawn with density s_i^{p0} against the reproduction
    law.  The step mean is -kappa'(p0) and exp-moments close as
    E exp(p S) = moment(p + p0) = 1 - kappa(p + p0).
    """

    def __init__(self, law, p0: float, kind: str, mean: float):
        self.law = law
        self.p0 = p0
        self.kind = kind          # "atoms" | "inverse_cdf" | "pool"
        self._mean = mean
        self.atoms: Optional[np.ndarray] = None
        self.weights: Optional[np.ndarray] = None
        self._pool: Optional[np.ndarray] = None

    def mean(self) -> float:
        return self._mean

    def sample(self, n: int, rng) -> np.ndarray:
        raise NotImplementedError


class _AtomStepSampler(StepSampler):
    def __init__(self, law, p0, atoms, weights, mean):
        super().__init__(law, p0, "atoms", mean)
        self.atoms = np.asarray(atoms)
        self.weights = np.asarray(weights)
        self._cum = np.cumsum(self.weights)
        self._cum[-1] = 1.0

    def sample(self, n: int, rng) -> np.ndarray:
        idx = np.searchsorted(self._cum, rng.random(n), side="right")
        return self.atoms[np.minimum(idx, self.atoms.size - 1)]


class _UniformBinaryStepSampler(StepSampler):
    """Exact inverse CDF: the biased part V has density 2v on (0,1),
    so V = sqrt(U) and the step is ln V."""

    def __init__(self, law, p0, mean):
        super().__init__(law, p0, "inverse_cdf", mean)

    def sample(self, n: int, rng) -> np.ndarray:
        u = rng.random(n)
        return 0.5 * np.log(np.maximum(u, 1e-300))


class _PooledStepSampler(StepSampler):
    """Weighted-resampling pool for laws without a closed step form.

    Draws ``pool_size`` ratio vectors, flattens to (ln s_i, weight
    s_i^{p0}) items, and resamples items proportionally to weight.
    """

    def __init__(self, law, p0, mean, pool_size, rng):
        super().__init__(law, p0, "pool", mean)
        logs = []
        wts = []
        for _ in range(pool_size):
            s = law.ratios(rng)
            if s.size:
                logs.append(np.log(s))
                wts.append(s ** p0)
        flat_logs = np.concatenate(logs) if logs else np.empty(0)
        flat_wts = np.concatenate(wts) if wts else np.empty(0)
        total = flat_wts.sum()
        if not total > 0:
            raise ValueError("empty step pool")
        self._pool = flat_logs
        self._probs = flat_wts / total
        self._cum = np.cumsum(self._probs)
        self._cum[-1] = 1.0
        self.pool_size = pool_size

    def sample(self, n: int, rng) -> np.ndarray:
        idx = np.searchsorted(self._cum, rng.random(n), side="right")
        return self._pool[np.minimum(idx, self._pool.size - 1)]


def step_sampler(law, p0: float, pool_size: int = 10 ** 6,
                 pool_rng=None) -> StepSampler:
    """Build a step sampler for the size-biased log walk at exponent p0.

    For discrete laws the atom table is exact and its total weight must
    come out as 1 (that is what kappa(p0) = 0 says); a mismatch beyond
    1e-9 means p0 is inconsistent with the law and raises.
    """
    mean = -kappa_prime(law, p0)
    if isinstance(law, DeterministicBinary):
        atoms = np.array([math.log(0.5)])
        weights = np.array([2.0 * 0.5 ** p0])
    elif isinstance(law, DiscreteMixture):
        pairs = [(math.log(a), prob * a ** p0)
                 for prob, atoms_k in law.components for a in atoms_k]
        if not pairs:
            raise ValueError("law has no offspring at all")
        atoms = np.array([x for x, _ in pairs])
        weights = np.array([w for _, w in pairs])
    elif isinstance(law, UniformBinary):
        if abs(law.moment(p0) - 1.0) > 1e-9:
            raise ValueError(
                f"p0={p0} is not a root of kappa (moment={law.moment(p0)})")
        return _UniformBinaryStepSampler(law, p0, mean)
    else:
        if abs(law.moment(p0) - 1.0) > 1e-9:
            raise ValueError(
                f"p0={p0} is not a root of kappa (moment={law.moment(p0)})")
        if pool_rng is None:
            pool_rng = np.random.default_rng(0)
        return _PooledStepSampler(law, p0, mean, pool_size, pool_rng)
    total = weights.sum()
    if abs(total - 1.0) > 1e-9:
        raise ValueError(
            f"step weights sum to {total!r}; p0={p0} is not a root of kappa")
    return _AtomStepSampler(law, p0, atoms, weights / total, mean)


def step_exp_moment(law, p0: float, p: float) -> float:
    """E exp(p * S) for one step S of the size-biased walk."""
    return law.moment(p + p0)


# ----------------------------------------------------------------------
# profile


@dataclass
class MalthusianProfile:
    """Solved summary of a reproduction law.

    ``m1`` is the magnitude of the walk drift, |kappa'(p0)|; the walk
    itself drifts downward by m1 per step.  ``p_plus`` is None when
    kappa has no second root below the scan cap.  ``checks`` records
    the standing-hypothesis diagnostics: a grid witness of kappa > 0
    somewhere right of p0, and the second moment of the generation-1
    martingale (exact where closed, else Monte Carlo with a standard
    error).
    """

    p0: float
    p_plus: Optional[float]
    kappa_prime_at_p0: float
    m1: float
    mean_offspring: float
    extinction_prob: float
    p_lower: float
    p_upper: float
    lattice: bool
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        def clean(x):
            if isinstance(x, float) and math.isinf(x):
                return "inf" if x > 0 else "-inf"
            return x
        d = {k: clean(v) for k, v in self.__dict__.items()}
        return d


def _m1_second_moment(law, p0: float, mc_budget: int, rng) -> dict:
    if isinstance(law, (DeterministicBinary, UniformBinary)):
        return {"value": 1.0, "exact": True}
    if isinstance(law, DiscreteMixture):
        val = sum(prob * (sum(a ** p0 for a in atoms)) ** 2
                  for prob, atoms in law.components)
        return {"value": float(val), "exact": True}
    vals = np.empty(mc_budget)
    for j in range(mc_budget):
        s = law.ratios(rng)
        vals[j] = float(np.sum(s ** p0)) ** 2 if s.size else 0.0
    return {"value": float(vals.mean()),
            "se": float(vals.std(ddof=1) / math.sqrt(mc_budget)),
            "exact": False}


def solve_profile(law, p_cap: float = 64.0, n_grid: int = 512,
                  mc_budget: int = 20000, seed: int = 0) -> MalthusianProfile:
    """Solve for p0 and assemble the full Malthusian profile of a law."""
    p0 = malthusian_exponent(law, p_cap=p_cap, n_grid=n_grid)
    p_plus = second_root(law, p0, p_cap=p_cap, n_grid=n_grid)
    kp = kappa_prime(law, p0)
    # witness of kappa > 0 strictly right of p0
    probe = 0.5 * (p0 + p_plus) if p_plus is not None else min(p0 + 1.0, p_cap)
    witness = {"p": float(probe), "kappa": float(kappa(law, probe))}
    rng = np.random.default_rng(seed)
    profile = MalthusianProfile(
        p0=p0,
        p_plus=p_plus,
        kappa_prime_at_p0=kp,
        m1=abs(kp),
        mean_offspring=mean_offspring(law),
        extinction_prob=extinction_prob(law),
        p_lower=float(getattr(law, "p_lower")),
        p_upper=math.inf,
        lattice=is_lattice(law),
        checks={
            "kappa_positive_right_of_p0": witness,
            "generation1_martingale_second_moment":
                _m1_second_moment(law, p0, mc_budget, rng),
        },
    )
    return profile


# ----------------------------------------------------------------------
# JSON law specs


def law_from_spec(spec: dict):
    """Parse a JSON law spec into a law object.

    Formats::

        {"type": "deterministic_binary"}
        {"type": "uniform_binary"}
        {"type": "discrete",
         "components": [{"prob": 0.2, "atoms": [1.3, 0.5]},
                        {"prob": 0.8, "atoms": [0.4]}]}
        {"type": "dirichlet", "weights": [1, 1], "scale": null}
    """
    if not isinstance(spec, dict) or "type" not in spec:
        raise ConfigError("law spec must be an object with a 'type' field")
    kind = spec["type"]
    if kind == "deterministic_binary":
        return DeterministicBinary()
    if kind == "uniform_binary":
        return UniformBinary()
    if kind == "discrete":
        comps = spec.get("components")
        if not isinstance(comps, list) or not comps:
            raise ConfigError("discrete law spec needs a 'components' list")
        parsed = []
        for c in comps:
            if not isinstance(c, dict) or "prob" not in c or "atoms" not in c:
                raise ConfigError(
                    "each component needs 'prob' and 'atoms' fields")
            parsed.append((float(c["prob"]), tuple(float(a) for a in c["atoms"])))
        return DiscreteMixture(tuple(parsed))
    if kind == "dirichlet":
        weights = spec.get("weights")
        if not isinstance(weights, list) or not weights:
            raise ConfigError("dirichlet law spec needs a 'weights' list")
        scale = spec.get("scale", None)
        return DirichletScaled(tuple(float(w) for w in weights),
                               None if scale is None else float(scale))
    raise ConfigError(f"unknown law type {kind!r}")


def law_to_spec(law) -> dict:
    if isinstance(law, DeterministicBinary):
        return {"type": "deterministic_binary"}
    if isinstance(law, UniformBinary):
        return {"type": "uniform_binary"}
    if isinstance(law, DiscreteMixture):
        return {"type": "discrete",
                "components": [{"prob": prob, "atoms": list(atoms)}
                               for prob, atoms in law.components]}
    if isinstance(law, DirichletScaled):
        return {"type": "dirichlet", "weights": list(law.weights),
                "scale": law.scale}
    raise ConfigError(f"cannot serialize law {law!r}")
