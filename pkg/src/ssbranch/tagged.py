"""The tagged individual under the size-biased change of measure.

Size-biasing by the intrinsic martingale turns the population into a
single distinguished line of descent: the tagged individual's log size
performs a random walk S with step law given by the p0-weighted
reproduction draw (mean -kappa'(p0), a strict downward drift in the
regimes handled here), and successive lifetimes are exponential with
rate size^alpha.

Embedding the walk in continuous time at unit jump rate gives a
compound Poisson path eta; the tagged size at real time t is recovered
by the Lamperti change of clock

    chi(t) = x * exp(eta(tau)),   integral_0^tau exp(-alpha*eta(s)) ds
                                   = t * x^alpha,

since one unit of eta-time spent at size chi costs chi^(-alpha) real
time.  Two independent routes to chi(t) therefore exist (walk with
lifetimes, and Lamperti-transformed eta) and must agree in law.

The long-time limit of t^(1/alpha) * chi(t) is driven by the
exponential functional I = integral_0^infty exp(alpha*eta(s)) ds: the
limit size Y satisfies E k(Y^alpha) = E(k(I)/I) / (alpha*m1), so Y
samples are importance resamples of I draws with weight 1/I.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import replaw
from .errors import ConfigError, PathTooShort, UnsupportedRegime

__all__ = [
    "TaggedPath",
    "CompoundPoissonPath",
    "simulate_tagged_walk",
    "simulate_eta",
    "eta_at",
    "lamperti_chi",
    "chi_time_samples",
    "lamperti_chi_samples",
    "expected_exponential_functional",
    "sample_exponential_functional",
    "LimitSample",
    "sample_limit_size",
]


def _check_alpha(alpha):
    if not (isinstance(alpha, (int, float)) and math.isfinite(alpha)):
        raise ConfigError("alpha must be a finite real")
    if alpha < 0:
        raise ConfigError("negative alpha is not supported")


def _require_drift(law, p0):
    kp = replaw.kappa_prime(law, p0)
    if not kp > 0:
        raise UnsupportedRegime(
            f"kappa'(p0) = {kp} must be positive (strict downward drift)")
    return kp


# ----------------------------------------------------------------------
# path objects


@dataclass
class TaggedPath:
    """Discrete tagged line: state k has log size log_sizes[k], is
    entered at birth_times[k] and lives lifetimes[k]."""

    log_sizes: np.ndarray
    lifetimes: np.ndarray
    birth_times: np.ndarray

    def __post_init__(self):
        n = self.log_sizes.size
        if self.lifetimes.size != n or self.birth_times.size != n:
            raise ValueError("field lengths must agree")

    @property
    def sizes(self) -> np.ndarray:
        return np.exp(self.log_sizes)

    @property
    def span(self) -> float:
        """Real time covered: death of the last simulated state."""
        return float(self.birth_times[-1] + self.lifetimes[-1])

    def chi_at(self, t: float) -> float:
        """Size of the tagged individual at real time t."""
        if t < 0:
            raise ValueError("negative time")
        if t >= self.span:
            raise PathTooShort(
                f"path covers [0, {self.span}); asked for t={t}")
        k = int(np.searchsorted(self.birth_times, t, side="right")) - 1
        return float(math.exp(self.log_sizes[k]))

    def normalized_lifetimes(self, alpha: float) -> np.ndarray:
        """chi^alpha * lifetime for each state; Exp(1) under the model.

        States whose lifetime overflowed to inf (rate underflow on very
        deep walks) cannot be normalized back and come out non-finite
        (inf while chi^alpha is still a denormal, nan once it is 0).
        """
        with np.errstate(invalid="ignore"):
            return np.exp(alpha * self.log_sizes) * self.lifetimes


@dataclass
class CompoundPoissonPath:
    """Unit-rate compound Poisson path on [0, horizon].

    ``levels`` has one more entry than ``jump_times`` (the initial
    level, 0 for a freshly started path, comes first).
    """

    jump_times: np.ndarray
    levels: np.ndarray
    horizon: float

    def __post_init__(self):
        if self.levels.size != self.jump_times.size + 1:
            raise ValueError("levels must have one more entry than jump_times")

    def level_at(self, s: float) -> float:
        if s < 0:
            raise ValueError("negative time")
        if s > self.horizon:
            raise PathTooShort(
                f"path covers [0, {self.horizon}]; asked for s={s}")
        k = int(np.searchsorted(self.jump_times, s, side="right"))
        return float(self.levels[k])


def simulate_tagged_walk(law, p0, alpha, n_steps, rng, x=1.0,
                         sampler=None) -> TaggedPath:
    """Simulate n_steps of the size-biased walk with its lifetimes."""
    _check_alpha(alpha)
    if not (x > 0 and math.isfinite(x)):
        raise ConfigError("start size must be finite and positive")
    if sampler is None:
        sampler = replaw.step_sampler(law, p0)
    steps = sampler.sample(int(n_steps), rng)
    log_sizes = np.concatenate(([math.log(x)], math.log(x) + np.cumsum(steps)))
    # beyond ~700 log-units of downward drift the rates underflow and
    # lifetimes become inf; that is the honest double-precision answer
    with np.errstate(over="ignore"):
        lifetimes = np.exp(-alpha * log_sizes) * rng.exponential(
            size=n_steps + 1)
        birth_times = np.concatenate(([0.0], np.cumsum(lifetimes[:-1])))
    return TaggedPath(log_sizes, lifetimes, birth_times)


def simulate_eta(law, p0, horizon, rng, sampler=None) -> CompoundPoissonPath:
    """Unit-rate compound Poisson embedding of the size-biased walk."""
    if not (horizon >= 0 and math.isfinite(horizon)):
        raise ConfigError("horizon must be finite and nonnegative")
    if sampler is None:
        sampler = replaw.step_sampler(law, p0)
    times = []
    s = 0.0
    while True:
        s += float(rng.exponential())
        if s > horizon:
            break
        times.append(s)
    n = len(times)
    steps = sampler.sample(n, rng) if n else np.empty(0)
    levels = np.concatenate(([0.0], np.cumsum(steps)))
    return CompoundPoissonPath(np.asarray(times), levels, float(horizon))


def eta_at(path: CompoundPoissonPath, s: float) -> float:
    return path.level_at(s)


def lamperti_chi(path: CompoundPoissonPath, alpha, x, t) -> float:
    """Tagged size at real time t from a compound Poisson path.

    Inverts the additive clock: real time accrues at rate
    (x*exp(level))^(-alpha) per unit of path time, so t is reached once
    integral exp(-alpha*level) d(path time) equals t*x^alpha.  Raises
    :class:`PathTooShort` when the path's horizon is exhausted first.
    """
    _check_alpha(alpha)
    if not (x > 0 and math.isfinite(x)):
        raise ConfigError("start size must be finite and positive")
    if t < 0:
        raise ValueError("negative time")
    target = t * x ** alpha
    bounds = np.concatenate((path.jump_times, [path.horizon]))
    clock = 0.0
    prev = 0.0
    # chi is right-continuous: if the clock hits the target exactly at a
    # jump instant, the post-jump level applies (strict inequality here)
    for k in range(bounds.size):
        seg = (bounds[k] - prev) * math.exp(-alpha * path.levels[k])
        if clock + seg > target:
            return x * math.exp(path.levels[k])
        clock += seg
        prev = bounds[k]
    raise PathTooShort(
        f"clock only reached {clock} <= {target} within the horizon")


# ----------------------------------------------------------------------
# vectorized sampling routes


def chi_time_samples(law, p0, alpha, t_grid, n, rng, x=1.0, sampler=None,
                     max_steps=10 ** 5) -> np.ndarray:
    """Walk-route samples of chi(t): returns shape (n, len(t_grid)).

    Simulates the walk with lifetimes step-synchronously across n
    replicas until every replica's birth time passes the last grid
    point.
    """
    _check_alpha(alpha)
    _require_drift(law, p0)
    t_grid = np.asarray(t_grid, dtype=np.float64)
    if t_grid.size == 0 or np.any(np.diff(t_grid) < 0) or t_grid[0] < 0:
        raise ConfigError("t_grid must be nonempty, nonnegative, ascending")
    if sampler is None:
        sampler = replaw.step_sampler(law, p0)
    t_max = t_grid[-1]
    b = np.zeros(n)
    s = np.full(n, math.log(x))
    out = np.full((n, t_grid.size), np.nan)
    for _ in range(max_steps):
        if not (b <= t_max).any():
            break
        life = np.exp(-alpha * s) * rng.exponential(size=n)
        death = b + life
        for ti, t in enumerate(t_grid):
            hit = (b <= t) & (t < death)
            if hit.any():
                out[hit, ti] = np.exp(s[hit])
        b = death
        s = s + sampler.sample(n, rng)
    if (b <= t_max).any():
        raise PathTooShort(
            f"walk did not pass t={t_max} within {max_steps} steps")
    return out


def lamperti_chi_samples(law, p0, alpha, t, n, rng, x=1.0, sampler=None,
                         max_steps=10 ** 5) -> np.ndarray:
    """Lamperti-route samples of chi(t), one per replica."""
    _check_alpha(alpha)
    _require_drift(law, p0)
    if sampler is None:
        sampler = replaw.step_sampler(law, p0)
    target = t * x ** alpha
    level = np.zeros(n)
    clock = np.zeros(n)
    out = np.full(n, np.nan)
    done = np.zeros(n, dtype=bool)
    for _ in range(max_steps):
        if done.all():
            break
        seg = np.exp(-alpha * level) * rng.exponential(size=n)
        hit = ~done & (clock + seg > target)
        out[hit] = x * np.exp(level[hit])
        done |= hit
        clock = np.where(done, clock, clock + seg)
        step = sampler.sample(n, rng)
        level = np.where(done, level, level + step)
    if not done.all():
        raise UnsupportedRegime(
            f"clock did not reach t={t} within {max_steps} jumps")
    return out


# ----------------------------------------------------------------------
# exponential functional and the limit size


def expected_exponential_functional(law, p0, alpha) -> float:
    """E(I) in closed form: 1/kappa(p0 + alpha).

    Finite exactly when kappa(p0 + alpha) > 0, i.e. p0 + alpha lies
    strictly between the two roots of kappa.
    """
    _check_alpha(alpha)
    k = replaw.kappa(law, p0 + alpha)
    if not k > 0:
        raise UnsupportedRegime(
            f"kappa(p0 + alpha) = {k} <= 0: the exponential functional "
            "has infinite mean, no expected-tail certificate exists")
    return 1.0 / k


def sample_exponential_functional(law, p0, alpha, n, rng, tail_tol=1e-3,
                                  sampler=None, max_steps=10 ** 5):
    """Draw n copies of I = integral exp(alpha*eta) with certified error.

    Each path is truncated at the first jump where the level has fallen
    below ln(tail_tol)/alpha and the conditional expected remainder
    exp(alpha*level)*E(I) is below tail_tol times the accumulated
    integral.  Returns (values, certificates); certificates bound the
    relative truncation error in conditional expectation.
    """
    _check_alpha(alpha)
    if alpha == 0:
        raise UnsupportedRegime(
            "alpha = 0: the exponential functional diverges")
    if not (0 < tail_tol < 1):
        raise ConfigError("tail_tol must lie in (0, 1)")
    _require_drift(law, p0)
    ei = expected_exponential_functional(law, p0, alpha)
    if sampler is None:
        sampler = replaw.step_sampler(law, p0)
    level_gate = math.log(tail_tol) / alpha
    level = np.zeros(n)
    acc = np.zeros(n)
    cert = np.full(n, np.nan)
    active = np.ones(n, dtype=bool)
    for _ in range(max_steps):
        if not active.any():
            break
        w = rng.exponential(size=n)
        acc = np.where(active, acc + np.exp(alpha * level) * w, acc)
        step = sampler.sample(n, rng)
        nxt = level + step
        tail = np.exp(alpha * nxt) * ei
        stop = active & (nxt <= level_gate) & (tail <= tail_tol * acc)
        cert[stop] = tail[stop] / acc[stop]
        active &= ~stop
        level = np.where(active, nxt, level)
    if active.any():
        raise UnsupportedRegime(
            f"{int(active.sum())} paths not certified within {max_steps} "
            "jumps; loosen tail_tol or raise max_steps")
    return acc, cert


@dataclass
class LimitSample:
    """Weighted-resampling draw of the limit size Y.

    ``values`` are the Y samples; ``ess`` the effective sample size of
    the 1/I weights over the pool; ``ess_flag`` is set when ess falls
    under 10% of the pool (weights too uneven to trust the resample);
    ``normalization`` is mean(1/I)/(alpha*m1), which the identity
    E(1/I) = alpha*m1 puts near 1.
    """

    values: np.ndarray
    ess: float
    ess_flag: bool
    normalization: float
    pool_size: int
    tail_tol: float


def sample_limit_size(law, p0, alpha, n, rng, pool_size=None, tail_tol=1e-3,
                      sampler=None, max_steps=10 ** 5) -> LimitSample:
    """Sample the limit of t^(1/alpha)*chi(t) by resampling I draws.

    The limit law satisfies E k(Y^alpha) = E(k(I)/I)/(alpha*m1), so
    Y^alpha is distributed as an I draw importance-weighted by 1/I.
    """
    if pool_size is None:
        pool_size = max(int(n), 10 ** 4)
    kp = _require_drift(law, p0)
    values, _ = sample_exponential_functional(
        law, p0, alpha, pool_size, rng, tail_tol=tail_tol, sampler=sampler,
        max_steps=max_steps)
    w = 1.0 / values
    ess = float(w.sum() ** 2 / np.sum(w ** 2))
    probs = w / w.sum()
    idx = rng.choice(pool_size, size=int(n), p=probs)
    y = values[idx] ** (1.0 / alpha)
    return LimitSample(
        values=y,
        ess=ess,
        ess_flag=bool(ess < 0.10 * pool_size),
        normalization=float(w.mean() / (alpha * kp)),
        pool_size=int(pool_size),
        tail_tol=float(tail_tol),
    )
