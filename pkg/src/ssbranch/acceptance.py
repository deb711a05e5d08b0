"""The fixed verification battery.

Eighteen numbered checks cover the solver, the martingale structure,
the branching and scaling properties, the spine representation, the
exponential functional, the long-time limits, the generator, optional
lines, and the honest failure of the default Dirichlet law.  Each
criterion function returns TestReports whose verdicts are deterministic
functions of the seed; ``run_all`` executes the battery in order.

Check 13's second leg (the discrete mixture) fails by design: at t=50
that law's tagged size is still supported on a few hundred atoms, the
largest carrying about 7% of the mass, which floors the KS distance to
the continuous limit above the stated bound.  The report says so
rather than hiding the leg.

Fixed laws used throughout:

  binary     two daughters of ratio 1/2 (lattice, conserves p0-mass)
  uniform    daughters (U, 1-U) (continuous, conserves mass at p0=1)
  mixed      {(0.2, [1.3, 0.5]), (0.8, [0.4])}
  extinct    {(0.75, [0.6, 0.6]), (0.25, [])}, dies out w.p. 1/3
  dirichlet  scaled Dirichlet(1, 1), no Malthusian exponent
"""

from __future__ import annotations

import math

import numpy as np

from . import limits, replaw, rngstream, tagged, tree
from .errors import NoMalthusianExponent
from .limits import FAIL, PASS, TestReport
from .measures import FinitePointMeasure

ACCEPTANCE_SEED = 42

BINARY = replaw.DeterministicBinary()
UNIFORM = replaw.UniformBinary()
MIXED = replaw.DiscreteMixture(components=((0.2, (1.3, 0.5)),
                                           (0.8, (0.4,))))
EXTINCT = replaw.DiscreteMixture(components=((0.75, (0.6, 0.6)),
                                             (0.25, ())))
DIRICHLET = replaw.DirichletScaled(weights=(1.0, 1.0))

# closed-form anchors, frozen; the solver must land on these
P0_EXTINCT = math.log(2.0 / 3.0) / math.log(0.6)
Q_EXTINCT = 1.0 / 3.0


def _report(name, statistic, threshold, ok, n, seed, **md):
    md.setdefault("seed", int(seed))
    return TestReport(name=name, statistic=float(statistic),
                      threshold=float(threshold),
                      verdict=PASS if ok else FAIL, n_samples=int(n),
                      metadata=md)


def _rng(seed, tag):
    return np.random.default_rng(rngstream.replica_seed(seed, (1 << 40) + tag))


# -- 1 ----------------------------------------------------------------------

def criterion_01_solver(seed=ACCEPTANCE_SEED):
    """Malthusian exponents hit closed forms and a bisection oracle."""
    p0_bin = replaw.malthusian_exponent(BINARY)
    p0_ext = replaw.malthusian_exponent(EXTINCT)
    p0_mix = replaw.malthusian_exponent(MIXED)
    oracle = _bisect_root(MIXED, 1e-10)
    errs = {
        "binary": abs(p0_bin - 1.0),
        "extinct": abs(p0_ext - P0_EXTINCT),
        "mixed_vs_bisection": abs(p0_mix - oracle),
    }
    ok = (errs["binary"] < 1e-12 and errs["extinct"] < 1e-9
          and errs["mixed_vs_bisection"] < 1e-8)
    return [_report("c01_malthusian_exactness", max(errs.values()), 1e-8,
                    ok, 3, seed, errors=errs, p0_mixed=p0_mix,
                    oracle=oracle)]


def _bisect_root(law, tol):
    # plain bisection on kappa, independent of the production solver
    lo, hi = 1e-9, 1.0
    while replaw.kappa(law, hi) < 0:
        hi *= 2.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if replaw.kappa(law, mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- 2, 3, 4 ----------------------------------------------------------------

def _z_of_mean(x, target, atol=1e-9):
    """Sigma distance of the sample mean from target.

    Mass-conserving laws make the martingale constant, so the standard
    error degenerates to float noise; those samples compare directly at
    tolerance ``atol`` instead of dividing by a ~1e-19 denominator.
    """
    se = x.std(ddof=1) / math.sqrt(x.size)
    if se < 1e-12:
        return 0.0 if abs(float(x.mean()) - target) < atol else float("inf")
    return abs(float(x.mean()) - target) / se


def _gen_martingales(law, p, n_gens, n_replicas, seed, normalize=True):
    _, msums = tree.martingale_generation_sample(
        law, 1.0, (p,), n_gens, n_replicas, seed)
    m = msums[:, 0, :]
    if normalize:
        scale = replaw.moment(law, p) ** np.arange(n_gens + 1)
        m = m / scale
    return m


def criterion_02_normalization(seed=ACCEPTANCE_SEED, n_replicas=10 ** 4):
    """E M_8 = 1 for uniform and mixed; binary is 1 on every path."""
    out, worst = {}, 0.0
    ok = True
    for name, law in (("uniform", UNIFORM), ("mixed", MIXED)):
        p0 = replaw.malthusian_exponent(law)
        m8 = _gen_martingales(law, p0, 8, n_replicas, seed)[:, -1]
        z = _z_of_mean(m8, 1.0)
        out[name] = {"mean": float(m8.mean()), "z": float(z)}
        worst = max(worst, z)
        ok = ok and z < 4.0
    binm = _gen_martingales(BINARY, 1.0, 10, 64, seed)
    exact = bool(np.all(binm == 1.0))
    ok = ok and exact
    out["binary_exact"] = exact
    return [_report("c02_martingale_normalization", worst, 4.0, ok,
                    2 * n_replicas + 64, seed, **out)]


def criterion_03_step(seed=ACCEPTANCE_SEED, n_replicas=10 ** 4):
    """Paired increments M_{n+1} - M_n center on 0 for n = 5..8."""
    out, worst = {}, 0.0
    ok = True
    for name, law in (("uniform", UNIFORM), ("mixed", MIXED)):
        p0 = replaw.malthusian_exponent(law)
        m = _gen_martingales(law, p0, 9, n_replicas, seed)
        zs = []
        for n in range(5, 9):
            zs.append(_z_of_mean(m[:, n + 1] - m[:, n], 0.0))
        out[name] = [float(z) for z in zs]
        worst = max(worst, max(zs))
        ok = ok and max(zs) < 4.0
    return [_report("c03_martingale_step", worst, 4.0, ok,
                    2 * n_replicas, seed, z_by_generation=out)]


def criterion_04_supermartingale(seed=ACCEPTANCE_SEED, n_replicas=10 ** 4):
    """Unnormalized p-power sums shrink in mean for p inside the band."""
    p = 1.0                      # p0 = 0.278 < 1 < p_+ = 6.11
    m = _gen_martingales(MIXED, p, 9, n_replicas, seed, normalize=False)
    zs = []
    for n in range(5, 9):
        d = m[:, n + 1] - m[:, n]
        se = d.std(ddof=1) / math.sqrt(n_replicas)
        zs.append(d.mean() / se if se > 0 else 0.0)
    worst = max(zs)
    ok = worst <= 4.0
    return [_report("c04_supermartingale", worst, 4.0, ok, n_replicas,
                    seed, law=replaw.law_to_spec(MIXED), p=p,
                    z_by_generation=[float(z) for z in zs])]


# -- 5 ----------------------------------------------------------------------

def criterion_05_extinction(seed=ACCEPTANCE_SEED, n_replicas=10 ** 4,
                            chunk=1000):
    """Fraction of dead-by-generation-20 replicas equals q = 1/3."""
    p0 = replaw.malthusian_exponent(EXTINCT)
    dead = 0
    for start in range(0, n_replicas, chunk):
        n = min(chunk, n_replicas - start)
        _, msums = tree.martingale_generation_sample(
            EXTINCT, 1.0, (p0,), 20, n, seed, replica_start=start)
        dead += int(np.sum(msums[:, 0, -1] < 1e-6))
    frac = dead / n_replicas
    se = math.sqrt(Q_EXTINCT * (1 - Q_EXTINCT) / n_replicas)
    z = abs(frac - Q_EXTINCT) / se
    return [_report("c05_extinction_dichotomy", z, 4.0, z < 4.0,
                    n_replicas, seed, law=replaw.law_to_spec(EXTINCT),
                    fraction=frac, q=Q_EXTINCT, se=se)]


# -- 6 ----------------------------------------------------------------------

def criterion_06_branching(seed=ACCEPTANCE_SEED, n_replicas=10 ** 4):
    """Regrow-from-snapshot matches direct growth at t + r."""
    law, alpha, t, r = UNIFORM, 1.0, 1.0, 1.0
    p0 = 1.0
    # direct: two independent batches straight to t + r
    c_a, m_a, _, _, _ = tree.population_time_sample(
        law, alpha, [t + r], (p0,), rngstream.replica_seed(seed, 1),
        n_replicas=n_replicas, x=1.0)
    # regrown: snapshot at t, then fresh subtrees for another r
    _, _, _, atoms, owners = tree.population_time_sample(
        law, alpha, [t], (p0,), rngstream.replica_seed(seed, 2),
        n_replicas=n_replicas, x=1.0, collect=True)
    c_b, m_b, _, _, _ = tree.population_time_sample(
        law, alpha, [r], (p0,), rngstream.replica_seed(seed, 3),
        root_sizes=atoms[0], owners=owners[0], n_owners=n_replicas)
    ks_m = limits.ks_two_sample(m_a[:, 0, 0], m_b[:, 0, 0],
                                name="c06_mass")
    ks_c = limits.ks_two_sample(c_a[:, 0].astype(float),
                                c_b[:, 0].astype(float), name="c06_counts")
    ok = ks_m.passed and ks_c.passed
    return [_report("c06_branching_property",
                    min(ks_m.p_value, ks_c.p_value), 0.01, ok,
                    2 * n_replicas, seed, law=replaw.law_to_spec(law),
                    alpha=alpha, p_mass=ks_m.p_value,
                    p_counts=ks_c.p_value,
                    mean_counts=[float(c_a[:, 0].mean()),
                                 float(c_b[:, 0].mean())])]


# -- 7 ----------------------------------------------------------------------

def criterion_07_scaling(seed=ACCEPTANCE_SEED, n_replicas=10 ** 4):
    """c X(c^alpha t) from root 1 matches X(t) from root c, c = 2.

    The conserved-mass laws make both sides constant, so the discrete
    mixture carries the comparison.
    """
    law, alpha, c, t = MIXED, 1.0, 2.0, 1.0
    p0 = replaw.malthusian_exponent(law)
    _, m_a, _, _, _ = tree.population_time_sample(
        law, alpha, [c ** alpha * t], (p0,), rngstream.replica_seed(seed, 1),
        n_replicas=n_replicas, x=1.0)
    scaled_a = c ** p0 * m_a[:, 0, 0]      # <x^p0, c X(c^a t)>
    _, m_b, _, _, _ = tree.population_time_sample(
        law, alpha, [t], (p0,), rngstream.replica_seed(seed, 2),
        n_replicas=n_replicas, x=c)
    # both routes land on the same atomic values through different float
    # paths; align the 1-ulp splits so the KS ties line up
    ks = limits.ks_two_sample(np.round(scaled_a, 9),
                              np.round(m_b[:, 0, 0], 9), name="c07")
    return [_report("c07_scaling_property", ks.p_value, 0.01, ks.passed,
                    2 * n_replicas, seed, law=replaw.law_to_spec(law),
                    alpha=alpha, p_value=ks.p_value,
                    means=[float(scaled_a.mean()),
                           float(m_b[:, 0, 0].mean())])]


# -- 8 ----------------------------------------------------------------------

def criterion_08_spine_identity(seed=ACCEPTANCE_SEED, n_replicas=10 ** 4):
    """E<x^p0 k(x), X(t)> equals the tagged expectation of k(chi(t))."""
    alpha = 1.0
    k = lambda x: np.exp(-x)
    sub, worst = {}, 0.0
    ok = True
    for name, law in (("uniform", UNIFORM), ("mixed", MIXED)):
        p0 = replaw.malthusian_exponent(law)
        t_grid = [1.0, 3.0]
        _, _, _, atoms, owners = tree.population_time_sample(
            law, alpha, t_grid, (p0,), rngstream.replica_seed(seed, 1),
            n_replicas=n_replicas, x=1.0, collect=True)
        chi = tagged.chi_time_samples(law, p0, alpha, t_grid, n_replicas,
                                      _rng(seed, 2))
        for ti, t in enumerate(t_grid):
            per = np.zeros(n_replicas)
            if atoms[ti].size:
                np.add.at(per, owners[ti], atoms[ti] ** p0 * k(atoms[ti]))
            a, b = per, k(chi[:, ti])
            se = math.hypot(a.std(ddof=1), b.std(ddof=1)) / math.sqrt(
                n_replicas)
            z = abs(a.mean() - b.mean()) / se
            sub[f"{name}_t{t:g}"] = {"tree": float(a.mean()),
                                     "tagged": float(b.mean()),
                                     "z": float(z)}
            worst = max(worst, z)
            ok = ok and z < 4.0
    return [_report("c08_spine_identity", worst, 4.0, ok,
                    4 * n_replicas, seed, **sub)]


# -- 9, 10 ------------------------------------------------------------------

def criterion_09_walk_law(seed=ACCEPTANCE_SEED, n=10 ** 5):
    """Uniform-binary spine steps: exact CDF and Laplace transform."""
    from scipy import stats

    p0 = 1.0
    sampler = replaw.step_sampler(UNIFORM, p0)
    s = sampler.sample(n, _rng(seed, 1))
    # S = 0.5 ln U so P(S <= y) = e^{2y} on y <= 0
    ks = stats.kstest(s, lambda y: np.exp(2.0 * np.minimum(y, 0.0)))
    zs = {}
    ok = ks.statistic < 0.02
    for p in (0.1, 0.5):
        vals = np.exp(p * s)
        target = replaw.moment(UNIFORM, p + p0)   # 1 - kappa(p + p0)
        se = vals.std(ddof=1) / math.sqrt(n)
        z = abs(vals.mean() - target) / se
        zs[f"p{p:g}"] = {"mean": float(vals.mean()), "target": target,
                         "z": float(z)}
        ok = ok and z < 4.0
    return [_report("c09_walk_law", ks.statistic, 0.02, ok, n, seed,
                    law=replaw.law_to_spec(UNIFORM),
                    ks_stat=float(ks.statistic), laplace=zs)]


def criterion_10_lifetimes(seed=ACCEPTANCE_SEED, n_walks=2500, n_steps=40):
    """Pooled chi^alpha * lifetime values are Exp(1)."""
    from scipy import stats

    rng = _rng(seed, 1)
    pool = []
    for _ in range(n_walks):
        path = tagged.simulate_tagged_walk(UNIFORM, 1.0, 1.0, n_steps, rng)
        pool.append(path.normalized_lifetimes(1.0))
    pool = np.concatenate(pool)
    ks = stats.kstest(pool, "expon")
    ok = ks.statistic < 0.02
    return [_report("c10_lifetimes", ks.statistic, 0.02, ok, pool.size,
                    seed, law=replaw.law_to_spec(UNIFORM),
                    pooled=int(pool.size))]


# -- 11 ---------------------------------------------------------------------

def criterion_11_lamperti(seed=ACCEPTANCE_SEED, n=10 ** 4):
    """Walk-route and clock-route chi(t) agree in law."""
    law, alpha, t = MIXED, 1.0, 5.0
    p0 = replaw.malthusian_exponent(law)
    a = tagged.chi_time_samples(law, p0, alpha, [t], n, _rng(seed, 1))[:, 0]
    b = tagged.lamperti_chi_samples(law, p0, alpha, t, n, _rng(seed, 2))
    ks = limits.ks_two_sample(a, b, name="c11")
    return [_report("c11_lamperti_equivalence", ks.p_value, 0.01,
                    ks.passed, 2 * n, seed, law=replaw.law_to_spec(law),
                    alpha=alpha, t=t, p_value=ks.p_value,
                    ks_stat=ks.statistic)]


# -- 12 ---------------------------------------------------------------------

def criterion_12_exponential_functional(seed=ACCEPTANCE_SEED, n=10 ** 5,
                                        tail_tol=1e-3):
    """Closed-form mean of I and of 1/I; certificates under tail_tol."""
    sub, worst = {}, 0.0
    ok = True
    cases = (("binary_EI", BINARY, 1.0, "I", 2.0, 11),
             ("binary_inv", BINARY, 1.0, "inv", math.log(2.0), 12),
             ("uniform_inv", UNIFORM, 1.0, "inv", 0.5, 13))
    for cname, law, alpha, kind, target, tag in cases:
        p0 = replaw.malthusian_exponent(law)
        vals, certs = tagged.sample_exponential_functional(
            law, p0, alpha, n, _rng(seed, tag), tail_tol=tail_tol)
        x = 1.0 / vals if kind == "inv" else vals
        se = x.std(ddof=1) / math.sqrt(n)
        z = abs(x.mean() - target) / se
        sub[cname] = {"mean": float(x.mean()), "target": target,
                      "z": float(z), "max_cert": float(certs.max())}
        worst = max(worst, z)
        ok = ok and z < 4.0 and certs.max() <= tail_tol
    return [_report("c12_exponential_functional", worst, 4.0, ok, 3 * n,
                    seed, tail_tol=tail_tol, **sub)]


# -- 13 ---------------------------------------------------------------------

def criterion_13_rescaled_size(seed=ACCEPTANCE_SEED, n=10 ** 4, t=50.0):
    """Rescaled tagged size at t = 50 against limit samples, KS < 0.05.

    The uniform-binary leg passes.  The mixed leg cannot: its tagged
    size at t = 50 is a product of a handful of fixed ratios, an atomic
    law whose largest atom (about 7% of the mass) floors the KS
    distance to the continuous limit above 0.05 no matter the sample
    size.  The leg is reported as measured.
    """
    alpha = 1.0
    out = []
    for name, law in (("uniform", UNIFORM), ("mixed", MIXED)):
        p0 = replaw.malthusian_exponent(law)
        chi = tagged.chi_time_samples(law, p0, alpha, [t], n,
                                      _rng(seed, 1))[:, 0]
        lim = tagged.sample_limit_size(law, p0, alpha, n, _rng(seed, 2))
        ks = limits.ks_two_sample(t ** (1.0 / alpha) * chi, lim.values,
                                  name=f"c13_{name}")
        out.append(_report(
            f"c13_rescaled_size_{name}", ks.statistic, 0.05,
            ks.statistic < 0.05, 2 * n, seed,
            law=replaw.law_to_spec(law), alpha=alpha, t=t,
            p_value=ks.p_value, ess=lim.ess,
            note=(None if name == "uniform" else
                  "atomic finite-t law floors the KS distance; "
                  "expected failure, see report docstring")))
    return out


# -- 14, 15 -----------------------------------------------------------------

def criterion_14_moment_scaling(seed=ACCEPTANCE_SEED, n_replicas=10 ** 5):
    """Scaled p-moments converge to the limit moment, monotonically."""
    rep = limits.moment_scaling_test(
        MIXED, 1.0, 1.0, [10.0, 30.0, 50.0], n_replicas, seed,
        n_limit=n_replicas)
    rep.name = "c14_moment_scaling"
    return [rep]


def criterion_15_lp_convergence(seed=ACCEPTANCE_SEED, n_replicas=4000):
    """L^1.5 distance to M_inf E k(Y) decreases and ends small."""
    rep = limits.lp_convergence_test(
        UNIFORM, 1.0, lambda y: np.exp(-y), [10.0, 30.0, 50.0],
        n_replicas, seed)
    rep.name = "c15_lp_convergence"
    return [rep]


# -- 16 ---------------------------------------------------------------------

def criterion_16_generator(seed=ACCEPTANCE_SEED, n_replicas=10 ** 6):
    """Short-time finite difference matches the generator formula."""
    rep = limits.generator_check(MIXED, 1.0, lambda x: x, 1.0, 1e-3,
                                 n_replicas, seed)
    rep.name = "c16_generator"
    return [rep]


# -- 17 ---------------------------------------------------------------------

def criterion_17_covering_line(seed=ACCEPTANCE_SEED, n_trees=10 ** 4):
    """Optional-line mass: 1 for a covering line, less if a lineage is
    missed.

    The covering line takes the first child's children plus the other
    root children, so it mixes generations 1 and 2; the non-covering
    antichain keeps only the first child's children and loses the mass
    of every other lineage.
    """
    out = {}
    # covering line on the mixed law
    p0 = replaw.malthusian_exponent(MIXED)
    masses = np.empty(n_trees)
    for r in range(n_trees):
        tr = tree.grow_to_generation(MIXED, 1.0, 1.0, 2,
                                     rngstream.replica_seed(seed, r))
        line = _mixed_generation_line(tr)
        assert tr.is_covering(line)
        masses[r] = tr.line_mass(line, p0)
    se = masses.std(ddof=1) / math.sqrt(n_trees)
    z_cov = abs(masses.mean() - 1.0) / se
    out["covering"] = {"mean": float(masses.mean()), "se": float(se),
                       "z": float(z_cov)}
    # non-covering antichain on the extinction law
    p0e = replaw.malthusian_exponent(EXTINCT)
    masses_nc = np.empty(n_trees)
    for r in range(n_trees):
        tr = tree.grow_to_generation(EXTINCT, 1.0, 1.0, 2,
                                     rngstream.replica_seed(seed + 1, r))
        line = [lab for lab in tr.nodes
                if len(lab) == 2 and lab[0] == 1]
        masses_nc[r] = tr.line_mass(line, p0e)
    se_nc = masses_nc.std(ddof=1) / math.sqrt(n_trees)
    gap = (1.0 - masses_nc.mean()) / se_nc        # must exceed 4
    out["non_covering"] = {"mean": float(masses_nc.mean()),
                           "se": float(se_nc), "gap_sigmas": float(gap)}
    ok = z_cov < 4.0 and gap > 4.0
    return [_report("c17_covering_line", z_cov, 4.0, ok, 2 * n_trees,
                    seed, **out)]


def _mixed_generation_line(tr):
    # grandchildren through the first child, the other children as is
    first = [lab for lab in tr.nodes if len(lab) == 2 and lab[0] == 1]
    rest = [lab for lab in tr.nodes if len(lab) == 1 and lab[0] != 1]
    return first + rest


# -- 18 ---------------------------------------------------------------------

def criterion_18_honest_failure(seed=ACCEPTANCE_SEED):
    """The default Dirichlet law has no Malthusian exponent; say so."""
    try:
        replaw.malthusian_exponent(DIRICHLET)
    except NoMalthusianExponent as exc:
        mm = exc.diagnostic.get("min_moment")
        ok = mm is not None and abs(mm - 1.4697) < 0.005
        return [_report("c18_honest_failure",
                        mm if mm is not None else float("nan"), 1.4697,
                        ok, 1, seed, law=replaw.law_to_spec(DIRICHLET),
                        diagnostic=exc.diagnostic)]
    return [_report("c18_honest_failure", float("nan"), 1.4697, False, 1,
                    seed, error="solver unexpectedly returned a root")]


CRITERIA = (
    criterion_01_solver,
    criterion_02_normalization,
    criterion_03_step,
    criterion_04_supermartingale,
    criterion_05_extinction,
    criterion_06_branching,
    criterion_07_scaling,
    criterion_08_spine_identity,
    criterion_09_walk_law,
    criterion_10_lifetimes,
    criterion_11_lamperti,
    criterion_12_exponential_functional,
    criterion_13_rescaled_size,
    criterion_14_moment_scaling,
    criterion_15_lp_convergence,
    criterion_16_generator,
    criterion_17_covering_line,
    criterion_18_honest_failure,
)

# legs that measure a genuine model-level gap; they fail by design and
# the reports document why
EXPECTED_FAILURES = frozenset({"c13_rescaled_size_mixed"})


def run_all(seed=ACCEPTANCE_SEED):
    reports = []
    for crit in CRITERIA:
        reports.extend(crit(seed))
    return reports


def summarize(reports):
    lines = []
    for r in reports:
        tag = r.verdict.upper()
        if r.name in EXPECTED_FAILURES and r.verdict == FAIL:
            tag = "FAIL (documented)"
        lines.append(f"{r.name}: {tag}  statistic={r.statistic:.6g} "
                     f"threshold={r.threshold:.6g}")
    return lines
