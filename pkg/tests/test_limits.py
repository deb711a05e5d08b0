"""Limit-theorem checks: rescaled measures, KS harness, generator."""

import json
import math

import numpy as np
import pytest

from ssbranch import limits, replaw
from ssbranch.errors import ConfigError, UnsupportedRegime
from ssbranch.measures import FinitePointMeasure

DB = replaw.DeterministicBinary()
UB = replaw.UniformBinary()
MIX = replaw.DiscreteMixture(components=(
    (0.2, (1.3, 0.5)), (0.8, (0.4,))))
P0_MIX = replaw.malthusian_exponent(MIX)


# -- weighted empirical measures --------------------------------------------

def test_weighted_measure_basics():
    m = limits.WeightedEmpiricalMeasure(np.array([2.0, 1.0]),
                                        np.array([0.5, 1.5]))
    assert m.total_weight == pytest.approx(2.0)
    assert list(m.items()) == [(2.0, 0.5), (1.0, 1.5)]
    got = m.integrate(lambda x: x ** 2)
    assert got == pytest.approx(0.5 * 4.0 + 1.5 * 1.0)


@pytest.mark.parametrize("locs,wts", [
    ([1.0, 2.0], [1.0]),              # length mismatch
    ([0.0, 2.0], [1.0, 1.0]),         # nonpositive location
    ([1.0, 2.0], [-1.0, 1.0]),        # negative weight
    ([math.inf, 2.0], [1.0, 1.0]),
])
def test_weighted_measure_validation(locs, wts):
    with pytest.raises(ConfigError):
        limits.WeightedEmpiricalMeasure(np.asarray(locs, dtype=float),
                                        np.asarray(wts, dtype=float))


def test_sigma_t_rescales_and_conserves():
    snap = FinitePointMeasure([0.5, 0.2, 0.1])
    t, alpha, p0 = 4.0, 2.0, P0_MIX
    sig = limits.sigma_t(snap, t, alpha, p0)
    np.testing.assert_allclose(np.sort(sig.locations),
                               np.sort(t ** (1.0 / alpha) * snap.atoms),
                               rtol=1e-15)
    assert sig.total_weight == pytest.approx(
        float(np.sum(snap.atoms ** p0)), rel=1e-15)


def test_sigma_t_regime_validation():
    snap = FinitePointMeasure([1.0])
    with pytest.raises(UnsupportedRegime):
        limits.sigma_t(snap, 1.0, 0.0, 1.0)
    with pytest.raises(ConfigError):
        limits.sigma_t(snap, -1.0, 1.0, 1.0)
    with pytest.raises(ConfigError):
        limits.sigma_t(snap, math.inf, 1.0, 1.0)


# -- the KS harness ----------------------------------------------------------

def test_ks_two_sample_same_law_passes():
    rng = np.random.default_rng(0)
    rep = limits.ks_two_sample(rng.normal(size=4000),
                               rng.normal(size=4000))
    assert rep.verdict == limits.PASS
    assert rep.passed
    assert rep.p_value > 0.01
    assert rep.n_samples == 8000


def test_ks_two_sample_shifted_fails():
    rng = np.random.default_rng(1)
    rep = limits.ks_two_sample(rng.normal(size=4000),
                               rng.normal(size=4000) + 0.3)
    assert rep.verdict == limits.FAIL
    assert not rep.passed


def test_ks_two_sample_needs_data():
    with pytest.raises(ConfigError):
        limits.ks_two_sample(np.array([]), np.array([1.0]))


# -- reports -----------------------------------------------------------------

def test_report_passed_property():
    base = dict(name="x", statistic=1.0, threshold=2.0, n_samples=10)
    assert limits.TestReport(verdict=limits.PASS, **base).passed
    assert limits.TestReport(verdict=limits.LATTICE_CAVEAT, **base).passed
    assert not limits.TestReport(verdict=limits.FAIL, **base).passed


def test_reports_json_round_trip(tmp_path):
    reps = [limits.TestReport(name="a", statistic=0.5, threshold=1.0,
                              verdict=limits.PASS, n_samples=3,
                              p_value=0.7,
                              metadata={"law": {"type": "uniform_binary"},
                                        "alpha": 1.0, "seed": 9}),
            limits.TestReport(name="b", statistic=float("nan"),
                              threshold=1.0, verdict=limits.FAIL,
                              n_samples=1,
                              metadata={"oops": float("inf")})]
    path = tmp_path / "reports.json"
    limits.write_reports_json(reps, path)
    loaded = json.loads(path.read_text())
    assert [r["name"] for r in loaded] == ["a", "b"]
    assert loaded[0]["p_value"] == 0.7
    # non-finite floats must not leak into the JSON as bare tokens
    assert loaded[1]["statistic"] is None
    assert loaded[1]["metadata"]["oops"] == "inf"


def test_reports_csv_layout(tmp_path):
    rep = limits.TestReport(name="a", statistic=0.125, threshold=1.0,
                            verdict=limits.PASS, n_samples=3,
                            metadata={"law": {"type": "uniform_binary"},
                                      "alpha": 1.0, "t": 5.0, "seed": 2})
    text = limits.reports_csv_text([rep])
    lines = text.strip().split("\n")
    assert lines[0] == ("name,law,alpha,t,statistic,threshold,verdict,"
                        "seed")
    assert lines[1].startswith("a,")
    assert ",0.125," in lines[1]
    path = tmp_path / "reports.csv"
    limits.write_reports_csv([rep], path)
    assert path.read_text() == text


# -- mean measure ------------------------------------------------------------

def test_mean_measure_small_run_passes():
    rep = limits.mean_measure_test(UB, 1.0, 20.0, lambda y: np.exp(-y),
                                   n_replicas=2500, seed=3,
                                   n_limit=4000)
    assert rep.passed, rep.metadata
    assert rep.verdict == limits.PASS
    assert rep.statistic < rep.threshold


def test_mean_measure_lattice_caveat():
    rep = limits.mean_measure_test(DB, 1.0, 10.0, lambda y: np.exp(-y),
                                   n_replicas=500, seed=3, n_limit=500)
    assert rep.verdict == limits.LATTICE_CAVEAT
    assert rep.passed


def test_mean_measure_regime_validation():
    with pytest.raises(UnsupportedRegime):
        limits.mean_measure_test(UB, 0.0, 5.0, lambda y: y,
                                 n_replicas=10, seed=0)


# -- moment scaling ----------------------------------------------------------

def test_moment_scaling_requires_band():
    with pytest.raises(ConfigError):
        limits.moment_scaling_test(MIX, 1.0, 0.1, [5.0, 10.0], 100, 0)
    with pytest.raises(ConfigError):
        limits.moment_scaling_test(MIX, 1.0, 7.0, [5.0, 10.0], 100, 0)


def test_moment_scaling_at_p0_is_exact():
    # p = p0 degenerates to the conserved normalization on both sides
    rep = limits.moment_scaling_test(UB, 1.0, 1.0, [5.0, 15.0],
                                     n_replicas=400, seed=11,
                                     n_limit=400)
    assert rep.passed, rep.metadata
    assert rep.statistic < 1e-9


def test_moment_scaling_interior_power():
    rep = limits.moment_scaling_test(UB, 1.0, 2.0, [5.0, 15.0],
                                     n_replicas=4000, seed=11,
                                     n_limit=6000)
    assert rep.passed, rep.metadata
    assert "deviations" in rep.metadata


# -- Lp convergence ----------------------------------------------------------

def test_lp_convergence_small_run():
    rep = limits.lp_convergence_test(UB, 1.0, lambda y: np.exp(-y),
                                     [10.0, 30.0], n_replicas=1500,
                                     seed=5)
    assert rep.passed, rep.metadata
    assert rep.threshold == 0.02
    assert rep.metadata["p_exp"] == 1.5


# -- generator ---------------------------------------------------------------

def test_generator_apply_zero_function():
    y = FinitePointMeasure([1.0, 0.3])
    assert limits.generator_apply(MIX, 1.0, lambda v: 0.0 * v, y) == 0.0


def test_generator_apply_single_atom_closed_form():
    # identity g on one unit atom: each component contributes
    # prob * (e^{-sum s} - e^{-1}), the empty component e^0 = 1
    y = FinitePointMeasure([1.0])
    want = (0.2 * (math.exp(-1.8) - math.exp(-1.0))
            + 0.8 * (math.exp(-0.4) - math.exp(-1.0)))
    got = limits.generator_apply(MIX, 1.0, lambda v: v, y)
    assert got == pytest.approx(want, rel=1e-12)


def test_generator_apply_two_atoms_additive_in_branches():
    a, b = 1.0, 0.5
    y = FinitePointMeasure([a, b])
    g = lambda v: v

    def gap(x):
        return (0.2 * (math.exp(-1.8 * x) - math.exp(-x))
                + 0.8 * (math.exp(-0.4 * x) - math.exp(-x)))

    alpha = 1.0
    want = (a ** alpha * math.exp(-b) * gap(a)
            + b ** alpha * math.exp(-a) * gap(b))
    got = limits.generator_apply(MIX, alpha, g, y)
    assert got == pytest.approx(want, rel=1e-12)


def test_generator_apply_monte_carlo_branch():
    # uniform-binary has no atom table; the MC route must agree with
    # the analytic E[e^{-s} e^{-(1-s)}] = e^{-1} for g = id
    y = FinitePointMeasure([1.0])
    got = limits.generator_apply(UB, 1.0, lambda v: v, y,
                                 mc_budget=200000,
                                 rng=np.random.default_rng(0))
    assert got == pytest.approx(0.0, abs=1e-12)


def test_generator_apply_rejects_negative_g():
    y = FinitePointMeasure([1.0])
    with pytest.raises(ConfigError):
        limits.generator_apply(MIX, 1.0, lambda v: -v, y)


def test_generator_check_small_budget():
    rep = limits.generator_check(MIX, 1.0, lambda v: v, 1.0, 1e-2,
                                 n_replicas=40000, seed=17, rel_tol=0.2)
    assert rep.passed, rep.metadata
    assert rep.metadata["generator_value"] == pytest.approx(
        limits.generator_apply(MIX, 1.0, lambda v: v,
                               FinitePointMeasure([1.0])), rel=1e-12)


def test_short_time_derivative_validation():
    with pytest.raises(ConfigError):
        limits.short_time_derivative(MIX, 1.0, lambda v: v, 0.0, 1e-3,
                                     100, 0)
