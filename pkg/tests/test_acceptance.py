"""Acceptance battery, one test per criterion.

Every criterion lives in ssbranch.acceptance and returns TestReport
objects; the tests assert the verdicts and also pin the stated
tolerances, so an edit of the battery cannot silently loosen a bound.
Criteria that cover several laws are split so the run log shows one
pass/fail line per criterion leg.

One leg is a documented failure: the mixed-law endpoint comparison
(test_c13_rescaled_size_mixed).  At any finite horizon the tagged
size under that law is supported on finitely many products of three
log ratios, and the largest atom carries about 7% of the mass, which
floors the Kolmogorov-Smirnov distance to the continuous limit above
the 0.05 bound.  The criterion is asserted as stated and marked
xfail(strict=True); if the statistic ever drops below the bound the
suite flags it so the mark can be removed.
"""

import pytest

from ssbranch import acceptance

# criterion outputs are reused when one function backs several tests
_cache = {}


def _reports(fn):
    if fn.__name__ not in _cache:
        _cache[fn.__name__] = {r.name: r for r in fn()}
    return _cache[fn.__name__]


def _single(fn):
    reps = _reports(fn)
    assert len(reps) == 1
    return next(iter(reps.values()))


def _line(r):
    return (f"{r.name}: {r.verdict}  statistic={r.statistic:.6g} "
            f"threshold={r.threshold:.6g}  metadata={r.metadata}")


def test_c01_malthusian_exactness():
    r = _single(acceptance.criterion_01_solver)
    assert r.threshold == 1e-8
    assert r.passed, _line(r)


def test_c02_martingale_normalization():
    r = _single(acceptance.criterion_02_normalization)
    assert r.threshold == 4.0
    assert r.passed, _line(r)


def test_c03_martingale_step():
    r = _single(acceptance.criterion_03_step)
    assert r.threshold == 4.0
    assert r.passed, _line(r)


def test_c04_supermartingale():
    r = _single(acceptance.criterion_04_supermartingale)
    assert r.threshold == 4.0
    assert r.passed, _line(r)


def test_c05_extinction_dichotomy():
    r = _single(acceptance.criterion_05_extinction)
    assert r.threshold == 4.0
    assert r.passed, _line(r)


def test_c06_branching_property():
    r = _single(acceptance.criterion_06_branching)
    assert r.threshold == 0.01
    assert r.passed, _line(r)


def test_c07_scaling_property():
    r = _single(acceptance.criterion_07_scaling)
    assert r.threshold == 0.01
    assert r.passed, _line(r)


def test_c08_spine_identity():
    r = _single(acceptance.criterion_08_spine_identity)
    assert r.threshold == 4.0
    assert r.passed, _line(r)


def test_c09_walk_law():
    r = _single(acceptance.criterion_09_walk_law)
    assert r.threshold == 0.02
    assert r.passed, _line(r)


def test_c10_lifetimes():
    r = _single(acceptance.criterion_10_lifetimes)
    assert r.threshold == 0.02
    assert r.passed, _line(r)


def test_c11_lamperti_equivalence():
    r = _single(acceptance.criterion_11_lamperti)
    assert r.threshold == 0.01
    assert r.passed, _line(r)


def test_c12_exponential_functional():
    r = _single(acceptance.criterion_12_exponential_functional)
    assert r.threshold == 4.0
    assert r.passed, _line(r)


def test_c13_rescaled_size_uniform():
    r = _reports(acceptance.criterion_13_rescaled_size)[
        "c13_rescaled_size_uniform"]
    assert r.threshold == 0.05
    assert r.passed, _line(r)


@pytest.mark.xfail(
    strict=True,
    reason="the mixed law's tagged size at t=50 is atomic (top atom "
           "about 7% of the mass), which floors the KS distance to the "
           "continuous limit above 0.05; measured 0.062 at the battery "
           "seed; bound asserted as stated")
def test_c13_rescaled_size_mixed():
    r = _reports(acceptance.criterion_13_rescaled_size)[
        "c13_rescaled_size_mixed"]
    assert r.threshold == 0.05
    assert r.passed, _line(r)


def test_c14_moment_scaling():
    r = _single(acceptance.criterion_14_moment_scaling)
    assert r.passed, _line(r)


def test_c15_lp_convergence():
    r = _single(acceptance.criterion_15_lp_convergence)
    assert r.threshold == 0.02
    assert r.passed, _line(r)


def test_c16_generator():
    r = _single(acceptance.criterion_16_generator)
    assert r.threshold == 0.05
    assert r.passed, _line(r)


def test_c17_covering_line():
    r = _single(acceptance.criterion_17_covering_line)
    assert r.threshold == 4.0
    assert r.passed, _line(r)


def test_c18_honest_failure():
    r = _single(acceptance.criterion_18_honest_failure)
    assert r.passed, _line(r)


def test_expected_failures_ledger():
    # the documented-failure set must stay in sync with the xfail marks
    assert acceptance.EXPECTED_FAILURES == {"c13_rescaled_size_mixed"}
