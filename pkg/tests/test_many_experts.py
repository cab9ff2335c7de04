import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robagg.constructions import chain_spec
from robagg.errors import DomainError, IndexOutOfRange
from robagg.many_experts import (
    CountingScheme,
    ForecastCountStat,
    bayesian_floor,
    bayesian_floor_by_pooling,
    chain_confusion_tv,
    counting_scheme_error,
    expected_high_fraction,
    fraction_gap,
    fraction_gap_at,
    hoeffding_bound,
    k_for_n,
    regret_curve,
    wilson_interval,
)


@pytest.mark.parametrize("k", [1, 2, 3, 7, 20])
def test_floor_two_routes(k):
    assert bayesian_floor(k) == pytest.approx(bayesian_floor_by_pooling(k), abs=1e-12)


def test_floor_exact_small_k():
    spec = chain_spec(3, exact=True)
    a, mu = spec.alpha, spec.mu
    assert bayesian_floor(3, spec) == (1 - a[0] * (1 - mu[0]) - mu[-1] * a[-1]) / 4
    assert isinstance(bayesian_floor(3, spec), Fraction)


def test_single_link_floor_is_zero():
    # a one-link chain has nothing confusable, so the aggregator learns the state
    assert bayesian_floor(1) == pytest.approx(0, abs=1e-15)
    assert bayesian_floor_by_pooling(1) == pytest.approx(0, abs=1e-15)


def test_floor_approaches_quarter():
    vals = [bayesian_floor(k) for k in (2, 5, 20, 100)]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert 0.25 - vals[-1] < 0.01


@pytest.mark.parametrize("k", [2, 5, 30, 200])
def test_tail_mass_bound(k):
    spec = chain_spec(k)
    a, mu = spec.alpha, spec.mu
    assert a[0] * (1 - mu[0]) + mu[-1] * a[-1] <= 1 / (2 * k) + 1.53 / (2 * k)


def test_confusion_tv_small():
    spec = chain_spec(10)
    assert max(chain_confusion_tv(spec, m) for m in range(1, 10)) < 1e-12
    with pytest.raises(IndexOutOfRange):
        chain_confusion_tv(spec, 10)


def test_confusion_tv_exact_zero():
    spec = chain_spec(6, exact=True)
    assert all(chain_confusion_tv(spec, m) == 0 for m in range(1, 6))


def test_gap_first_link_closed_form():
    for k in (1, 4, 25):
        assert fraction_gap(k, 1) == pytest.approx(1 / (2 * k), abs=1e-15)


def test_gap_decreasing_in_y():
    k = 8
    ys = np.linspace(0.5, 0.9, 100)
    gaps = [fraction_gap_at(k, y) for y in ys]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert min(gaps) > 1 / (6 * k)


def test_high_fraction_ordering():
    spec = chain_spec(5)
    for m in range(1, 6):
        assert expected_high_fraction(5, m, 1, spec) > expected_high_fraction(5, m, 0, spec)
    with pytest.raises(IndexOutOfRange):
        expected_high_fraction(5, 6, 1, spec)


def test_count_stat():
    stat = ForecastCountStat.from_forecasts([0.4, 0.6, 0.6, 0.4, 0.6])
    assert (stat.n, stat.count_high) == (5, 3)
    assert stat.q == 0.6
    with pytest.raises(DomainError):
        ForecastCountStat(3, 4)


def test_counting_scheme_tie_goes_to_one():
    s = CountingScheme(3, 2)
    mid = (s.q0 + s.q1) / 2
    assert s.decide_counts([mid * 10**6], 10**6)[0] == 1
    assert s.decide(ForecastCountStat(10, 0)) == 0
    assert s.decide(ForecastCountStat(10, 10)) == 1
    assert s((0.6,) * 9 + (0.4,)) in (0, 1)


@given(st.integers(1, 6), st.integers(1, 400), st.data())
@settings(max_examples=100, deadline=None)
def test_scalar_and_vector_decisions_agree(k, n, data):
    m = data.draw(st.integers(1, k))
    c = data.draw(st.integers(0, n))
    s = CountingScheme(k, m)
    assert s.decide(ForecastCountStat(n, c)) == s.decide_counts([c], n)[0]


def test_error_reproducible_and_worker_independent():
    a = counting_scheme_error(2, 50, 400, seed=3)
    b = counting_scheme_error(2, 50, 400, seed=3)
    c = counting_scheme_error(2, 50, 400, seed=3, workers=2)
    assert a == b
    assert a.errors == c.errors
    assert a.errors > 0  # small n: the scheme does err


def test_fixed_link_simulation():
    res = counting_scheme_error(3, 2000, 500, seed=0, m=2)
    assert res.m == 2
    with pytest.raises(IndexOutOfRange):
        counting_scheme_error(3, 2000, 10, seed=0, m=4)
    with pytest.raises(DomainError):
        counting_scheme_error(3, 2000, 0, seed=0)


@pytest.mark.parametrize("k", [2, 3, 5])
@pytest.mark.parametrize("n", [1000, 10_000])
def test_hoeffding_sweep(k, n):
    res = counting_scheme_error(k, n, 10_000, seed=k * n)
    assert res.within_bound
    assert res.bound == pytest.approx(math.exp(-n / (72 * k * k)))
    assert res.wilson_low <= res.error_rate <= res.wilson_high


def test_wilson_interval():
    lo, hi = wilson_interval(0, 100)
    assert lo == 0 and 0 < hi < 0.05
    assert wilson_interval(0, 0) == (0.0, 1.0)


def test_hoeffding_bound_decreasing():
    assert hoeffding_bound(3, 1000) > hoeffding_bound(3, 2000) > hoeffding_bound(3, 4000)


def test_k_for_n():
    assert k_for_n(1000) == 1
    assert [k_for_n(n) for n in (10**4, 10**5, 10**6)] == [4, 11, 32]


def test_regret_curve_rows():
    rows = regret_curve([1000, 10**4, 10**5, 10**6], seed=0)
    assert rows[0].degenerate and not rows[1].degenerate
    assert all(r.ok for r in rows)
    floors = [r.implied_floor for r in rows]
    assert all(b >= a for a, b in zip(floors, floors[1:]))
    assert rows[-1].to_dict()["ok"] is True


def test_regret_curve_with_trials():
    rows = regret_curve([10**4], seed=1, trials=200)
    assert rows[0].empirical_error is not None
    with pytest.raises(DomainError):
        regret_curve([2], seed=0)
