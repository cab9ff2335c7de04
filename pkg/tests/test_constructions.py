import math
from fractions import Fraction

import pytest

from robagg.constructions import (
    BLACKWELL_VALUE,
    GOLDEN_X,
    best_reply_mixture,
    blackwell_maxmin,
    chain_signal_law,
    chain_spec,
    chain_structure,
    ci_maxmin,
    correlated_delta,
    degroot_witness,
    fig1_martingale_law,
    parse_construction,
    sigma_k,
    xor_structure,
)
from robagg.core import enumerate_forecast_law
from robagg.errors import DomainError, IndexOutOfRange
from robagg.loss import MixedAdversary, bayes_reply_table, min_loss_against_mixture


def curve(x):
    return x / (1 - x) * (0.5 - x) ** 2


def test_xor_posteriors():
    s = xor_structure()
    assert s.prior == Fraction(1, 2)
    for fc, _, xhat in enumerate_forecast_law(s):
        assert fc == (Fraction(1, 2), Fraction(1, 2))
        assert xhat in (0, 1)


def test_degroot_witness_shape():
    s = degroot_witness()
    assert s.prior == Fraction(1, 2)
    assert {s.forecasts(p) for p, _, _ in s.profiles()} == {(Fraction(1, 2), 0), (Fraction(1, 2), 1)}


def test_fig1_branch_means():
    m = fig1_martingale_law()
    for _, x1, kids in m.branches:
        assert sum(q * v for q, v in kids) == x1


@pytest.mark.parametrize("x", [0.05 * i for i in range(1, 10)])
def test_maxmin_curves(x):
    assert float(min_loss_against_mixture(blackwell_maxmin(x))) == pytest.approx(curve(x), abs=1e-9)
    assert float(min_loss_against_mixture(ci_maxmin(x))) == pytest.approx(curve(x), abs=1e-9)


def test_maxmin_exact_rational():
    x = Fraction(1, 5)
    assert min_loss_against_mixture(blackwell_maxmin(x)) == x / (1 - x) * (Fraction(1, 2) - x) ** 2


def test_blackwell_disagreement_probability():
    x = Fraction(1, 5)
    adv = blackwell_maxmin(x)
    table = bayes_reply_table(adv)
    key = tuple(sorted((round(float(x), 12), round(float(1 - x), 12))))
    p = sum(prob for k, (prob, _) in table.items() if tuple(sorted(k)) == key)
    assert p == x / (1 - x)


def test_ci_maxmin_omniscient_at_half_pair():
    x = Fraction(1, 5)
    low = ci_maxmin(x).atoms[0][1].expand()
    vals = [xhat for fc, _, xhat in enumerate_forecast_law(low) if fc == (Fraction(1, 2), Fraction(1, 2))]
    assert vals == [1 - x]


def test_small_x_limit():
    assert float(min_loss_against_mixture(blackwell_maxmin(1e-6))) < 1e-6


def test_domain_errors():
    for bad in (0, 0.5, 0.7):
        with pytest.raises(DomainError):
            blackwell_maxmin(bad)
        with pytest.raises(DomainError):
            ci_maxmin(bad)
    with pytest.raises(DomainError):
        correlated_delta(0.6)


def test_correlated_posteriors_and_ignorant_forecast():
    d = Fraction(1, 10)
    adv = correlated_delta(d)
    p1 = adv.atoms[0][1]
    # state 1 with signals (s1, s2'): both experts forecast (1+d)/(2+d)
    assert p1.forecasts((0, 1)) == ((1 + d) / (2 + d), (1 + d) / (2 + d))
    table = bayes_reply_table(adv)
    pair = tuple(sorted((round(float((1 + d) / (2 + d)), 12), round(float((1 - d) / (2 - d)), 12))))
    best = [v for k, (_, v) in table.items() if tuple(sorted(k)) == pair]
    assert best and all(v == pytest.approx(float((2 - 2 * d * d) / (4 - 3 * d * d)), abs=1e-12) for v in best)


def test_correlated_informed_variance_zero():
    for d in (0.1, Fraction(1, 100)):
        for _, atom in correlated_delta(d).atoms:
            assert min_loss_against_mixture(MixedAdversary.single(atom)) == pytest.approx(0, abs=1e-15)


def test_correlated_exact_rational_matches_float():
    a = min_loss_against_mixture(correlated_delta(Fraction(1, 1000)))
    b = min_loss_against_mixture(correlated_delta(0.001))
    assert isinstance(a, Fraction)
    assert float(a) == pytest.approx(b, abs=1e-12)


def test_best_reply_mixture_is_symmetric():
    adv = best_reply_mixture(0.8, 0.3, 0.4)
    a, b = (s for _, s in adv.atoms)
    assert a.prior == pytest.approx(b.prior)


# ---------------------------------------------------------------------------
# chain


def test_chain_hand_instance_three_links():
    spec = chain_spec(1, length=3, exact=True)
    assert spec.y == (Fraction(1, 2), Fraction(9, 10), Fraction(81, 82))
    assert spec.mu == (Fraction(1, 2), Fraction(7, 10), Fraction(61, 82))
    assert spec.alpha == (Fraction(9, 65), Fraction(15, 65), Fraction(41, 65))


def test_chain_hand_instance_two_links():
    spec = chain_spec(1, length=2, exact=True)
    assert spec.alpha == (Fraction(3, 8), Fraction(5, 8))
    a, mu = spec.alpha, spec.mu
    assert a[0] * mu[0] / (a[0] * mu[0] + a[1] * (1 - mu[1])) == Fraction(1, 2)


def test_chain_posteriors_exact():
    k = 4
    spec = chain_spec(k, exact=True)
    for m in range(1, k + 1):
        ci = chain_structure(spec, m, 1)
        assert ci.posteriors(0) == (Fraction(1, 2) - Fraction(1, 4 * k), Fraction(1, 2) + Fraction(1, 4 * k))


@pytest.mark.parametrize("k", [1, 2, 5, 17, 60, 100])
def test_chain_y_mu_bounds(k):
    spec = chain_spec(k)
    assert spec.y[0] == 0.5
    for y, mu in zip(spec.y, spec.mu):
        assert 0.5 <= y < 0.9
        assert 0.5 <= mu <= 0.5 + 1 / (5 * k)


@pytest.mark.parametrize("k", [2, 9, 40])
def test_alpha_identity_and_same_index_variant(k):
    spec = chain_spec(k, exact=True)
    a, mu = spec.alpha, spec.mu
    assert sum(a) == 1
    for m in range(k - 1):
        assert a[m] * mu[m] == a[m + 1] * (1 - mu[m + 1])
    # the same-index form fails for every link
    assert all(a[m] * mu[m] != a[m + 1] * mu[m + 1] for m in range(k - 1))


def test_beta_bound_holds_up_to_26_and_fails_at_27():
    # exact arithmetic: the ceiling 3/2 on beta is first exceeded at k = 27
    assert max(chain_spec(26, exact=True).beta) < Fraction(3, 2)
    assert max(chain_spec(27, exact=True).beta) > Fraction(3, 2)


def test_beta_corrected_bound():
    # the growth factor is at most (1/2 + 1/(5k)) / (1/2 - 1/(5k)) per link
    for k in (3, 10, 50, 300):
        spec = chain_spec(k)
        r = (0.5 + 1 / (5 * k)) / (0.5 - 1 / (5 * k))
        for m, b in enumerate(spec.beta):
            assert 1 <= b <= r**m * (1 + 1e-12)
    assert max(chain_spec(10_000).beta) < 1.55


def test_sigma_weights():
    assert sigma_k(1, 3).atoms[0][0] == 1
    adv = sigma_k(5, 2)
    assert sum(w for w, _ in adv.atoms) == pytest.approx(1)
    assert len(adv.atoms) == 5


def test_chain_errors():
    spec = chain_spec(3)
    with pytest.raises(IndexOutOfRange):
        chain_signal_law(spec, 4)
    with pytest.raises(DomainError):
        chain_structure(spec, 1, 0)


def test_parse_construction():
    assert parse_construction("xor").prior == Fraction(1, 2)
    assert isinstance(parse_construction("blackwell:golden"), MixedAdversary)
    assert parse_construction("ci:1/5").atoms[0][1].prior == Fraction(1, 5)
    assert parse_construction("chain:3,2,4").n_experts == 4
    assert len(parse_construction("sigma:4,2").atoms) == 4
    with pytest.raises(DomainError):
        parse_construction("blackwell:0.9")
    with pytest.raises(IndexOutOfRange):
        parse_construction("chain:3,4,2")
    for bad in ("nope", "blackwell:", "chain:1,2"):
        with pytest.raises(ValueError):
            parse_construction(bad)


def test_golden_value():
    assert curve(GOLDEN_X) == pytest.approx(BLACKWELL_VALUE, abs=1e-15)
    assert BLACKWELL_VALUE == pytest.approx((5 * math.sqrt(5) - 11) / 8)
