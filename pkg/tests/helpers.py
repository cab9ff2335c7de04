"""Hypothesis strategies and brute-force oracles shared by the test modules.

The oracles here are deliberately naive: plain loops over dictionaries,
ratio-form Bayes rule, no log-odds and no caching.
"""

import itertools
from fractions import Fraction

from hypothesis import strategies as st

from robagg.core import CondIndepStructure, InformationStructure, PosteriorMartingale
from robagg.schemes import AveragePrior, Constant, DeGroot, MinEntropy, Precision, ShiftedPrior


def oracle_posteriors(signal_counts, weights):
    """Expert posteriors and omniscient posteriors from the raw joint table."""
    n = len(signal_counts)
    expert = []
    for i in range(n):
        post = {}
        for s in range(signal_counts[i]):
            num = sum(p for (w, prof), p in weights.items() if prof[i] == s and w == 1)
            den = sum(p for (w, prof), p in weights.items() if prof[i] == s)
            if den > 0:
                post[s] = num / den
        expert.append(post)
    omni = {}
    for prof in itertools.product(*(range(c) for c in signal_counts)):
        p1 = weights.get((1, prof), 0)
        p0 = weights.get((0, prof), 0)
        if p0 + p1 > 0:
            omni[prof] = (p0 + p1, p1 / (p0 + p1))
    return expert, omni


def oracle_relative_loss(signal_counts, weights, fn):
    expert, omni = oracle_posteriors(signal_counts, weights)
    total = 0.0
    for prof, (p, xhat) in omni.items():
        xs = tuple(expert[i][s] for i, s in enumerate(prof))
        total += p * (fn(xs) - xhat) ** 2
    return total


def oracle_bayes(prior, forecasts):
    """Ratio form: prod x_i / mu^(n-1) against prod (1-x_i) / (1-mu)^(n-1)."""
    a = prior
    b = 1 - prior
    for x in forecasts:
        a *= x / prior
        b *= (1 - x) / (1 - prior)
    return a / (a + b)


@st.composite
def joint_structures(draw, max_experts=3, max_signals=3):
    n = draw(st.integers(1, max_experts))
    counts = tuple(draw(st.integers(1, max_signals)) for _ in range(n))
    keys = [(w, prof) for w in (0, 1) for prof in itertools.product(*(range(c) for c in counts))]
    raw = draw(st.lists(st.integers(0, 12), min_size=len(keys), max_size=len(keys)))
    if sum(raw) == 0:
        raw[0] = 1
    total = sum(raw)
    weights = {k: v / total for k, v in zip(keys, raw) if v}
    return InformationStructure(counts, weights)


@st.composite
def ci_structures(draw, max_experts=4, max_signals=4):
    n = draw(st.integers(1, max_experts))
    prior = draw(st.floats(0.05, 0.95))
    experts = []
    for _ in range(n):
        k = draw(st.integers(1, max_signals))
        laws = []
        for _ in range(2):
            raw = draw(st.lists(st.integers(1, 10), min_size=k, max_size=k))
            laws.append(tuple(v / sum(raw) for v in raw))
        experts.append(tuple(laws))
    return CondIndepStructure(prior, tuple(experts))


@st.composite
def martingales(draw, max_branches=3, max_children=3):
    """Random two-step martingale built from rational grid points."""
    x0 = Fraction(draw(st.integers(1, 19)), 20)
    # first step: a mean-preserving split of x0 into two or more points
    lo = Fraction(draw(st.integers(0, int(x0 * 20) - 1)), 20)
    hi = Fraction(draw(st.integers(int(x0 * 20) + 1, 20)), 20)
    p_hi = (x0 - lo) / (hi - lo)
    branches = []
    for p, x1 in ((1 - p_hi, lo), (p_hi, hi)):
        if x1 in (0, 1):
            branches.append((p, x1, ((1, x1),)))
            continue
        a = Fraction(draw(st.integers(0, int(x1 * 20))), 20)
        b = Fraction(draw(st.integers(int(x1 * 20), 20)), 20)
        if a == b:
            branches.append((p, x1, ((1, x1),)))
        else:
            q = (x1 - a) / (b - a)
            branches.append((p, x1, ((1 - q, a), (q, b))))
    return PosteriorMartingale(x0, tuple(branches))


SCHEMES = [Precision(), DeGroot(), MinEntropy(), AveragePrior(), ShiftedPrior(), Constant(Fraction(1, 3))]
schemes_two = st.sampled_from(SCHEMES)
