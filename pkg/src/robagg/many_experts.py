"""Many conditionally independent experts: the chain adversary at desk scale.

Each link I(m) of the chain gives every expert one of two forecasts,
1/2 - 1/(4k) or 1/2 + 1/(4k). An aggregator who sees the whole forecast
distribution still cannot separate (I(m), state 1) from (I(m+1), state 0),
whereas an aggregator who knows the link can count high forecasts and be
right with overwhelming probability.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import List, Optional, Sequence

import numpy as np

from .constructions import ChainSpec, chain_signal_law, chain_spec
from .errors import DomainError, IndexOutOfRange
from .loss import pooled_conditional_variance
from .schemes import AggregationScheme

LABEL_DIGITS = 12


def _spec(k, spec) -> ChainSpec:
    if k < 1:
        raise DomainError("k must be a positive integer")
    return spec if spec is not None else chain_spec(k)


def bayesian_floor(k: int, spec: ChainSpec = None) -> float:
    """Square loss of a Bayesian who observes the full forecast distribution.

    Confusable events cost 1/4 each; only (I(1), state 0) and (I(k), state 1)
    are identified.
    """
    s = _spec(k, spec)
    a, mu = s.alpha, s.mu
    return (1 - a[0] * (1 - mu[0]) - mu[-1] * a[-1]) / 4


def forecast_distribution(spec: ChainSpec, m: int, omega: int):
    """Law of a single expert's signal (low, high) in link m given the state."""
    d0, d1 = chain_signal_law(spec, m)
    return d1 if omega == 1 else d0


def bayesian_floor_by_pooling(k: int, spec: ChainSpec = None) -> float:
    """Independent route: pool the 2k (link, state) events by forecast-distribution label."""
    s = _spec(k, spec)

    def events():
        for m in range(1, s.length + 1):
            mu = s.mu[m - 1]
            for omega, p in ((0, 1 - mu), (1, mu)):
                label = tuple(round(float(v), LABEL_DIGITS) for v in forecast_distribution(s, m, omega))
                yield s.alpha[m - 1] * p, label, omega

    total, _ = pooled_conditional_variance(events())
    return total


def chain_confusion_tv(spec: ChainSpec, m: int) -> float:
    """Total variation between the state-1 law of link m and the state-0 law of link m+1."""
    if not 1 <= m < spec.length:
        raise IndexOutOfRange(f"m must be in 1..{spec.length - 1}, got {m}")
    a = forecast_distribution(spec, m, 1)
    b = forecast_distribution(spec, m + 1, 0)
    return float(sum(abs(u - v) for u, v in zip(a, b)) / 2)


def high_fraction_at(k: int, y, omega: int):
    """Expected fraction of high forecasts given the state, as a function of y."""
    e = 1 / (4 * k)
    up, down = (0.5 + e) * y, (0.5 - e) * y
    if omega == 1:
        return up / (up + (0.5 - e) * (1 - y))
    return down / (down + (0.5 + e) * (1 - y))


def expected_high_fraction(k: int, m: int, omega: int, spec: ChainSpec = None):
    s = _spec(k, spec)
    if not 1 <= m <= s.length:
        raise IndexOutOfRange(f"m must be in 1..{s.length}, got {m}")
    return high_fraction_at(k, s.y[m - 1], omega)


def fraction_gap_at(k: int, y):
    """D(y): gap between the state-1 and state-0 high fractions."""
    return high_fraction_at(k, y, 1) - high_fraction_at(k, y, 0)


def fraction_gap(k: int, m: int, spec: ChainSpec = None):
    s = _spec(k, spec)
    return expected_high_fraction(k, m, 1, s) - expected_high_fraction(k, m, 0, s)


@dataclass(frozen=True)
class ForecastCountStat:
    n: int
    count_high: int

    def __post_init__(self):
        if not 0 <= self.count_high <= self.n:
            raise DomainError(f"count_high must lie in 0..{self.n}, got {self.count_high}")

    @property
    def q(self) -> float:
        return self.count_high / self.n

    @classmethod
    def from_forecasts(cls, forecasts: Sequence[float]) -> "ForecastCountStat":
        xs = np.asarray(forecasts, float)
        return cls(int(xs.size), int(np.count_nonzero(xs > 0.5)))


class CountingScheme(AggregationScheme):
    """Forecast 1 iff the high fraction is at least as close to its state-1 mean.

    The scheme is tailored to a known link m; it never forecasts strictly
    between 0 and 1. Ties go to state 1.
    """

    arity = None

    def __init__(self, k: int, m: int, spec: ChainSpec = None):
        self.k, self.m = k, m
        s = _spec(k, spec)
        self.q1 = float(expected_high_fraction(k, m, 1, s))
        self.q0 = float(expected_high_fraction(k, m, 0, s))
        self.name = f"counting:{k},{m}"

    def decide(self, stat: ForecastCountStat) -> int:
        q = stat.q
        return 1 if abs(q - self.q1) <= abs(q - self.q0) else 0

    def decide_counts(self, counts, n) -> np.ndarray:
        q = np.asarray(counts, float) / n
        return (np.abs(q - self.q1) <= np.abs(q - self.q0)).astype(int)

    def _evaluate(self, forecasts):
        return self.decide(ForecastCountStat.from_forecasts(forecasts))


def hoeffding_bound(k: int, n: int) -> float:
    return math.exp(-n / (72 * k * k))


@dataclass
class CountingResult:
    k: int
    m: Optional[int]
    n: int
    trials: int
    errors: int
    error_rate: float
    se: float
    wilson_low: float
    wilson_high: float
    bound: float
    seed: int

    @property
    def within_bound(self) -> bool:
        return self.error_rate <= self.bound + 3 * self.se

    def to_dict(self):
        out = asdict(self)
        out["within_bound"] = self.within_bound
        return out


def wilson_interval(successes: int, trials: int, z: float = 1.96):
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    den = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def _trial_chunk(args):
    k, m, n, seed, start, stop = args
    s = chain_spec(k)
    schemes = {j: CountingScheme(k, j, s) for j in range(1, s.length + 1)}
    alpha = np.array([float(a) for a in s.alpha])
    errors = 0
    for t in range(start, stop):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(t,)))
        link = m if m is not None else int(rng.choice(s.length, p=alpha)) + 1
        omega = int(rng.random() < s.mu[link - 1])
        p_high = forecast_distribution(s, link, omega)[1]
        count = int(rng.binomial(n, p_high))
        errors += int(schemes[link].decide(ForecastCountStat(n, count)) != omega)
    return errors


def counting_scheme_error(
    k: int, n: int, trials: int, seed: int, m: Optional[int] = None, workers: int = 1
) -> CountingResult:
    """Monte Carlo error rate of the link-aware counting scheme.

    With ``m`` given, every trial uses link m; otherwise the link is drawn
    from the chain weights. Trial t always uses the substream
    ``SeedSequence(seed, spawn_key=(t,))``.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    if n < 1:
        raise DomainError("n must be positive")
    s = chain_spec(k)
    if m is not None and not 1 <= m <= s.length:
        raise IndexOutOfRange(f"m must be in 1..{s.length}, got {m}")
    workers = max(1, int(workers))
    edges = np.linspace(0, trials, workers + 1).astype(int)
    jobs = [(k, m, n, seed, int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            errors = sum(ex.map(_trial_chunk, jobs))
    else:
        errors = sum(_trial_chunk(j) for j in jobs)
    rate = errors / trials
    se = math.sqrt(rate * (1 - rate) / trials)
    lo, hi = wilson_interval(errors, trials)
    return CountingResult(k, m, n, trials, errors, rate, se, lo, hi, hoeffding_bound(k, n), seed)


def k_for_n(n: int) -> int:
    return max(1, int(round(math.sqrt(n / (72 * math.log(n))))))


@dataclass
class RegretRow:
    n: int
    k: int
    floor: float
    hoeffding: float
    implied_floor: float
    reference: float
    degenerate: bool
    empirical_error: Optional[float] = None

    @property
    def ok(self) -> bool:
        return self.degenerate or self.implied_floor >= self.reference

    def to_dict(self):
        out = asdict(self)
        out["ok"] = self.ok
        return out


def regret_curve(n_values: Sequence[int], seed: int, trials: int = 0) -> List[RegretRow]:
    """Finite-n regret floor implied by the chain adversary.

    ``reference`` is 1/4 - 3 sqrt(ln n / n). Rows with k = 1 are flagged
    degenerate: the chain has a single link and nothing is confusable.
    ``trials > 0`` adds a Monte Carlo counting-scheme error for each row.
    """
    rows = []
    for n in n_values:
        if n < 3:
            raise DomainError("each n must be at least 3")
        k = k_for_n(n)
        floor = bayesian_floor(k)
        bound = hoeffding_bound(k, n)
        ref = 0.25 - 3 * math.sqrt(math.log(n) / n)
        emp = counting_scheme_error(k, n, trials, seed).error_rate if trials > 0 else None
        rows.append(RegretRow(n, k, floor, bound, floor - bound, ref, k < 2, emp))
    return rows
