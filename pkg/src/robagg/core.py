"""Information structures over a binary state and the posteriors they induce.

Weights may be floats or :class:`fractions.Fraction`; every operation here
uses only field arithmetic, so exactly-rational structures stay exact until
something irrational (a square root, a logarithm) touches them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence, Tuple, Union

import numpy as np

from .errors import (
    ContradictoryCertainty,
    DegeneratePrior,
    InvalidMartingale,
    ValidationError,
    ZeroProbabilityProfile,
    ZeroProbabilitySignal,
)

Real = Union[float, Fraction]
Profile = Tuple[int, ...]

SUM_TOL = 1e-9
ENTRY_TOL = 1e-12


def as_probability(value, name="probability"):
    """Validate ``value`` as a probability; tiny excursions are clipped."""
    if isinstance(value, (int, np.integer)):
        value = Fraction(int(value))
    if not (-ENTRY_TOL <= value <= 1 + ENTRY_TOL):
        raise ValidationError(f"{name} must lie in [0, 1]", detail=f"got {value!r}")
    if value < 0:
        return type(value)(0)
    if value > 1:
        return type(value)(1)
    return value


def _is_zero(v) -> bool:
    return v == 0


# ---------------------------------------------------------------------------
# Joint structures


@dataclass(frozen=True, eq=False)
class InformationStructure:
    """Finite joint law of the state and a profile of private signals.

    ``weights`` maps ``(omega, profile)`` to a probability, where ``profile``
    is a tuple with one signal index per expert. Zero entries are dropped.
    """

    signal_counts: Tuple[int, ...]
    weights: Mapping[Tuple[int, Profile], Real]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.signal_counts)
        if not counts:
            raise ValidationError("at least one expert is required")
        if any(c < 1 for c in counts):
            raise ValidationError("signal counts must be positive", detail=str(counts))
        clean = {}
        for key, p in self.weights.items():
            omega, profile = key
            profile = tuple(int(s) for s in profile)
            if omega not in (0, 1):
                raise ValidationError("state must be 0 or 1", detail=f"entry {key!r}")
            if len(profile) != len(counts):
                raise ValidationError(
                    "profile length must equal the number of experts", detail=f"entry {key!r}"
                )
            for s, c in zip(profile, counts):
                if not 0 <= s < c:
                    raise ValidationError("signal index out of range", detail=f"entry {key!r}")
            if p < -ENTRY_TOL:
                raise ValidationError("weights must be nonnegative", residual=-p, detail=f"entry {key!r}")
            if _is_zero(p) or p < 0:
                continue
            k = (int(omega), profile)
            clean[k] = clean.get(k, 0) + p
        total = sum(clean.values())
        if abs(total - 1) > SUM_TOL:
            raise ValidationError("weights must sum to 1", residual=abs(total - 1))
        object.__setattr__(self, "signal_counts", counts)
        object.__setattr__(self, "weights", clean)

    @property
    def n_experts(self) -> int:
        return len(self.signal_counts)

    @cached_property
    def prior(self) -> Real:
        return sum((p for (w, _), p in self.weights.items() if w == 1), 0)

    @cached_property
    def _profile_table(self):
        table = {}
        for (omega, profile), p in self.weights.items():
            w0, w1 = table.get(profile, (0, 0))
            table[profile] = (w0 + p, w1) if omega == 0 else (w0, w1 + p)
        return dict(sorted(table.items()))

    @cached_property
    def _marginals(self):
        out = [dict() for _ in self.signal_counts]
        for (omega, profile), p in self.weights.items():
            for i, s in enumerate(profile):
                w0, w1 = out[i].get(s, (0, 0))
                out[i][s] = (w0 + p, w1) if omega == 0 else (w0, w1 + p)
        return out

    def profiles(self) -> Iterator[Tuple[Profile, Real, Real]]:
        """Yield ``(profile, P(omega=0, s), P(omega=1, s))`` for positive-mass profiles."""
        for profile, (w0, w1) in self._profile_table.items():
            yield profile, w0, w1

    def signal_probability(self, expert: int, signal: int) -> Real:
        w0, w1 = self._marginals[expert].get(signal, (0, 0))
        return w0 + w1

    def expert_posterior(self, expert: int, signal: int) -> Real:
        w0, w1 = self._marginals[expert].get(signal, (0, 0))
        if _is_zero(w0 + w1):
            raise ZeroProbabilitySignal(f"expert {expert} signal {signal} has probability 0")
        return w1 / (w0 + w1)

    def forecasts(self, profile: Profile) -> Tuple[Real, ...]:
        return tuple(self.expert_posterior(i, s) for i, s in enumerate(profile))

    def omniscient_posterior(self, profile: Profile) -> Real:
        w0, w1 = self._profile_table.get(tuple(profile), (0, 0))
        if _is_zero(w0 + w1):
            raise ZeroProbabilityProfile(f"profile {tuple(profile)} has probability 0")
        return w1 / (w0 + w1)

    def permuted(self, order: Sequence[int]) -> "InformationStructure":
        """Relabel experts so that new expert ``i`` is old expert ``order[i]``."""
        order = list(order)
        if sorted(order) != list(range(self.n_experts)):
            raise ValidationError("order must be a permutation of the experts")
        counts = tuple(self.signal_counts[j] for j in order)
        weights = {(w, tuple(prof[j] for j in order)): p for (w, prof), p in self.weights.items()}
        return InformationStructure(counts, weights)


def expert_posterior(struct: InformationStructure, expert: int, signal: int) -> Real:
    """P(omega=1 | expert's signal) by Bayes rule on the joint weights."""
    return struct.expert_posterior(expert, signal)


def omniscient_posterior(struct: InformationStructure, profile: Profile) -> Real:
    """P(omega=1 | full signal profile)."""
    return struct.omniscient_posterior(profile)


# ---------------------------------------------------------------------------
# Conditionally independent structures


@dataclass(frozen=True, eq=False)
class CondIndepStructure:
    """Prior plus, for each expert, the signal law given omega=0 and omega=1."""

    prior: Real
    per_expert: Tuple[Tuple[Tuple[Real, ...], Tuple[Real, ...]], ...]

    def __post_init__(self):
        prior = as_probability(self.prior, "prior")
        experts = []
        if not self.per_expert:
            raise ValidationError("at least one expert is required")
        for i, (d0, d1) in enumerate(self.per_expert):
            d0, d1 = tuple(d0), tuple(d1)
            if len(d0) != len(d1) or not d0:
                raise ValidationError(
                    "conditional distributions must share a nonempty signal set", detail=f"expert {i}"
                )
            for label, d in (("p_given_0", d0), ("p_given_1", d1)):
                for p in d:
                    if p < -ENTRY_TOL:
                        raise ValidationError(
                            f"{label} entries must be nonnegative", residual=-p, detail=f"expert {i}"
                        )
                resid = abs(sum(d) - 1)
                if resid > SUM_TOL:
                    raise ValidationError(f"{label} must sum to 1", residual=resid, detail=f"expert {i}")
            experts.append((d0, d1))
        object.__setattr__(self, "prior", prior)
        object.__setattr__(self, "per_expert", tuple(experts))

    @property
    def n_experts(self) -> int:
        return len(self.per_expert)

    @property
    def signal_counts(self) -> Tuple[int, ...]:
        return tuple(len(d0) for d0, _ in self.per_expert)

    def posteriors(self, expert: int) -> Tuple[Real, ...]:
        """Forecast attached to each signal of ``expert`` (NaN for null signals)."""
        mu = self.prior
        d0, d1 = self.per_expert[expert]
        out = []
        for p0, p1 in zip(d0, d1):
            a, b = mu * p1, (1 - mu) * p0
            out.append(a / (a + b) if not _is_zero(a + b) else math.nan)
        return tuple(out)

    def expand(self) -> InformationStructure:
        return expand(self)


def expand(ci: CondIndepStructure) -> InformationStructure:
    """Product-form joint law P(omega) * prod_i P(s_i | omega)."""
    mu = ci.prior
    weights = {}
    ranges = [range(c) for c in ci.signal_counts]
    for profile in itertools.product(*ranges):
        for omega, base in ((0, 1 - mu), (1, mu)):
            p = base
            for i, s in enumerate(profile):
                p = p * ci.per_expert[i][omega][s]
                if _is_zero(p):
                    break
            if not _is_zero(p):
                weights[(omega, profile)] = p
    return InformationStructure(ci.signal_counts, weights)


def ci_from_posteriors(prior, posterior_laws) -> CondIndepStructure:
    """Invert posterior distributions into conditional signal laws.

    ``posterior_laws`` holds, per expert, a sequence of ``(probability,
    posterior)`` pairs whose mean must equal ``prior``. Signal ``v`` gets
    P(s=v | 1) = p_v * v / prior and P(s=v | 0) = p_v * (1 - v) / (1 - prior).
    """
    prior = as_probability(prior, "prior")
    if _is_zero(prior) or prior == 1:
        raise DegeneratePrior("posterior inversion needs an interior prior")
    experts = []
    for i, law in enumerate(posterior_laws):
        law = [(p, v) for p, v in law if not _is_zero(p)]
        mean = sum(p * v for p, v in law)
        if abs(mean - prior) > SUM_TOL:
            raise InvalidMartingale("posterior law must average to the prior", abs(mean - prior), f"expert {i}")
        d1 = tuple(p * v / prior for p, v in law)
        d0 = tuple(p * (1 - v) / (1 - prior) for p, v in law)
        experts.append((d0, d1))
    return CondIndepStructure(prior, tuple(experts))


# ---------------------------------------------------------------------------
# Bayes aggregation with a known prior


def _logit(p: float) -> float:
    return math.log(p) - math.log1p(-p)


def _expit(t: float) -> float:
    if t >= 0:
        return 1.0 / (1.0 + math.exp(-t))
    e = math.exp(t)
    return e / (1.0 + e)


def bayes_aggregate(prior, forecasts: Sequence) -> float:
    """Posterior of conditionally independent experts given the true prior.

    Evaluated in log-odds: logit(g) = sum_i logit(x_i) - (n-1) logit(prior).
    A forecast of exactly 0 (resp. 1) decides the answer.
    """
    forecasts = list(forecasts)
    has0 = any(x == 0 for x in forecasts)
    has1 = any(x == 1 for x in forecasts)
    if has0 and has1:
        raise ContradictoryCertainty("forecasts contain both 0 and 1")
    if has0:
        return 0.0
    if has1:
        return 1.0
    if not 0 < prior < 1:
        raise DegeneratePrior(f"prior must be interior, got {prior!r}")
    n = len(forecasts)
    t = sum(_logit(float(x)) for x in forecasts) - (n - 1) * _logit(float(prior))
    return _expit(t)


def bayes_aggregate_pair_array(prior, x1, x2) -> np.ndarray:
    """Vectorized two-expert ``bayes_aggregate``; pairs {0, 1} come back NaN."""
    from scipy.special import expit, logit

    prior = np.asarray(prior, dtype=float)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = expit(logit(x1) + logit(x2) - logit(prior))
    has0 = (x1 == 0) | (x2 == 0)
    has1 = (x1 == 1) | (x2 == 1)
    out = np.where(has0, 0.0, out)
    out = np.where(has1, 1.0, out)
    return np.where(has0 & has1, np.nan, out)


# ---------------------------------------------------------------------------
# Posterior martingales


@dataclass(frozen=True, eq=False)
class PosteriorMartingale:
    """Length-2 martingale of posteriors (X0, X1, X2).

    ``branches`` is a sequence of ``(p, x1, children)`` where ``children`` is
    a sequence of ``(q, x2)``: X1 = x1 with probability p, then X2 = x2 with
    conditional probability q. Zero-probability branches are dropped.
    """

    x0: Real
    branches: Tuple[Tuple[Real, Real, Tuple[Tuple[Real, Real], ...]], ...]

    def __post_init__(self):
        x0 = as_probability(self.x0, "x0")
        kept = []
        for p, x1, children in self.branches:
            if p < -ENTRY_TOL:
                raise InvalidMartingale("branch probabilities must be nonnegative", -p)
            if _is_zero(p) or p < 0:
                continue
            x1 = as_probability(x1, "x1")
            kids = []
            for q, x2 in children:
                if q < -ENTRY_TOL:
                    raise InvalidMartingale("branch probabilities must be nonnegative", -q)
                if _is_zero(q) or q < 0:
                    continue
                kids.append((q, as_probability(x2, "x2")))
            qsum = sum(q for q, _ in kids)
            if abs(qsum - 1) > SUM_TOL:
                raise InvalidMartingale("second-stage probabilities must sum to 1", abs(qsum - 1))
            mean2 = sum(q * v for q, v in kids)
            if abs(mean2 - x1) > SUM_TOL:
                raise InvalidMartingale("E[X2 | X1] must equal X1", abs(mean2 - x1), f"at X1={x1}")
            kept.append((p, x1, tuple(kids)))
        psum = sum(p for p, _, _ in kept)
        if abs(psum - 1) > SUM_TOL:
            raise InvalidMartingale("first-stage probabilities must sum to 1", abs(psum - 1))
        mean1 = sum(p * v for p, v, _ in kept)
        if abs(mean1 - x0) > SUM_TOL:
            raise InvalidMartingale("E[X1] must equal X0", abs(mean1 - x0))
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "branches", tuple(kept))

    def pair_law(self) -> Iterator[Tuple[Real, Real, Real]]:
        """Yield ``(probability, x1, x2)`` over the joint support."""
        for p, x1, kids in self.branches:
            for q, x2 in kids:
                yield p * q, x1, x2


@dataclass(frozen=True)
class ExtremeMartingale:
    """X0 = X1 = y; X2 splits into x and z with mean y."""

    x: Real
    y: Real
    z: Real

    def __post_init__(self):
        from .errors import OrderViolation

        for name in ("x", "y", "z"):
            as_probability(getattr(self, name), name)
        if not (self.x <= self.y + ENTRY_TOL and self.y <= self.z + ENTRY_TOL):
            raise OrderViolation(f"need x <= y <= z, got ({self.x}, {self.y}, {self.z})")

    def children(self):
        x, y, z = self.x, self.y, self.z
        if z - x <= 0:
            return ((1, y),)
        return (((z - y) / (z - x), x), ((y - x) / (z - x), z))

    def martingale(self) -> PosteriorMartingale:
        return PosteriorMartingale(self.y, ((1, self.y, self.children()),))


@dataclass(frozen=True)
class ExtremePosteriorDist:
    """Two-point posterior law on {y, z} with mean ``mu``."""

    mu: Real
    y: Real
    z: Real

    def __post_init__(self):
        from .errors import OrderViolation

        for name in ("mu", "y", "z"):
            as_probability(getattr(self, name), name)
        if not (self.y <= self.mu + ENTRY_TOL and self.mu <= self.z + ENTRY_TOL):
            raise OrderViolation(f"need y <= mu <= z, got ({self.y}, {self.mu}, {self.z})")

    def support(self) -> Tuple[Tuple[Real, Real], ...]:
        """``(probability, posterior)`` pairs."""
        mu, y, z = self.mu, self.y, self.z
        if z - y <= 0:
            return ((1, mu),)
        return (((z - mu) / (z - y), y), ((mu - y) / (z - y), z))


def realize_martingale(m: PosteriorMartingale) -> InformationStructure:
    """Two-expert Blackwell-ordered structure whose posteriors follow ``m``.

    Expert 1 observes the first-stage branch; expert 2 observes the
    second-stage child, which refines it.
    """
    weights = {}
    count2 = 0
    for j, (p, _x1, kids) in enumerate(m.branches):
        for q, x2 in kids:
            pq = p * q
            weights[(1, (j, count2))] = pq * x2
            weights[(0, (j, count2))] = pq * (1 - x2)
            count2 += 1
    return InformationStructure((len(m.branches), count2), weights)


# ---------------------------------------------------------------------------


def enumerate_forecast_law(struct: InformationStructure) -> Iterable[Tuple[Tuple[Real, ...], Real, Real]]:
    """Yield ``(forecast vector, probability, omniscient posterior)`` per profile."""
    for profile, w0, w1 in struct.profiles():
        p = w0 + w1
        yield struct.forecasts(profile), p, w1 / p
