"""Aggregation schemes: a vector of forecasts in, one forecast out.

Every scheme is a callable object taking a sequence of forecasts. Two-expert
schemes also expose ``pairs(x1, x2)``, a vectorized evaluation over numpy
arrays used by the adversarial optimizers; it agrees with the scalar path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .core import ENTRY_TOL, as_probability, bayes_aggregate, bayes_aggregate_pair_array
from .errors import ArityMismatch, BoundaryInput, ContradictoryCertainty, UnsupportedForecastPair

PRECISION_SPLIT = 0.4


def _pair(forecasts):
    forecasts = tuple(forecasts)
    if len(forecasts) != 2:
        raise ArityMismatch(f"expected 2 forecasts, got {len(forecasts)}")
    return forecasts


# ---------------------------------------------------------------------------
# Plain functions


def constant_half(forecasts=()) -> Fraction:
    return Fraction(1, 2)


def degroot(forecasts):
    x1, x2 = _pair(forecasts)
    return (x1 + x2) / 2


def min_entropy(forecasts):
    """Follow the forecast farther from 1/2; ties go to the second expert."""
    x1, x2 = _pair(forecasts)
    half = Fraction(1, 2)
    return x1 if abs(x1 - half) > abs(x2 - half) else x2


def precision_scheme(forecasts):
    """Precision-weighted average, phi(x) = 1 / (x(1-x)).

    Weights are phi when the forecasts are within 0.4 of each other and
    sqrt(phi) otherwise. A lone 0 or 1 wins; the pair {0, 1} gives 1/2.
    """
    x1, x2 = _pair(forecasts)
    if {x1, x2} == {0, 1}:
        return Fraction(1, 2)
    if x1 == 0 or x2 == 0:
        return 0
    if x1 == 1 or x2 == 1:
        return 1
    v1, v2 = x1 * (1 - x1), x2 * (1 - x2)
    if abs(x1 - x2) > PRECISION_SPLIT:
        v1, v2 = math.sqrt(v1), math.sqrt(v2)
    # weight on x1 is phi(x1)/(phi(x1)+phi(x2)) = v2/(v1+v2)
    return (v2 * x1 + v1 * x2) / (v1 + v2)


def average_dummy_prior(x1, x2, mu=None):
    return (x1 + x2) / 2


def shifted_dummy_prior(x1, x2, mu=None):
    """0.49 (x1 + x2), plus 0.02 when x1 + x2 > 1."""
    s = x1 + x2
    if isinstance(s, np.ndarray):
        return 0.49 * s + np.where(s > 1, 0.02, 0.0)
    return 0.49 * s + (0.02 if s > 1 else 0.0)


def true_prior(x1, x2, mu):
    """The cheating baseline that knows the real prior."""
    return mu + 0 * x1


_PRIOR_CLAMP = 1e-12


def _clamped(prior):
    return np.clip(prior, _PRIOR_CLAMP, 1 - _PRIOR_CLAMP) if isinstance(prior, np.ndarray) else min(
        max(float(prior), _PRIOR_CLAMP), 1 - _PRIOR_CLAMP
    )


def average_prior(forecasts) -> float:
    x1, x2 = _pair(forecasts)
    return bayes_aggregate(_clamped(average_dummy_prior(x1, x2)), (x1, x2))


def shifted_prior(forecasts) -> float:
    x1, x2 = _pair(forecasts)
    return bayes_aggregate(_clamped(shifted_dummy_prior(x1, x2)), (x1, x2))


def alpha_star(x, y) -> float:
    """Adversary's loss-maximising weight on the upper first-stage posterior."""
    if not (0 < x < 1 and 0 < y < 1):
        raise BoundaryInput(f"alpha_star needs interior inputs, got ({x}, {y})")
    ry, rx = math.sqrt(y * (1 - y)), math.sqrt(x * (1 - x))
    return ry / (ry + rx)


def best_reply_weights(x, y, alpha):
    """Unnormalized weights (on x, on y) of the best reply to the two-branch martingale."""
    a = (1 - alpha) * (1 - y) / (1 - x)
    b = alpha * x / y
    return a, b


def oracle_best_reply(x, y, alpha, forecasts):
    """Bayes reply of an aggregator who knows the martingale M(x, y, alpha)."""
    x1, x2 = _pair(forecasts)
    if x1 == 0 or x2 == 0:
        return 0
    if x1 == 1 or x2 == 1:
        return 1
    close = lambda u, v: abs(u - v) <= ENTRY_TOL
    if (close(x1, x) and close(x2, y)) or (close(x1, y) and close(x2, x)):
        a, b = best_reply_weights(x, y, alpha)
        return (a * x + b * y) / (a + b)
    raise UnsupportedForecastPair(f"({x1}, {x2}) is outside the support of M({x}, {y}, {alpha})")


# ---------------------------------------------------------------------------
# Scheme objects


class AggregationScheme:
    """Common interface. ``arity`` of None accepts any number of forecasts."""

    name = "scheme"
    arity: Optional[int] = 2
    anonymous = True

    def __call__(self, forecasts: Sequence):
        forecasts = tuple(forecasts)
        if self.arity is not None and len(forecasts) != self.arity:
            raise ArityMismatch(f"{self.name} takes {self.arity} forecasts, got {len(forecasts)}")
        out = self._evaluate(forecasts)
        return as_probability(out, f"{self.name} output")

    def _evaluate(self, forecasts):
        raise NotImplementedError

    def pairs(self, x1, x2) -> np.ndarray:
        """Vectorized evaluation over arrays of first and second forecasts."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        flat = [float(self((a, b))) for a, b in zip(x1.ravel(), x2.ravel())]
        return np.asarray(flat, dtype=float).reshape(x1.shape)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


@dataclass(frozen=True, repr=False)
class Constant(AggregationScheme):
    c: object = Fraction(1, 2)
    arity = None

    def __post_init__(self):
        as_probability(self.c, "constant")

    @property
    def name(self):
        return f"const:{self.c}"

    def _evaluate(self, forecasts):
        return self.c

    def pairs(self, x1, x2):
        return np.full(np.broadcast(np.asarray(x1), np.asarray(x2)).shape, float(self.c))


class DeGroot(AggregationScheme):
    name = "degroot"

    def _evaluate(self, forecasts):
        return degroot(forecasts)

    def pairs(self, x1, x2):
        return (np.asarray(x1, float) + np.asarray(x2, float)) / 2


class MinEntropy(AggregationScheme):
    # anonymous except on exact ties |x1-1/2| = |x2-1/2|
    name = "minentropy"

    def _evaluate(self, forecasts):
        return min_entropy(forecasts)

    def pairs(self, x1, x2):
        x1, x2 = np.asarray(x1, float), np.asarray(x2, float)
        return np.where(np.abs(x1 - 0.5) > np.abs(x2 - 0.5), x1, x2)


class Precision(AggregationScheme):
    name = "precision"

    def _evaluate(self, forecasts):
        return precision_scheme(forecasts)

    def pairs(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        v1, v2 = x1 * (1 - x1), x2 * (1 - x2)
        far = np.abs(x1 - x2) > PRECISION_SPLIT
        w1 = np.where(far, np.sqrt(v2), v2)
        w2 = np.where(far, np.sqrt(v1), v1)
        with np.errstate(invalid="ignore", divide="ignore"):
            out = (w1 * x1 + w2 * x2) / (w1 + w2)
        has0 = (x1 == 0) | (x2 == 0)
        has1 = (x1 == 1) | (x2 == 1)
        out = np.where(has0, 0.0, out)
        out = np.where(has1, 1.0, out)
        return np.where(has0 & has1, 0.5, out)


class _DummyPriorBayes(AggregationScheme):
    dummy_prior: Callable = None

    def _evaluate(self, forecasts):
        x1, x2 = forecasts
        return bayes_aggregate(_clamped(type(self).dummy_prior(x1, x2)), (x1, x2))

    def pairs(self, x1, x2):
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        prior = _clamped(type(self).dummy_prior(x1, x2))
        out = bayes_aggregate_pair_array(prior, x1, x2)
        return np.where(np.isnan(out), 0.5, out)


class AveragePrior(_DummyPriorBayes):
    name = "avgprior"
    dummy_prior = staticmethod(average_dummy_prior)


class ShiftedPrior(_DummyPriorBayes):
    name = "shiftedprior"
    dummy_prior = staticmethod(shifted_dummy_prior)


@dataclass(frozen=True, repr=False)
class OracleBestReply(AggregationScheme):
    x: float
    y: float
    alpha: float

    @property
    def name(self):
        return f"bestreply:{self.x},{self.y},{self.alpha}"

    def _evaluate(self, forecasts):
        return oracle_best_reply(self.x, self.y, self.alpha, forecasts)


@dataclass(frozen=True, repr=False)
class KnownPriorBayes(AggregationScheme):
    """Bayes aggregation of conditionally independent experts with the true prior."""

    mu: float
    arity = None

    @property
    def name(self):
        return f"bayes:{self.mu}"

    def _evaluate(self, forecasts):
        return bayes_aggregate(self.mu, forecasts)

    def pairs(self, x1, x2):
        out = bayes_aggregate_pair_array(self.mu, x1, x2)
        return np.where(np.isnan(out), 0.5, out)


class FunctionScheme(AggregationScheme):
    """Wrap an arbitrary callable of the forecast tuple."""

    def __init__(self, fn, arity=2, anonymous=False, name="custom"):
        self.fn = fn
        self.arity = arity
        self.anonymous = anonymous
        self.name = name

    def _evaluate(self, forecasts):
        return self.fn(forecasts)


SCHEME_NAMES = ("precision", "degroot", "minentropy", "avgprior", "shiftedprior", "const:<c>", "bayes:<mu>")

_FIXED = {
    "precision": Precision,
    "degroot": DeGroot,
    "minentropy": MinEntropy,
    "avgprior": AveragePrior,
    "shiftedprior": ShiftedPrior,
}


def parse_scheme(spec: str) -> AggregationScheme:
    """Build a scheme from its CLI name, e.g. ``precision`` or ``const:0.5``."""
    spec = spec.strip()
    if spec in _FIXED:
        return _FIXED[spec]()
    head, _, arg = spec.partition(":")
    try:
        if head == "const" and arg:
            return Constant(Fraction(arg))
        if head == "bayes" and arg:
            mu = float(arg)
            if not 0 < mu < 1:
                raise ValueError
            return KnownPriorBayes(mu)
    except (ValueError, ZeroDivisionError):
        pass
    raise ValueError(f"unknown scheme {spec!r}; choose from {', '.join(SCHEME_NAMES)}")
