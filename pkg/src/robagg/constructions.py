"""Named adversarial instances, returned as validated structures or mixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple


from .core import (
    CondIndepStructure,
    InformationStructure,
    PosteriorMartingale,
    ci_from_posteriors,
    realize_martingale,
)
from .errors import DomainError, IndexOutOfRange
from .loss import MixedAdversary

GOLDEN_X = (3 - math.sqrt(5)) / 4
BLACKWELL_VALUE = (5 * math.sqrt(5) - 11) / 8


def xor_structure() -> InformationStructure:
    """Each signal alone is uninformative; together they reveal the state."""
    q = Fraction(1, 4)
    return InformationStructure(
        (2, 2),
        {(0, (0, 0)): q, (0, (1, 1)): q, (1, (0, 1)): q, (1, (1, 0)): q},
    )


def degroot_witness_martingale() -> PosteriorMartingale:
    half = Fraction(1, 2)
    return PosteriorMartingale(half, ((1, half, ((half, 0), (half, 1))),))


def degroot_witness() -> InformationStructure:
    """Prior 1/2; expert 1 learns nothing, expert 2 learns the state."""
    return realize_martingale(degroot_witness_martingale())


def fig1_martingale_law() -> PosteriorMartingale:
    half, lo, hi = Fraction(1, 2), Fraction(1, 5), Fraction(4, 5)
    a, b = Fraction(5, 7), Fraction(2, 7)
    return PosteriorMartingale(
        half,
        (
            (half, lo, ((a, 0), (b, Fraction(7, 10)))),
            (half, hi, ((a, 1), (b, Fraction(3, 10)))),
        ),
    )


def fig1_martingale() -> InformationStructure:
    """First-stage posteriors 0.2/0.8, refined to {0, 0.7} and {0.3, 1}."""
    return realize_martingale(fig1_martingale_law())


def _check_open_half(x):
    if not 0 < x < 0.5:
        raise DomainError(f"x must lie in (0, 1/2), got {x}")


def symmetrize_roles(struct: InformationStructure) -> MixedAdversary:
    """Equal mixture of a two-expert structure and its role-swapped copy."""
    half = Fraction(1, 2)
    return MixedAdversary(((half, struct), (half, struct.permuted((1, 0)))))


def blackwell_maxmin_martingale(x) -> PosteriorMartingale:
    _check_open_half(x)
    half = Fraction(1, 2)
    lo_stay = (1 - 2 * x) / (1 - x)
    cross = x / (1 - x)
    return PosteriorMartingale(
        half,
        (
            (half, x, ((lo_stay, 0), (cross, 1 - x))),
            (half, 1 - x, ((cross, x), (lo_stay, 1))),
        ),
    )


def blackwell_maxmin(x) -> MixedAdversary:
    """Symmetric two-stage martingale with the better-informed expert chosen uniformly."""
    return symmetrize_roles(realize_martingale(blackwell_maxmin_martingale(x)))


def ci_maxmin(x) -> MixedAdversary:
    """Uniform mix of i.i.d. structures with priors x and 1-x.

    Under prior x each expert's posterior is 0 or 1/2 (probabilities 1-2x, 2x);
    under prior 1-x it is 1 or 1/2.
    """
    _check_open_half(x)
    half = Fraction(1, 2)
    low = ci_from_posteriors(x, [[(1 - 2 * x, 0), (2 * x, half)]] * 2)
    high = ci_from_posteriors(1 - x, [[(1 - 2 * x, 1), (2 * x, half)]] * 2)
    return MixedAdversary(((half, low), (half, high)))


def best_reply_martingale(x, y, alpha) -> PosteriorMartingale:
    """Two-branch martingale: X1 in {y, x}; y splits to {0, x}, x splits to {y, 1}."""
    if not (0 < y < x < 1 and 0 < alpha < 1):
        raise DomainError(f"need 0 < y < x < 1 and alpha in (0, 1), got ({x}, {y}, {alpha})")
    prior = (1 - alpha) * y + alpha * x
    return PosteriorMartingale(
        prior,
        (
            (1 - alpha, y, (((x - y) / x, 0), (y / x, x))),
            (alpha, x, (((1 - x) / (1 - y), y), ((x - y) / (1 - y), 1))),
        ),
    )


def best_reply_mixture(x, y, alpha) -> MixedAdversary:
    return symmetrize_roles(realize_martingale(best_reply_martingale(x, y, alpha)))


def correlated_delta(delta) -> MixedAdversary:
    """Two perturbed XOR tables whose forecast pairs reveal the state only per table."""
    if not 0 < delta < 0.5:
        raise DomainError(f"delta must lie in (0, 1/2), got {delta}")
    d = delta
    q = Fraction(1, 4)
    p1 = InformationStructure(
        (2, 2),
        {(0, (0, 0)): q, (0, (1, 1)): q, (1, (0, 1)): (1 + d) / 4, (1, (1, 0)): (1 - d) / 4},
    )
    den = 4 - 2 * d * d
    p2 = InformationStructure(
        (2, 2),
        {
            (0, (0, 0)): (1 + d) / den,
            (0, (1, 1)): (1 - d) / den,
            (1, (0, 1)): (1 - d * d) / den,
            (1, (1, 0)): (1 - d * d) / den,
        },
    )
    half = Fraction(1, 2)
    return MixedAdversary(((half, p1), (half, p2)))


# ---------------------------------------------------------------------------
# Chain of single-expert structures used against many i.i.d. experts


@dataclass(frozen=True)
class ChainSpec:
    """Arrays y, mu, beta, alpha (index 0 holds m = 1)."""

    k: int
    y: Tuple
    mu: Tuple
    beta: Tuple
    alpha: Tuple

    @property
    def length(self) -> int:
        return len(self.y)

    @property
    def eps(self):
        return Fraction(1, 4 * self.k) if isinstance(self.y[0], Fraction) else 1 / (4 * self.k)


def chain_spec(k: int, length: int = None, exact: bool = False) -> ChainSpec:
    """Build the chain for precision parameter ``k``.

    Forecasts are 1/2 +- 1/(4k). ``length`` defaults to ``k``; a longer chain
    with small k reproduces the hand-sized instances with forecasts 1/4, 3/4.
    ``exact`` switches to rational arithmetic.
    """
    if k < 1:
        raise DomainError("k must be a positive integer")
    length = k if length is None else int(length)
    if length < 1:
        raise DomainError("chain length must be positive")
    one = Fraction(1) if exact else 1.0
    ratio = one - one * 2 / (2 * k + 1)
    eps = one / (4 * k)
    y = [one / (1 + ratio ** (2 * m - 2)) for m in range(1, length + 1)]
    mu = [one / 2 - eps + ym / (2 * k) for ym in y]
    beta = [one]
    for m in range(length - 1):
        beta.append(beta[m] * mu[m] / (1 - mu[m + 1]))
    total = sum(beta)
    alpha = [b / total for b in beta]
    return ChainSpec(k, tuple(y), tuple(mu), tuple(beta), tuple(alpha))


def chain_signal_law(spec: ChainSpec, m: int):
    """Per-expert ``(P(s|0), P(s|1))`` over signals (low, high) for link ``m`` (1-based)."""
    if not 1 <= m <= spec.length:
        raise IndexOutOfRange(f"m must be in 1..{spec.length}, got {m}")
    y, mu, e = spec.y[m - 1], spec.mu[m - 1], spec.eps
    half = Fraction(1, 2) if isinstance(y, Fraction) else 0.5
    joint0 = ((half + e) * (1 - y), (half - e) * y)
    joint1 = ((half - e) * (1 - y), (half + e) * y)
    d0 = tuple(v / (1 - mu) for v in joint0)
    d1 = tuple(v / mu for v in joint1)
    return d0, d1


def chain_structure(spec: ChainSpec, m: int, n: int) -> CondIndepStructure:
    """Link ``m`` of the chain with ``n`` i.i.d. experts."""
    if n < 1:
        raise DomainError("n must be positive")
    law = chain_signal_law(spec, m)
    return CondIndepStructure(spec.mu[m - 1], (law,) * n)


def sigma_k(k: int, n: int, spec: ChainSpec = None) -> MixedAdversary:
    """Mixture placing weight alpha_m on link m of the chain."""
    spec = spec or chain_spec(k)
    return MixedAdversary(tuple((spec.alpha[m - 1], chain_structure(spec, m, n)) for m in range(1, spec.length + 1)))


# ---------------------------------------------------------------------------

CONSTRUCTION_NAMES = (
    "xor",
    "degroot-witness",
    "fig1",
    "blackwell:<x>",
    "ci:<x>",
    "delta:<d>",
    "chain:<k>,<m>,<n>",
    "sigma:<k>,<n>",
)


def parse_construction(spec: str):
    """Build a named construction, e.g. ``blackwell:0.19`` or ``chain:3,2,4``."""
    spec = spec.strip()
    fixed = {"xor": xor_structure, "degroot-witness": degroot_witness, "fig1": fig1_martingale}
    if spec in fixed:
        return fixed[spec]()
    head, _, arg = spec.partition(":")
    builders = {"blackwell": blackwell_maxmin, "ci": ci_maxmin, "delta": correlated_delta}
    try:
        if head in builders and arg:
            value = _parse_number(arg)
            return builders[head](value)
        if head == "chain":
            k, m, n = (int(v) for v in arg.split(","))
            return chain_structure(chain_spec(k), m, n)
        if head == "sigma":
            k, n = (int(v) for v in arg.split(","))
            return sigma_k(k, n)
    except (DomainError, IndexOutOfRange):
        raise
    except (ValueError, ZeroDivisionError):
        pass
    raise ValueError(f"unknown construction {spec!r}; choose from {', '.join(CONSTRUCTION_NAMES)}")


def _parse_number(text: str):
    text = text.strip()
    if text in ("golden", "opt"):
        return GOLDEN_X
    return Fraction(text) if "/" in text else float(text)
