"""Exact and sampled square-loss evaluation of schemes against adversaries."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Hashable, Iterable, List, Sequence, Tuple, Union

import numpy as np

from .core import SUM_TOL, CondIndepStructure, InformationStructure, Real, as_probability
from .errors import ArityMismatch, InternalConsistencyError, ValidationError

POOL_DIGITS = 12
CONSISTENCY_TOL = 1e-9

Structure = Union[InformationStructure, CondIndepStructure]


def _as_joint(s: Structure) -> InformationStructure:
    return s.expand() if isinstance(s, CondIndepStructure) else s


@dataclass(frozen=True, eq=False)
class MixedAdversary:
    """Finitely supported distribution over information structures."""

    atoms: Tuple[Tuple[Real, Structure], ...]

    def __post_init__(self):
        atoms = tuple((as_probability(w, "atom weight"), s) for w, s in self.atoms)
        if not atoms:
            raise ValidationError("a mixture needs at least one atom")
        resid = abs(sum(w for w, _ in atoms) - 1)
        if resid > SUM_TOL:
            raise ValidationError("atom weights must sum to 1", residual=resid)
        n = {s.n_experts for _, s in atoms}
        if len(n) != 1:
            raise ArityMismatch(f"atoms disagree on the number of experts: {sorted(n)}")
        object.__setattr__(self, "atoms", atoms)

    @property
    def n_experts(self) -> int:
        return self.atoms[0][1].n_experts

    @classmethod
    def single(cls, structure: Structure) -> "MixedAdversary":
        return cls(((1, structure),))


@dataclass
class ProfileRow:
    forecasts: Tuple[Real, ...]
    probability: Real
    aggregate: Real
    omniscient: Real


@dataclass
class LossReport:
    scheme_loss: Real
    omniscient_loss: Real
    relative_loss: Real
    per_profile: List[ProfileRow] = field(default_factory=list)

    def to_dict(self, verbose=False):
        out = {
            "scheme_loss": float(self.scheme_loss),
            "omniscient_loss": float(self.omniscient_loss),
            "relative_loss": float(self.relative_loss),
        }
        if verbose:
            out["per_profile"] = [
                {
                    "forecasts": [float(x) for x in r.forecasts],
                    "probability": float(r.probability),
                    "aggregate": float(r.aggregate),
                    "omniscient": float(r.omniscient),
                }
                for r in self.per_profile
            ]
        return out


def _check_arity(scheme, n):
    arity = getattr(scheme, "arity", None)
    if arity is not None and arity != n:
        raise ArityMismatch(f"scheme takes {arity} forecasts but the structure has {n} experts")


def relative_loss(struct: Structure, scheme) -> LossReport:
    """Exact expected relative square loss by enumerating signal profiles.

    Computes both E[(f-w)^2] - E[(xhat-w)^2] and E[(f-xhat)^2]; they must agree.
    """
    struct = _as_joint(struct)
    _check_arity(scheme, struct.n_experts)
    scheme_loss = omni_loss = direct = 0
    rows = []
    for profile, w0, w1 in struct.profiles():
        p = w0 + w1
        xs = struct.forecasts(profile)
        f = scheme(xs)
        xhat = w1 / p
        scheme_loss += w1 * (f - 1) ** 2 + w0 * f**2
        omni_loss += w1 * (xhat - 1) ** 2 + w0 * xhat**2
        direct += p * (f - xhat) ** 2
        rows.append(ProfileRow(xs, p, f, xhat))
    gap = scheme_loss - omni_loss
    if abs(gap - direct) > CONSISTENCY_TOL:
        raise InternalConsistencyError(f"loss identity violated: {float(gap)} vs {float(direct)}")
    if direct < -CONSISTENCY_TOL:
        raise InternalConsistencyError(f"negative relative loss {float(direct)}")
    return LossReport(scheme_loss, omni_loss, direct, rows)


def mixture_relative_loss(adv: MixedAdversary, scheme) -> Real:
    """Expected relative loss of ``scheme`` when the structure is drawn from ``adv``."""
    return sum(w * relative_loss(s, scheme).relative_loss for w, s in adv.atoms)


def forecast_key(forecasts: Sequence[Real]) -> Tuple[float, ...]:
    return tuple(round(float(x), POOL_DIGITS) for x in forecasts)


def pooled_conditional_variance(events: Iterable[Tuple[Real, Hashable, Real]]):
    """Sum over keys of P(key) * Var(value | key).

    ``events`` yields ``(probability, key, value)``. Returns ``(total, table)``
    where ``table`` maps each key to ``(P(key), E[value | key])``.
    """
    acc = {}
    for p, key, v in events:
        m, s1, s2 = acc.get(key, (0, 0, 0))
        acc[key] = (m + p, s1 + p * v, s2 + p * v * v)
    total = 0
    table = {}
    for key, (m, s1, s2) in acc.items():
        if m == 0:
            continue
        mean = s1 / m
        total += max(s2 - s1 * mean, 0)
        table[key] = (m, mean)
    return total, table


def _mixture_events(adv: MixedAdversary, observe):
    for w, s in adv.atoms:
        joint = _as_joint(s)
        for profile, w0, w1 in joint.profiles():
            p = w0 + w1
            yield w * p, observe(joint, profile), w1 / p


def _default_observe(joint, profile):
    return forecast_key(joint.forecasts(profile))


def min_loss_against_mixture(adv: MixedAdversary, observe: Callable = None) -> Real:
    """Loss of the Bayes-optimal reply to a known mixture: E[Var(xhat | forecasts)].

    ``observe(structure, profile)`` may replace the forecast vector as the
    aggregator's observation.
    """
    total, _ = pooled_conditional_variance(_mixture_events(adv, observe or _default_observe))
    return total


def bayes_reply_table(adv: MixedAdversary, observe: Callable = None):
    """Map each observed forecast key to ``(probability, optimal forecast)``."""
    _, table = pooled_conditional_variance(_mixture_events(adv, observe or _default_observe))
    return table


# ---------------------------------------------------------------------------
# Monte Carlo

BLOCK = 4096


@dataclass
class MCEstimate:
    scheme_loss: float
    scheme_loss_se: float
    relative_loss: float
    relative_loss_se: float
    n_samples: int
    seed: int

    def to_dict(self):
        return asdict(self)


class _Sampler:
    """Draws (omega, forecast vector, omniscient posterior) from a structure or mixture."""

    def __init__(self, source):
        atoms = source.atoms if isinstance(source, MixedAdversary) else ((1, source),)
        self.weights = np.array([float(w) for w, _ in atoms])
        self.atoms = []
        for _, s in atoms:
            if isinstance(s, CondIndepStructure):
                d0 = [np.asarray(a, float) for a, _ in s.per_expert]
                d1 = [np.asarray(b, float) for _, b in s.per_expert]
                post = [np.nan_to_num(np.asarray(s.posteriors(i), float)) for i in range(s.n_experts)]
                self.atoms.append(("ci", float(s.prior), d0, d1, post))
            else:
                rows = list(s.profiles())
                probs = np.array([float(w0 + w1) for _, w0, w1 in rows])
                xhat = np.array([float(w1 / (w0 + w1)) for _, w0, w1 in rows])
                fc = np.array([[float(x) for x in s.forecasts(p)] for p, _, _ in rows])
                self.atoms.append(("joint", probs / probs.sum(), xhat, fc))

    def draw(self, rng, size):
        which = rng.choice(len(self.atoms), size=size, p=self.weights / self.weights.sum())
        omega = np.empty(size)
        xhat = np.empty(size)
        forecasts = None
        for a, atom in enumerate(self.atoms):
            idx = np.flatnonzero(which == a)
            if idx.size == 0:
                continue
            if atom[0] == "ci":
                _, mu, d0, d1, post = atom
                w = (rng.random(idx.size) < mu).astype(float)
                cols = []
                for i in range(len(d0)):
                    u = rng.random(idx.size)
                    c0, c1 = np.cumsum(d0[i]), np.cumsum(d1[i])
                    s0 = np.minimum(np.searchsorted(c0, u, side="right"), len(c0) - 1)
                    s1 = np.minimum(np.searchsorted(c1, u, side="right"), len(c1) - 1)
                    cols.append(post[i][np.where(w == 1, s1, s0)])
                fc = np.column_stack(cols)
                xh = _bayes_rows(mu, fc)
            else:
                _, probs, xh_all, fc_all = atom
                prof = rng.choice(len(probs), size=idx.size, p=probs)
                xh = xh_all[prof]
                fc = fc_all[prof]
                w = (rng.random(idx.size) < xh).astype(float)
            if forecasts is None:
                forecasts = np.empty((size, fc.shape[1]))
            omega[idx], xhat[idx], forecasts[idx] = w, xh, fc
        return omega, forecasts, xhat


def _bayes_rows(mu, fc):
    """Row-wise known-prior Bayes aggregation in log-odds form."""
    n = fc.shape[1]
    with np.errstate(divide="ignore"):
        lo = np.log(fc) - np.log1p(-fc)
    has0, has1 = (fc == 0).any(1), (fc == 1).any(1)
    if (has0 & has1).any():
        # a CI structure cannot put positive mass on such rows
        raise InternalConsistencyError("sampled contradictory certain forecasts")
    safe = np.where(np.isfinite(lo), lo, 0.0)
    t = safe.sum(1) - (n - 1) * (math.log(mu) - math.log1p(-mu))
    out = 1 / (1 + np.exp(-t))
    return np.where(has1, 1.0, np.where(has0, 0.0, out))


def _mc_block(args):
    source, scheme, seed, block, size = args
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    omega, forecasts, xhat = _Sampler(source).draw(rng, size)
    f = np.array([float(scheme(tuple(row))) for row in forecasts])
    sq = (f - omega) ** 2
    rel = (f - xhat) ** 2
    return sq.sum(), (sq**2).sum(), rel.sum(), (rel**2).sum()


def monte_carlo_loss(source, scheme, n_samples: int, seed: int, workers: int = 1) -> MCEstimate:
    """Sampled scheme loss and relative loss with standard errors.

    Samples are split into fixed blocks of ``BLOCK`` draws; block ``j`` uses
    the substream ``SeedSequence(seed, spawn_key=(j,))``, so the estimate
    does not depend on ``workers``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    _check_arity(scheme, source.n_experts)
    sizes = [min(BLOCK, n_samples - j * BLOCK) for j in range(math.ceil(n_samples / BLOCK))]
    jobs = [(source, scheme, seed, j, sz) for j, sz in enumerate(sizes)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_mc_block, jobs))
    else:
        parts = [_mc_block(j) for j in jobs]
    s1, s2, r1, r2 = (sum(p[i] for p in parts) for i in range(4))
    n = n_samples

    def mean_se(a, b):
        mean = a / n
        var = max(b / n - mean * mean, 0.0)
        return mean, math.sqrt(var / n) if n > 1 else 0.0

    m, se = mean_se(s1, s2)
    rm, rse = mean_se(r1, r2)
    return MCEstimate(float(m), float(se), float(rm), float(rse), n, seed)
