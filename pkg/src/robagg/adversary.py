"""Adversarial best replies to a fixed scheme.

Two closed-form objectives are maximized here:

* Blackwell-ordered experts: the loss on the extreme martingales
  ``M(x, y, z)``, a 3-parameter problem over ``x <= y <= z``;
* conditionally independent experts: the bilinear 5-parameter objective over
  a prior and one two-point posterior law per expert.

Both use an exhaustive grid followed by bounded Nelder-Mead refinement from
the best cells. Orderings are enforced by reparameterization, never by
penalties, because the maximizers sit on constraint boundaries.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .constructions import BLACKWELL_VALUE, GOLDEN_X, best_reply_mixture
from .core import (
    ENTRY_TOL,
    ExtremeMartingale,
    ExtremePosteriorDist,
    bayes_aggregate,
    bayes_aggregate_pair_array,
    ci_from_posteriors,
    realize_martingale,
)
from .errors import (
    BoundaryInput,
    DegeneratePrior,
    InternalConsistencyError,
    NonAnonymousScheme,
    OrderViolation,
)
from .loss import relative_loss
from .schemes import PRECISION_SPLIT, AggregationScheme, FunctionScheme, KnownPriorBayes, _clamped, true_prior

VERIFY_TOL = 1e-7


@dataclass
class OptResult:
    value: float
    argmax: Tuple[float, ...]
    restarts_used: int
    regions: Dict[str, Tuple[float, Tuple[float, ...]]] = field(default_factory=dict)
    verified_value: Optional[float] = None
    grid_value: Optional[float] = None

    def to_dict(self):
        return {
            "value": self.value,
            "argmax": list(self.argmax),
            "restarts_used": self.restarts_used,
            "grid_value": self.grid_value,
            "verified_value": self.verified_value,
            "regions": {k: {"value": v, "argmax": list(a)} for k, (v, a) in self.regions.items()},
        }


def _verify(value, independent, tol=VERIFY_TOL):
    if abs(value - independent) > tol:
        raise InternalConsistencyError(f"closed form {value!r} vs enumeration {independent!r}")
    return independent


# ---------------------------------------------------------------------------
# Blackwell-ordered experts


def loss_on_extreme_martingale(x, y, z, scheme) -> float:
    """Relative loss of ``scheme`` on M(x, y, z); expert 1 sees y, expert 2 sees x or z."""
    if not (x <= y + ENTRY_TOL and y <= z + ENTRY_TOL):
        raise OrderViolation(f"need x <= y <= z, got ({x}, {y}, {z})")
    if z - x <= 0:
        return float((scheme((y, y)) - y) ** 2)
    wx = (z - y) / (z - x)
    wz = (y - x) / (z - x)
    return float(wx * (scheme((y, x)) - x) ** 2 + wz * (scheme((y, z)) - z) ** 2)


def extreme_loss_arrays(x, y, z, scheme) -> np.ndarray:
    """Vectorized :func:`loss_on_extreme_martingale` (no order check)."""
    x, y, z = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float), np.asarray(z, float))
    span = z - x
    degenerate = span <= 0
    safe = np.where(degenerate, 1.0, span)
    wx = np.where(degenerate, 1.0, (z - y) / safe)
    wz = np.where(degenerate, 0.0, (y - x) / safe)
    fx = scheme.pairs(y, x)
    fz = scheme.pairs(y, z)
    return wx * (fx - x) ** 2 + wz * (fz - z) ** 2


REGIONS = ("far/far", "near/far", "far/near", "near/near")


def _region_masks(dxy, dzy, split, tol=0.0):
    near_xy, far_xy = dxy <= split + tol, dxy >= split - tol
    near_zy, far_zy = dzy <= split + tol, dzy >= split - tol
    return {
        "far/far": far_xy & far_zy,
        "near/far": near_xy & far_zy,
        "far/near": far_xy & near_zy,
        "near/near": near_xy & near_zy,
    }


def _sorted_triple(u):
    return tuple(sorted(float(min(max(v, 0.0), 1.0)) for v in u))


def _nelder_mead(fun, start, step, dim):
    simplex = [np.asarray(start, float)]
    for d in range(dim):
        p = np.array(start, float)
        p[d] = p[d] + step if p[d] + step <= 1 else p[d] - step
        simplex.append(p)
    res = minimize(
        fun,
        np.asarray(start, float),
        method="Nelder-Mead",
        bounds=[(0.0, 1.0)] * dim,
        options={"initial_simplex": np.array(simplex), "xatol": 1e-11, "fatol": 1e-15, "maxiter": 4000},
    )
    return res.x, -res.fun


def optimize_blackwell(
    scheme: AggregationScheme,
    grid: int = 400,
    top: int = 32,
    refine: bool = True,
    verify_tol: float = VERIFY_TOL,
) -> OptResult:
    """Worst extreme martingale for an anonymous two-expert scheme.

    Regions split ``|x - y|`` and ``|z - y|`` at 0.4 ("near" means at most
    0.4, "far" at least 0.4); each region reports its own maximum.
    """
    if not getattr(scheme, "anonymous", False):
        raise NonAnonymousScheme(f"{scheme!r} is not anonymous; the extreme-martingale reduction needs it")
    N = int(grid)
    G = np.arange(N + 1) / N
    split2 = 2 * N  # 5 * index gap compared with 2N  <=>  gap/N compared with 0.4
    region_best = {r: (-1.0, None) for r in REGIONS}
    cand_val = np.empty(0)
    cand_pts = np.empty((0, 3))
    for i in range(N + 1):
        M = N + 1 - i
        jj, ll = np.triu_indices(M)
        jj, ll = jj + i, ll + i
        vals = extreme_loss_arrays(G[i], G[jj], G[ll], scheme)
        dxy, dzy = 5 * (jj - i), 5 * (ll - jj)
        for name, mask in _region_masks(dxy, dzy, split2).items():
            if mask.any():
                sub = np.where(mask, vals, -1.0)
                t = int(np.argmax(sub))
                if sub[t] > region_best[name][0]:
                    region_best[name] = (float(sub[t]), (G[i], G[jj[t]], G[ll[t]]))
        kk = min(top, vals.size)
        idx = np.argpartition(vals, -kk)[-kk:]
        pts = np.column_stack([np.full(kk, G[i]), G[jj[idx]], G[ll[idx]]])
        cand_val = np.concatenate([cand_val, vals[idx]])
        cand_pts = np.vstack([cand_pts, pts])
        if cand_val.size > 4 * top:
            keep = np.argsort(cand_val)[-top:]
            cand_val, cand_pts = cand_val[keep], cand_pts[keep]
    order = np.argsort(cand_val)[::-1][:top]
    grid_value = float(cand_val[order[0]])
    best_val, best_pt = grid_value, tuple(float(v) for v in cand_pts[order[0]])
    restarts = 0
    if refine:
        fun = lambda u: -float(extreme_loss_arrays(*_sorted_triple(u), scheme))
        for start in cand_pts[order]:
            u, val = _nelder_mead(fun, start, 1.0 / N, 3)
            restarts += 1
            pt = _sorted_triple(u)
            dxy, dzy = pt[1] - pt[0], pt[2] - pt[1]
            for name, ok in _region_masks(np.array(dxy), np.array(dzy), PRECISION_SPLIT, 1e-12).items():
                if ok and val > region_best[name][0]:
                    region_best[name] = (float(val), pt)
            if val > best_val:
                best_val, best_pt = float(val), pt
    struct = realize_martingale(ExtremeMartingale(*best_pt).martingale())
    verified = _verify(best_val, float(relative_loss(struct, scheme).relative_loss), verify_tol)
    regions = {k: (v, tuple(float(c) for c in a)) for k, (v, a) in region_best.items() if a is not None}
    return OptResult(best_val, best_pt, restarts, regions, verified, grid_value)


# ---------------------------------------------------------------------------
# Conditionally independent experts


def ci_pair_probability(p1, p2, mu, x1, x2):
    """Probability that expert posteriors are (x1, x2), given marginal masses p1, p2."""
    if np.any(np.asarray(mu) <= 0) or np.any(np.asarray(mu) >= 1):
        raise DegeneratePrior("prior must be interior")
    return p1 * p2 * ((1 - x1) * (1 - x2) / (1 - mu) + x1 * x2 / mu)


def _aggregator(agg) -> Callable:
    """Normalize a scheme or dummy-prior function to ``f(x1, x2, mu) -> forecast`` arrays."""
    if getattr(agg, "_is_aggregator", False):
        return agg
    if isinstance(agg, AggregationScheme) and getattr(type(agg), "dummy_prior", None) is None:
        scheme = agg

        def aggregate(a, b, mu):
            return scheme.pairs(a, b)

    else:
        fn = type(agg).dummy_prior if isinstance(agg, AggregationScheme) else agg

        def aggregate(a, b, mu):
            out = bayes_aggregate_pair_array(_clamped(np.asarray(fn(a, b, mu), float)), a, b)
            return np.where(np.isnan(out), 0.5, out)

    aggregate._is_aggregator = True
    return aggregate


def _point_loss_arrays(mu, a, b, aggregate):
    omni = bayes_aggregate_pair_array(mu, a, b)
    r = (omni - aggregate(a, b, mu)) ** 2
    return np.where(np.isnan(r), 0.0, r)


def ci_point_loss(mu, x1, x2, dummy_prior_fn) -> float:
    """Squared gap between true-prior and aggregator Bayes posteriors at (x1, x2)."""
    if not 0 < mu < 1:
        raise DegeneratePrior("prior must be interior")
    omni = bayes_aggregate(mu, (x1, x2))
    if isinstance(dummy_prior_fn, AggregationScheme) and getattr(type(dummy_prior_fn), "dummy_prior", None) is None:
        guess = float(dummy_prior_fn((x1, x2)))
    else:
        fn = dummy_prior_fn.dummy_prior if isinstance(dummy_prior_fn, AggregationScheme) else dummy_prior_fn
        if x1 == 0 or x2 == 0 or x1 == 1 or x2 == 1:
            guess = bayes_aggregate(0.5, (x1, x2))
        else:
            guess = bayes_aggregate(_clamped(fn(x1, x2, mu)), (x1, x2))
    return (omni - guess) ** 2


def _two_point(mu, y, z):
    span = z - y
    point = span <= 0
    safe = np.where(point, 1.0, span)
    py = np.where(point, 1.0, (z - mu) / safe)
    pz = np.where(point, 0.0, (mu - y) / safe)
    return py, pz


def ci_objective(mu, y1, z1, y2, z2, agg) -> np.ndarray:
    """Expected relative loss for prior mu and posterior laws on {y1, z1}, {y2, z2}."""
    aggregate = _aggregator(agg)
    mu, y1, z1, y2, z2 = np.broadcast_arrays(*(np.asarray(v, float) for v in (mu, y1, z1, y2, z2)))
    p1y, p1z = _two_point(mu, y1, z1)
    p2y, p2z = _two_point(mu, y2, z2)
    total = np.zeros(mu.shape)
    for pa, a in ((p1y, y1), (p1z, z1)):
        for pb, b in ((p2y, y2), (p2z, z2)):
            h = ci_pair_probability(pa, pb, mu, a, b)
            total = total + h * _point_loss_arrays(mu, a, b, aggregate)
    return total


def _ci_params(u):
    """Map the unit cube onto (mu, y1, z1, y2, z2) with y_i <= mu <= z_i."""
    u = np.clip(np.asarray(u, float), 0.0, 1.0)
    mu = min(max(u[0], 1e-9), 1 - 1e-9)
    return (mu, mu * u[1], mu + (1 - mu) * u[2], mu * u[3], mu + (1 - mu) * u[4])


def _ci_unit(params):
    mu, y1, z1, y2, z2 = params
    return np.array([mu, y1 / mu, (z1 - mu) / (1 - mu), y2 / mu, (z2 - mu) / (1 - mu)])


def _canonical(params, tol=1e-9):
    mu, y1, z1, y2, z2 = params
    # a support point at mu carries all the mass: report the point law
    if min(mu - y1, z1 - mu) <= tol:
        y1 = z1 = mu
    if min(mu - y2, z2 - mu) <= tol:
        y2 = z2 = mu
    if (z1 - y1) > (z2 - y2):
        y1, z1, y2, z2 = y2, z2, y1, z1
    return (mu, y1, z1, y2, z2)


def _supports(k, N):
    """Grid supports for prior index k: every y < mu < z pair plus the point mass."""
    yi, zi = np.meshgrid(np.arange(k), np.arange(k + 1, N + 1), indexing="ij")
    yi = np.concatenate([yi.ravel(), [k]])
    zi = np.concatenate([zi.ravel(), [k]])
    return yi, zi


def _ci_layer(k, N, aggregate):
    G = np.arange(N + 1) / N
    mu = G[k]
    A, B = np.meshgrid(G, G, indexing="ij")
    Q = ci_pair_probability(1.0, 1.0, mu, A, B) * _point_loss_arrays(mu, A, B, aggregate)
    yi, zi = _supports(k, N)
    py, pz = _two_point(mu, G[yi], G[zi])
    W = py[:, None] * Q[yi] + pz[:, None] * Q[zi]
    return G, mu, Q, yi, zi, py, pz, W


def _row_bounds(W, k, G, mu):
    lo = W[:, :k] * ((1 - mu) / (1 - G[:k]))[None, :]
    hi = W[:, k + 1 :] * (mu / G[k + 1 :])[None, :]
    split = lo.max(1) + hi.max(1)
    return np.maximum(np.minimum(W.max(1), split), W[:, k])


def _ci_grid(aggregate, N, top, threshold=-np.inf, chunk=512):
    heap = []
    for k in range(1, N):
        G, mu, Q, yi, zi, py, pz, W = _ci_layer(k, N, aggregate)
        if len(heap) >= top:
            threshold = max(threshold, heap[0][0])
        rows = np.flatnonzero(_row_bounds(W, k, G, mu) >= threshold - 1e-15)
        if rows.size == 0:
            continue
        # the objective is bilinear, so the same bound prunes expert 2's supports
        Wt = py[:, None] * Q.T[yi] + pz[:, None] * Q.T[zi]
        cols = np.flatnonzero(_row_bounds(Wt, k, G, mu) >= threshold - 1e-15)
        if cols.size == 0:
            continue
        cy, cz, cpy, cpz = yi[cols], zi[cols], py[cols], pz[cols]
        for s in range(0, rows.size, chunk):
            r = rows[s : s + chunk]
            Wr = W[r]
            L = Wr[:, cy] * cpy[None, :] + Wr[:, cz] * cpz[None, :]
            j = cols[L.argmax(1)]
            v = L.max(1)
            for rr, jj, vv in zip(r, j, v):
                if len(heap) < top:
                    heapq.heappush(heap, (float(vv), (k, int(rr), int(jj))))
                elif vv > heap[0][0]:
                    heapq.heapreplace(heap, (float(vv), (k, int(rr), int(jj))))
            if len(heap) >= top:
                threshold = max(threshold, heap[0][0])
    out = []
    for v, (k, r, j) in sorted(heap, reverse=True):
        yi, zi = _supports(k, N)
        out.append((v, (k / N, yi[r] / N, zi[r] / N, yi[j] / N, zi[j] / N)))
    return out


def _ci_scheme_for(agg, mu):
    if isinstance(agg, AggregationScheme):
        return agg
    if agg is true_prior:
        return KnownPriorBayes(mu)
    fn = agg

    def evaluate(xs):
        x1, x2 = xs
        if x1 == 0 or x2 == 0 or x1 == 1 or x2 == 1:
            return bayes_aggregate(0.5, xs)
        return bayes_aggregate(_clamped(fn(x1, x2, mu)), xs)

    return FunctionScheme(evaluate, arity=2, anonymous=True, name=getattr(fn, "__name__", "dummy"))


def ci_structure(params):
    """Conditionally independent structure realizing (mu, y1, z1, y2, z2)."""
    mu, y1, z1, y2, z2 = params
    laws = [ExtremePosteriorDist(mu, y1, z1).support(), ExtremePosteriorDist(mu, y2, z2).support()]
    return ci_from_posteriors(mu, laws)


def optimize_ci(
    dummy_prior, grid: int = 200, top: int = 32, refine: bool = True, verify_tol: float = VERIFY_TOL
) -> OptResult:
    """Worst conditionally independent two-expert structure for a scheme.

    ``dummy_prior`` is either a scheme object or a function ``(x1, x2, mu)``
    giving the prior the aggregator plugs into Bayes rule. The returned
    argmax is ``(mu, y1, z1, y2, z2)`` ordered so that expert 1 has the
    narrower posterior support.
    """
    aggregate = _aggregator(dummy_prior)
    N = int(grid)
    threshold = -np.inf
    if N % 5 == 0 and N >= 50:
        coarse = _ci_grid(aggregate, N // 5, top)
        if len(coarse) >= top:
            threshold = coarse[-1][0]
    cells = _ci_grid(aggregate, N, top, threshold)
    grid_value, best_pt = cells[0]
    best_val = grid_value
    restarts = 0
    if refine:
        fun = lambda u: -float(ci_objective(*_ci_params(u), aggregate))
        for _, pt in cells:
            u, val = _nelder_mead(fun, _ci_unit(pt), 1.0 / N, 5)
            restarts += 1
            if val > best_val:
                best_val, best_pt = float(val), _ci_params(u)
    best_pt = tuple(float(v) for v in _canonical(best_pt))
    scheme = _ci_scheme_for(dummy_prior, best_pt[0])
    independent = relative_loss(ci_structure(best_pt).expand(), scheme).relative_loss
    verified = _verify(best_val, float(independent), verify_tol)
    return OptResult(best_val, best_pt, restarts, {}, verified, float(grid_value))



# ---------------------------------------------------------------------------
# Best reply to a known two-branch martingale


def best_reply_loss(x, y, alpha) -> float:
    """Loss of the Bayes reply to the role-symmetrized martingale M(x, y, alpha).

    The aggregator is confused only on the pair {x, y}: the truth is x with
    probability (1-alpha) y/x and y with probability alpha (1-x)/(1-y).
    """
    if not (0 < y <= x < 1) or not (0 <= alpha <= 1):
        raise BoundaryInput(f"need 0 < y <= x < 1 and alpha in [0, 1], got ({x}, {y}, {alpha})")
    a = (1 - alpha) * y / x
    b = alpha * (1 - x) / (1 - y)
    if a + b == 0:
        return 0.0
    return (x - y) ** 2 * a * b / (a + b)


def best_reply_loss_check(x, y, alpha) -> float:
    """Same quantity by pooling the explicit mixture; independent of the closed form."""
    from .loss import min_loss_against_mixture

    return float(min_loss_against_mixture(best_reply_mixture(x, y, alpha)))


# ---------------------------------------------------------------------------
# Identical experts


def maxmin_curve(x):
    """Lower-bound value x/(1-x) (1/2 - x)^2 of the symmetric two-structure adversary."""
    return x / (1 - x) * (0.5 - x) ** 2


def explore_iid_conjecture(dummy_prior, grid: int = 200, mixture_grid: int = 50, tol: float = 5e-4) -> dict:
    """Search identical-expert adversaries and compare with the two-expert lower bound.

    Point structures share one two-point posterior law; mixtures share a
    two-component law, where the objective is quadratic in the mixing weight.
    The result is numerical evidence, never a proof.
    """
    aggregate = _aggregator(dummy_prior)
    best_point = (-1.0, None)
    for k in range(1, grid):
        G, mu, Q, yi, zi, py, pz, W = _ci_layer(k, grid, aggregate)
        diag = py * W[np.arange(yi.size), yi] + pz * W[np.arange(yi.size), zi]
        t = int(np.argmax(diag))
        if diag[t] > best_point[0]:
            best_point = (float(diag[t]), (mu, G[yi[t]], G[zi[t]]))

    def point_fun(u):
        mu, y, z, _, _ = _ci_params([u[0], u[1], u[2], u[1], u[2]])
        return -float(ci_objective(mu, y, z, y, z, aggregate))

    mu0, y0, z0 = best_point[1]
    u, val = _nelder_mead(point_fun, [mu0, y0 / mu0, (z0 - mu0) / (1 - mu0)], 1.0 / grid, 3)
    if val > best_point[0]:
        mu, y, z, _, _ = _ci_params([u[0], u[1], u[2], u[1], u[2]])
        best_point = (val, (mu, y, z))

    best_mix = (-1.0, None)
    for k in range(1, mixture_grid):
        G, mu, Q, yi, zi, py, pz, W = _ci_layer(k, mixture_grid, aggregate)
        L = W[:, yi] * py[None, :] + W[:, zi] * pz[None, :]
        A = np.diag(L)[:, None]
        B = np.diag(L)[None, :]
        C = (L + L.T) / 2
        curv = A - 2 * C + B
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.where(curv < 0, (B - C) / curv, 0.0)
        w = np.clip(np.nan_to_num(w), 0.0, 1.0)
        q = w * w * A + 2 * w * (1 - w) * C + (1 - w) ** 2 * B
        q = np.maximum(q, np.maximum(A, B))
        flat = int(np.argmax(q))
        i, j = divmod(flat, q.shape[1])
        if q[i, j] > best_mix[0]:
            best_mix = (float(q[i, j]), (mu, G[yi[i]], G[zi[i]], G[yi[j]], G[zi[j]], float(w[i, j])))

    curve = minimize_scalar(lambda x: -maxmin_curve(x), bounds=(1e-9, 0.5 - 1e-9), method="bounded",
                            options={"xatol": 1e-12})
    best = max(best_point[0], best_mix[0])
    return {
        "threshold": BLACKWELL_VALUE,
        "point_max": float(best_point[0]),
        "point_argmax": [float(v) for v in best_point[1]],
        "mixture_max": best_mix[0],
        "mixture_argmax": [float(v) for v in best_mix[1]],
        "curve_argmax": float(curve.x),
        "curve_max": float(-curve.fun),
        "exceeds_threshold": bool(best > BLACKWELL_VALUE + tol),
    }
