"""Cutting-plane search regions and hit-and-run centroid estimation.

A :class:`ConvexBody` is the Euclidean ball of radius ``radius`` about the
origin intersected with halfspaces ``<a_i, w> <= b_i``. Bodies are immutable;
:func:`cut` returns a new body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyInterior, PointNotInterior, ZeroNormal

THIN_CHORD = 1e-12
THIN_STREAK = 20


@dataclass(frozen=True, eq=False)
class ConvexBody:
    dimension: int
    radius: float = 2.0
    normals: np.ndarray = None
    offsets: np.ndarray = None
    interior_point: Optional[np.ndarray] = None

    def __post_init__(self):
        d = self.dimension
        normals = np.zeros((0, d)) if self.normals is None else np.asarray(self.normals, dtype=float).reshape(-1, d)
        offsets = np.zeros(0) if self.offsets is None else np.asarray(self.offsets, dtype=float).ravel()
        if normals.shape[0] != offsets.shape[0]:
            raise ValueError("one offset per halfspace normal is required")
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "offsets", offsets)
        if self.interior_point is None and normals.shape[0] == 0:
            object.__setattr__(self, "interior_point", np.zeros(d))

    @classmethod
    def ball(cls, dimension: int, radius: float = 2.0) -> "ConvexBody":
        return cls(dimension=dimension, radius=radius)

    @property
    def n_cuts(self) -> int:
        return self.normals.shape[0]

    def contains(self, w) -> bool:
        w = np.asarray(w, dtype=float)
        return bool(w @ w <= self.radius ** 2 and np.all(self.normals @ w <= self.offsets))

    def contains_many(self, W) -> np.ndarray:
        W = np.atleast_2d(np.asarray(W, dtype=float))
        ok = np.einsum("ij,ij->i", W, W) <= self.radius ** 2
        if self.n_cuts:
            ok &= np.all(W @ self.normals.T <= self.offsets, axis=1)
        return ok


@dataclass(frozen=True, eq=False)
class CentroidEstimate:
    mu_hat: np.ndarray
    n_samples: int
    interior_point: np.ndarray
    samples: np.ndarray = field(repr=False, default=None)


def _chords(body: ConvexBody, W: np.ndarray, D: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Chord parameters of lines ``W[i] + t D[i]`` (unit ``D``) inside the body."""
    wd = np.einsum("ij,ij->i", W, D)
    ww = np.einsum("ij,ij->i", W, W)
    disc = np.sqrt(np.maximum(wd * wd - (ww - body.radius ** 2), 0.0))
    t_lo = -wd - disc
    t_hi = -wd + disc
    if body.n_cuts:
        slack = body.offsets - W @ body.normals.T
        rate = D @ body.normals.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t = slack / rate
        t_hi = np.minimum(t_hi, np.min(np.where(rate > 0, t, np.inf), axis=1))
        t_lo = np.maximum(t_lo, np.max(np.where(rate < 0, t, -np.inf), axis=1))
    return np.minimum(t_lo, 0.0), np.maximum(t_hi, 0.0)


def hit_and_run_chord(body: ConvexBody, w, direction) -> tuple[float, float]:
    """Maximal ``[t_min, t_max]`` with ``w + t*direction`` in the body."""
    w = np.asarray(w, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if abs(np.linalg.norm(direction) - 1.0) > 1e-12:
        raise ValueError("direction must be a unit vector")
    if not body.contains(w):
        raise PointNotInterior(f"{w!r} is not in the body")
    lo, hi = _chords(body, w[None, :], direction[None, :])
    return float(lo[0]), float(hi[0])


def cut(body: ConvexBody, normal, point_on_boundary, hint_points=None) -> ConvexBody:
    """Keep ``{w : <normal, w> >= <normal, point_on_boundary>}``.

    The new body gets an interior point: the old one if it survives the cut,
    else the mean of the surviving ``hint_points`` (e.g. the last hit-and-run
    cloud), else the midpoint of the surviving part of the chord through the
    old interior point along ``normal``. If all fail, ``interior_point`` is
    ``None`` and sampling raises ``EMPTY_INTERIOR``.
    """
    n = np.asarray(normal, dtype=float)
    if not np.any(n != 0.0):
        raise ZeroNormal("cut normal is zero")
    p = np.asarray(point_on_boundary, dtype=float)
    new = ConvexBody(
        dimension=body.dimension,
        radius=body.radius,
        normals=np.vstack([body.normals, -n[None, :]]),
        offsets=np.append(body.offsets, -float(n @ p)),
        interior_point=None,
    )
    level = float(n @ p)
    old = body.interior_point
    if old is not None and float(n @ old) > level and new.contains(old):
        return _with_interior(new, old)
    if hint_points is not None and len(hint_points):
        H = np.asarray(hint_points, dtype=float)
        H = H[(H @ n > level) & new.contains_many(H)]
        if len(H):
            m = H.mean(axis=0)
            if new.contains(m):
                return _with_interior(new, m)
    if old is not None and body.contains(old):
        nhat = n / np.linalg.norm(n)
        lo, hi = hit_and_run_chord(body, old, nhat)
        lo = max(lo, (level - float(n @ old)) / float(np.linalg.norm(n)))
        if hi > lo:
            mid = old + 0.5 * (lo + hi) * nhat
            if new.contains(mid):
                return _with_interior(new, mid)
    return new


def _with_interior(body: ConvexBody, point) -> ConvexBody:
    object.__setattr__(body, "interior_point", np.asarray(point, dtype=float).copy())
    return body


def default_sampling(d: int) -> tuple[int, int, int]:
    """``(n_samples, burn_in, thinning)`` defaults for dimension ``d``."""
    return max(1024, 512 * d), 50 * d * d, d


def estimate_centroid(
    body: ConvexBody,
    rng: np.random.Generator,
    n_samples: Optional[int] = None,
    burn_in: Optional[int] = None,
    thinning: Optional[int] = None,
    n_chains: int = 16,
    start_points=None,
) -> CentroidEstimate:
    """Approximate the center of gravity of ``body`` by hit-and-run.

    ``n_chains`` independent chains advance in lockstep; each runs ``burn_in``
    steps and then keeps every ``thinning``-th state until ``n_samples`` states
    have been collected overall. Chains start from ``start_points`` that lie in
    the body (cyclically) or from ``body.interior_point``.

    ``mu_hat`` averages the midpoints of all post-burn-in chords rather than
    the sampled states. Under stationarity the chord midpoint is the
    conditional mean of the next state, so this has the same limit with less
    variance. The kept states are returned in ``samples``.
    """
    d = body.dimension
    dn, db, dt = default_sampling(d)
    n_samples = dn if n_samples is None else int(n_samples)
    burn_in = db if burn_in is None else int(burn_in)
    thinning = dt if thinning is None else int(thinning)
    if n_samples < 1 or burn_in < 0 or thinning < 1:
        raise ValueError("need n_samples >= 1, burn_in >= 0, thinning >= 1")

    starts = None
    if start_points is not None and len(start_points):
        S = np.atleast_2d(np.asarray(start_points, dtype=float))
        S = S[body.contains_many(S)]
        if len(S):
            starts = S
    if starts is None:
        if body.interior_point is None or not body.contains(body.interior_point):
            raise EmptyInterior("no feasible interior point is known for this body")
        starts = body.interior_point[None, :]

    C = max(1, min(n_chains, n_samples))
    per_chain = math.ceil(n_samples / C)
    W = starts[np.arange(C) % len(starts)].copy()
    thin_streak = np.zeros(C, dtype=int)
    kept = np.empty((per_chain, C, d))
    n_steps = burn_in + per_chain * thinning
    shrink = 1.0 - 1e-12
    mid_sum = np.zeros(d)
    k = 0
    for step in range(1, n_steps + 1):
        D = rng.standard_normal((C, d))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        lo, hi = _chords(body, W, D)
        length = hi - lo
        thin = length < THIN_CHORD * body.radius
        thin_streak = np.where(thin, thin_streak + 1, 0)
        if np.all(thin_streak >= THIN_STREAK):
            raise EmptyInterior("body is too thin to sample (degenerate interior)")
        t = shrink * (lo + rng.random(C) * length)
        if step > burn_in:
            mid_sum += (W + (0.5 * shrink * (lo + hi))[:, None] * D).sum(axis=0)
        proposal = W + t[:, None] * D
        ok = body.contains_many(proposal)
        W[ok] = proposal[ok]
        if step > burn_in and (step - burn_in) % thinning == 0:
            kept[k] = W
            k += 1
    samples = kept.reshape(-1, d)[:n_samples]
    mu = mid_sum / (C * (n_steps - burn_in))
    interior = mu if body.contains(mu) else samples[-1]
    return CentroidEstimate(mu_hat=mu, n_samples=n_samples, interior_point=interior.copy(), samples=samples)
