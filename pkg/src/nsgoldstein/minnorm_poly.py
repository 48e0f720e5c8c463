"""Minimum-norm point of the convex hull of finitely many points (Wolfe)."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ZeroDirection

RIDGE = 1e-12


def as_point_set(points) -> np.ndarray:
    """Validate a nonempty list of equal-length vectors into an (n, d) array."""
    try:
        P = np.asarray(points, dtype=float)
    except ValueError:
        raise DimensionMismatch("points do not share a common dimension")
    if P.ndim == 1 and P.size:
        P = P.reshape(1, -1)
    if P.ndim != 2 or P.shape[0] == 0 or P.shape[1] == 0:
        raise DimensionMismatch(f"expected a nonempty (n, d) point set, got shape {P.shape}")
    return P


def _affine_minimizer(B: np.ndarray) -> np.ndarray:
    """Weights v with sum(v) = 1 minimizing ||B^T v|| over the affine hull of rows of B."""
    m = B.shape[0]
    if m == 1:
        return np.ones(1)
    G = B @ B.T
    K = np.zeros((m + 1, m + 1))
    K[:m, :m] = G
    K[:m, m] = 1.0
    K[m, :m] = 1.0
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    try:
        sol = np.linalg.solve(K, rhs)
        if np.all(np.isfinite(sol)) and np.linalg.cond(K) < 1e14:
            return sol[:m]
    except np.linalg.LinAlgError:
        pass
    # singular affine subproblem: ridge-regularized normal equations
    ones = np.ones(m)
    y = np.linalg.solve(G + RIDGE * max(1.0, np.trace(G)) * np.eye(m), ones)
    return y / y.sum()


def wolfe_min_norm(points, tol: float = 1e-9, warm_start: Optional[np.ndarray] = None,
                   max_iter: Optional[int] = None) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm point of ``conv(points)``.

    Returns ``(g_star, weights)`` with ``weights`` on the simplex over the
    input points. Stops when ``<g_star, p_i> >= ||g_star||^2 - tol (1 + ||g_star||^2)``
    for every point. ``warm_start`` is a weight vector over a prefix of the
    points (e.g. the weights returned for the set before new points were
    appended); its support becomes the initial active set.
    """
    P = as_point_set(points)
    n = P.shape[0]
    if max_iter is None:
        max_iter = 50 * n + 100

    if warm_start is not None and np.any(np.asarray(warm_start) > 0):
        w0 = np.asarray(warm_start, dtype=float)
        active = [int(i) for i in np.flatnonzero(w0 > 0) if i < n]
        lam = w0[active] / w0[active].sum()
    else:
        sq = np.einsum("ij,ij->i", P, P)
        active = [int(np.argmin(sq))]
        lam = np.ones(1)
    x = lam @ P[active]

    for _ in range(max_iter):
        xx = float(x @ x)
        dots = P @ x
        j = int(np.argmin(dots))
        if dots[j] >= xx - tol * (1.0 + xx) or j in active:
            break
        active.append(j)
        lam = np.append(lam, 0.0)
        # minor cycles: move toward the affine minimizer, dropping points whose weight hits zero
        while True:
            v = _affine_minimizer(P[active])
            if np.all(v > 0):
                lam = v
                break
            neg = v <= 0
            ratios = lam[neg] / (lam[neg] - v[neg])
            theta = float(np.min(ratios)) if ratios.size else 0.0
            lam = lam + theta * (v - lam)
            keep = lam > 1e-15
            # the entering point always stays in the active set at least once
            if not np.any(keep):
                keep[np.argmax(lam)] = True
            active = [a for a, k in zip(active, keep) if k]
            lam = lam[keep]
            lam = lam / lam.sum()
            if len(active) == 1:
                lam = np.ones(1)
                break
        x = lam @ P[active]

    weights = np.zeros(n)
    weights[active] = lam
    weights /= weights.sum()
    return weights @ P, weights


def min_norm_lower_witness(points, g_star) -> float:
    """``min_i <g_star/||g_star||, p_i>``, a lower bound on the hull's min norm.

    At the exact minimizer this equals ``||g_star||``; the difference
    ``||g_star|| - value`` is a nonnegative optimality gap.
    """
    P = as_point_set(points)
    g = np.asarray(g_star, dtype=float)
    if g.shape[0] != P.shape[1]:
        raise DimensionMismatch("g_star and points differ in dimension")
    n = np.linalg.norm(g)
    if n == 0.0:
        raise ZeroDirection("g_star is zero")
    return float(np.min(P @ (g / n)))
