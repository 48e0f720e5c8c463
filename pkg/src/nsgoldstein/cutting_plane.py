"""Center-of-gravity cutting-plane search for a short Goldstein subgradient.

The dual of ``min_{g in Q} ||g||`` is ``max_{||v|| <= 1} min_{g in Q} <g, v>``.
A direction that fails the descent test lets the inner-product oracle return
a subgradient ``u`` with ``<u, v_hat> <= epsilon/2``, and that ``u`` is a
separating hyperplane for the dual maximizer. :func:`min_norm_cg` runs the
center-of-gravity method on the dual using these cuts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

import numpy as np

from .errors import EmptyInterior, OracleBudgetExhausted, RhoAbsent
from .geometry import ConvexBody, cut, estimate_centroid
from .goldstein import GoldsteinParams, StationarityCertificate, SubgradientEstimate, unit
from .ingd import RunResult
from .minnorm_poly import wolfe_min_norm
from .oracle import counted, eval_gradient_perturbed, uniform_ball
from .trace import RunTrace, TraceRecord

LIPSCHITZ = "lipschitz"
WEAKLY_CONVEX = "weakly_convex"
SEARCH_RADIUS = 2.0


@dataclass(frozen=True, eq=False)
class OracleQuery:
    """Segment ``[x, y]`` with ``y = x - delta * g_hat``."""

    g: np.ndarray
    g_hat: np.ndarray
    x: np.ndarray
    y: np.ndarray

    @classmethod
    def make(cls, x, g, delta: float) -> "OracleQuery":
        x = np.asarray(x, dtype=float)
        g = np.asarray(g, dtype=float)
        g_hat = unit(g)
        return cls(g=g, g_hat=g_hat, x=x, y=x - delta * g_hat)

    def point(self, t: float) -> np.ndarray:
        return self.x + t * (self.y - self.x)

    @property
    def delta(self) -> float:
        return float(np.linalg.norm(self.y - self.x))


def lipschitz_oracle_samples(lipschitz: float, epsilon: float, gamma: float) -> int:
    """``ceil(36 L / eps) * ceil(ln(1/gamma) / ln 4)``."""
    return math.ceil(36.0 * lipschitz / epsilon) * max(1, math.ceil(math.log(1.0 / gamma) / math.log(4.0)))


def ip_oracle_lipschitz(oracle, q: OracleQuery, params: GoldsteinParams, rng: np.random.Generator):
    """Sample the segment until a gradient has ``<grad, g_hat> <= epsilon/2``.

    Needs ``q.g`` to fail the descent test, which makes each sample succeed
    with probability at least ``epsilon / (12 L)``. Returns ``(u, witness)``.
    """
    budget = lipschitz_oracle_samples(params.lipschitz, params.epsilon, params.gamma)
    ball = (q.x, params.delta)
    for _ in range(budget):
        z = q.point(rng.random())
        u, z = eval_gradient_perturbed(oracle, z, rng, within=ball)
        if float(u @ q.g_hat) <= 0.5 * params.epsilon:
            return u, z
    raise OracleBudgetExhausted(f"no sample with <u, g_hat> <= eps/2 in {budget} draws", budget=budget)


def binary_search_steps(delta: float, rho: float, epsilon: float) -> int:
    """Halvings needed to shrink [0, 1] below ``epsilon / (6 delta rho)``."""
    if rho <= 0:
        return 0
    return max(0, math.ceil(math.log2(6.0 * delta * rho / epsilon)))


def ip_oracle_weakly_convex(oracle, q: OracleQuery, params: GoldsteinParams,
                            rng: Optional[np.random.Generator] = None):
    """Bisection on the segment using function values only, for rho-weakly convex f.

    Keeps an interval ``[a, b]`` of the segment on which the average
    directional slope is at most ``epsilon/3``, halving toward the half with
    the smaller decrease, until ``b - a <= epsilon / (6 delta rho)``. Weak
    convexity then bounds the slope at the right end ``b`` by ``epsilon/2``.
    Each endpoint value is computed once. Returns ``(u, witness)``.
    """
    if params.rho is None:
        raise RhoAbsent("the weakly convex oracle needs a declared rho")
    rng = np.random.default_rng(0) if rng is None else rng
    delta, rho, eps = params.delta, params.rho, params.epsilon
    width = eps / (6.0 * delta * rho) if rho > 0 else math.inf
    cache = {}

    def f(t):
        if t not in cache:
            cache[t] = oracle.value(q.point(t))
        return cache[t]

    a, b = 0.0, 1.0
    while b - a > width:
        m = 0.5 * (a + b)
        if f(a) - f(m) <= f(m) - f(b):
            b = m
        else:
            a = m
    u, z = eval_gradient_perturbed(oracle, q.point(b), rng, within=(q.x, delta))
    return u, z


def cg_call_cap(d: int, lipschitz: float, epsilon: float) -> int:
    """``ceil(8 d ln(8 L / eps))`` inner-product oracle calls (at least 0)."""
    return max(0, math.ceil(8.0 * d * math.log(8.0 * lipschitz / epsilon)))


class DescentDirection(NamedTuple):
    v: np.ndarray
    f_step: float


class SmallNorm(NamedTuple):
    certificate: StationarityCertificate


@dataclass
class CGState:
    """Search region, gradient hull and counters of one :func:`min_norm_cg` call."""

    body: ConvexBody
    points: list
    witnesses: list
    k: int = 0
    oracle_calls: int = 0
    call_cap: int = 0
    slack_used: bool = False
    centroid_samples: int = 0
    hull_norms: list = field(default_factory=list)
    inner_products: list = field(default_factory=list)
    queries: list = field(default_factory=list)
    variant: str = LIPSCHITZ
    warnings: list = field(default_factory=list)
    value_evals: int = 0
    grad_evals: int = 0


def _variant(name: str) -> str:
    key = str(name).lower().replace("-", "_")
    if key in ("lipschitz", "minnorm_cg_lipschitz"):
        return LIPSCHITZ
    if key in ("weakly_convex", "minnorm_cg_weakly_convex"):
        return WEAKLY_CONVEX
    raise ValueError(f"unknown cutting-plane variant {name!r}")


def min_norm_cg(oracle, x, params: GoldsteinParams, rng: np.random.Generator,
                variant: str = LIPSCHITZ, sampling: Optional[dict] = None,
                fx: Optional[float] = None) -> tuple[Union[DescentDirection, SmallNorm], CGState]:
    """Find a descent direction or a certified short subgradient at ``x``.

    Maintains the search region (ball of radius 2 cut by halfspaces) and the
    hull of gradients collected so far. Each round estimates the region's
    centroid ``v``; returns ``v`` if it passes the descent test, otherwise
    perturbs it to ``zeta`` (radius ``epsilon / (64 d L)``), returns ``zeta`` if
    that descends, and otherwise queries the inner-product oracle at ``zeta``
    and cuts the region with the answer. Ends with a certificate once the
    hull's min-norm point is within ``epsilon``.

    ``sampling`` is forwarded to :func:`~nsgoldstein.geometry.estimate_centroid`.
    """
    o = counted(oracle)
    v0, g0 = o.snapshot()
    variant = _variant(variant)
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    delta, eps, L = params.delta, params.epsilon, params.lipschitz
    sampling = dict(sampling or {})
    if fx is None:
        fx = o.value(x)

    state = CGState(body=ConvexBody.ball(d, SEARCH_RADIUS), points=[], witnesses=[], variant=variant)
    if variant == WEAKLY_CONVEX and params.rho is None:
        state.warnings.append("rho not declared; falling back to the Lipschitz oracle")
        variant = state.variant = LIPSCHITZ
    state.call_cap = cg_call_cap(d, L, eps)
    hard_cap = state.call_cap + 2 * d
    radius = 0.5 * eps / (32.0 * d * L)

    def finish(result):
        state.value_evals, state.grad_evals = o.value_evals - v0, o.grad_evals - g0
        return result, state

    grad, point = eval_gradient_perturbed(o, x, rng, within=(x, delta))
    state.points.append(grad)
    state.witnesses.append(point)
    weights = None
    cloud = None
    while True:
        g_star, weights = wolfe_min_norm(state.points, warm_start=weights)
        hull_norm = float(np.linalg.norm(g_star))
        state.hull_norms.append(hull_norm)
        if hull_norm <= eps:
            keep = weights > 0
            est = SubgradientEstimate(
                vector=g_star,
                points=np.array(state.witnesses)[keep],
                gradients=np.array(state.points)[keep],
                weights=weights[keep] / weights[keep].sum(),
                center=x.copy(),
            )
            return finish(SmallNorm(StationarityCertificate.from_estimate(est, params)))

        try:
            centroid = estimate_centroid(state.body, rng, start_points=cloud, **sampling)
        except EmptyInterior as exc:
            exc.context["state"] = state
            raise
        state.centroid_samples += centroid.n_samples
        cloud = centroid.samples
        v = centroid.mu_hat
        if np.linalg.norm(v) >= 1e-9:
            f_v = o.value(x - delta * unit(v))
            if f_v <= fx - delta * eps / 3.0:
                return finish(DescentDirection(v, f_v))
        zeta = uniform_ball(rng, v, radius)
        f_z = o.value(x - delta * unit(zeta))
        if f_z <= fx - delta * eps / 3.0:
            return finish(DescentDirection(zeta, f_z))

        if state.oracle_calls >= hard_cap:
            state.value_evals, state.grad_evals = o.value_evals - v0, o.grad_evals - g0
            raise OracleBudgetExhausted(
                f"min_norm_cg used {state.oracle_calls} oracle calls (cap {state.call_cap} + slack {2 * d})",
                state=state,
            )
        q = OracleQuery.make(x, zeta, delta)
        if variant == WEAKLY_CONVEX:
            u, witness = ip_oracle_weakly_convex(o, q, params, rng)
        else:
            u, witness = ip_oracle_lipschitz(o, q, params, rng)
        state.oracle_calls += 1
        if state.oracle_calls > state.call_cap:
            state.slack_used = True
        state.inner_products.append(float(u @ q.g_hat))
        state.queries.append(zeta)
        state.body = cut(state.body, u, zeta, hint_points=cloud)
        state.points.append(u)
        state.witnesses.append(witness)
        state.k += 1


def cg_descent_run(oracle, x0, params: GoldsteinParams, rng: np.random.Generator,
                   variant: str = LIPSCHITZ, T: int = 1, sampling: Optional[dict] = None) -> RunResult:
    """Outer loop ``x <- x - delta * v_hat`` driven by :func:`min_norm_cg`.

    Every accepted step lowers f by at least ``delta * epsilon / 3``. Stops
    with a certificate on the first small-norm outcome; an exhausted oracle
    budget is recorded in the trace and ends the run.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    o = counted(oracle)
    x = np.asarray(x0, dtype=float).copy()
    fx = o.value(x)
    trace = RunTrace("minnorm_cg_" + _variant(variant))
    k_total = 0
    certificate = None
    for t in range(T):
        try:
            result, state = min_norm_cg(o, x, params, rng, variant=variant, sampling=sampling, fx=fx)
        except OracleBudgetExhausted as exc:
            state = exc.context.get("state")
            trace.budget_exhausted = True
            trace.append(TraceRecord(
                t=t, x=x.copy(), f=fx, g_norm=state.hull_norms[-1] if state else math.nan,
                inner_iters=state.k if state else 0, k_total=k_total + (state.k if state else 0),
                value_evals=o.value_evals, grad_evals=o.grad_evals, outcome="BUDGET_EXHAUSTED",
                cg_iters=state.k if state else 0, oracle_calls=state.oracle_calls if state else 0,
                centroid_samples=state.centroid_samples if state else 0,
                slack_used=state.slack_used if state else False,
            ))
            break
        except EmptyInterior as exc:
            exc.context["trace"] = trace
            raise
        trace.warnings.extend(w for w in state.warnings if w not in trace.warnings)
        k_total += state.k
        small = isinstance(result, SmallNorm)
        trace.append(TraceRecord(
            t=t, x=x.copy(), f=fx, g_norm=state.hull_norms[-1], inner_iters=state.k, k_total=k_total,
            value_evals=o.value_evals, grad_evals=o.grad_evals,
            outcome="SMALL_NORM" if small else "DESCENT", cg_iters=state.k,
            oracle_calls=state.oracle_calls, centroid_samples=state.centroid_samples,
            slack_used=state.slack_used,
        ))
        if small:
            certificate = result.certificate
            break
        x = x - params.delta * unit(result.v)
        fx = result.f_step
    return RunResult(x=x, trace=trace, certificate=certificate)
