"""Perturbed min-norm inner loop and interpolated normalized gradient descent."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import NormExceedsL, ZeroDirection
from .goldstein import (
    GoldsteinParams,
    StationarityCertificate,
    SubgradientEstimate,
    WitnessAccumulator,
    project_origin_segment,
    unit,
)
from .oracle import counted, eval_gradient_perturbed, uniform_ball
from .trace import DECAY_CHECKPOINTS, RunTrace, TraceRecord


class Outcome(str, enum.Enum):
    DESCENT = "DESCENT"
    SMALL_NORM = "SMALL_NORM"
    BUDGET_EXHAUSTED = "BUDGET_EXHAUSTED"


def inner_iteration_budget(lipschitz: float, epsilon: float, gamma: float) -> int:
    """``ceil(64 L^2 / eps^2) * ceil(2 ln(1/gamma))``; MinNorm stops within it w.p. >= 1 - gamma."""
    return math.ceil(64.0 * lipschitz ** 2 / epsilon ** 2) * max(1, math.ceil(2.0 * math.log(1.0 / gamma)))


def ingd_evaluation_bound(delta_gap: float, params: GoldsteinParams) -> int:
    """Joint value + gradient evaluation bound for a full INGD run.

    ``ceil(4D/(de)) * ceil(64 L^2/e^2) * ceil(2 ln(4D/(g d e)))`` with the gap
    ``D`` floored at ``delta*epsilon/4`` so that at least one outer step is
    budgeted.
    """
    d, e, L, g = params.delta, params.epsilon, params.lipschitz, params.gamma
    gap = max(delta_gap, d * e / 4.0)
    steps = math.ceil(4.0 * gap / (d * e))
    return steps * math.ceil(64.0 * L ** 2 / e ** 2) * max(1, math.ceil(2.0 * math.log(4.0 * gap / (g * d * e))))


def outer_iterations(delta_gap: float, delta: float, epsilon: float, factor: float = 4.0) -> int:
    """``ceil(factor * gap / (delta * epsilon))``, at least 1."""
    return max(1, math.ceil(factor * delta_gap / (delta * epsilon)))


@dataclass(frozen=True)
class MinNormConfig:
    params: GoldsteinParams
    max_inner_iters: Optional[int] = None
    r_fraction: float = 0.5
    on_budget_exhausted: str = "abort"

    def __post_init__(self):
        if self.max_inner_iters is None:
            p = self.params
            object.__setattr__(self, "max_inner_iters", inner_iteration_budget(p.lipschitz, p.epsilon, p.gamma))
        if self.max_inner_iters < 1:
            raise ValueError("max_inner_iters must be >= 1")
        if not 0 < self.r_fraction < 1:
            raise ValueError("r_fraction must lie in (0, 1)")
        if self.on_budget_exhausted not in ("abort", "continue"):
            raise ValueError("on_budget_exhausted must be 'abort' or 'continue'")


def perturbation_radius(g, lipschitz: float, r_fraction: float = 0.5) -> float:
    """``r_fraction * ||g|| * sqrt(1 - (1 - ||g||^2 / (128 L^2))^2)``."""
    gn = float(np.linalg.norm(g))
    if gn == 0.0:
        raise ZeroDirection("cannot perturb a zero vector")
    if gn > lipschitz * (1.0 + 1e-9):
        raise NormExceedsL(f"||g|| = {gn!r} exceeds L = {lipschitz!r}; the oracle is inconsistent")
    if not 0 < r_fraction < 1:
        raise ValueError("r_fraction must lie in (0, 1)")
    s = 1.0 - gn * gn / (128.0 * lipschitz ** 2)
    return r_fraction * gn * math.sqrt(1.0 - s * s)


class MinNormResult(NamedTuple):
    estimate: SubgradientEstimate
    outcome: Outcome
    inner_iters: int
    value_evals: int
    grad_evals: int
    running_sq_norms: list
    f_step: Optional[float]

    def decay_values(self, checkpoints=DECAY_CHECKPOINTS) -> dict:
        """``||g_k||^2 * 1{still running at k}`` for each checkpoint k."""
        h = self.running_sq_norms
        return {k: (h[k] if k < len(h) else 0.0) for k in checkpoints}


def min_norm(oracle, x, cfg: MinNormConfig, rng: np.random.Generator, fx: Optional[float] = None) -> MinNormResult:
    """Approximate minimal-norm element of the Goldstein subdifferential at ``x``.

    Starts from the gradient at a uniform point of ``B_delta(x)``. While the
    current ``g`` is longer than ``epsilon`` and fails the quarter descent
    test, it draws ``zeta`` uniformly from a small ball around ``g``, takes the
    gradient at a uniform point of ``[x, x - delta * zeta_hat]`` and replaces
    ``g`` by the min-norm point of the segment joining the two.

    ``f_step`` in the result is ``f(x - delta * g_hat)`` from the last descent
    test, so a caller that steps there need not re-evaluate it.
    """
    o = counted(oracle)
    v_start, g_start = o.snapshot()
    x = np.asarray(x, dtype=float)
    p = cfg.params
    delta, eps = p.delta, p.epsilon
    ball = (x, delta)
    if fx is None:
        fx = o.value(x)

    grad, point = eval_gradient_perturbed(o, uniform_ball(rng, x, delta), rng, within=ball)
    acc = WitnessAccumulator(point, grad)
    running = []
    f_step = None
    k = 0
    while True:
        g = acc.vector
        gn = float(np.linalg.norm(g))
        if gn <= eps:
            outcome = Outcome.SMALL_NORM
            break
        f_step = o.value(x - delta * (g / gn))
        if f_step <= fx - 0.25 * delta * gn:
            outcome = Outcome.DESCENT
            break
        running.append(gn * gn)
        if k >= cfg.max_inner_iters:
            outcome = Outcome.BUDGET_EXHAUSTED
            break
        r = perturbation_radius(g, p.lipschitz, cfg.r_fraction)
        zeta_hat = unit(uniform_ball(rng, g, r))
        y = x - rng.random() * delta * zeta_hat
        u, y = eval_gradient_perturbed(o, y, rng, within=ball)
        z, lam = project_origin_segment(g, u)
        acc.mix(y, u, lam, vector=z)
        k += 1

    v_end, g_end = o.snapshot()
    return MinNormResult(
        estimate=acc.estimate(x),
        outcome=outcome,
        inner_iters=k,
        value_evals=v_end - v_start,
        grad_evals=g_end - g_start,
        running_sq_norms=running,
        f_step=f_step,
    )


class RunResult(NamedTuple):
    x: np.ndarray
    trace: RunTrace
    certificate: Optional[StationarityCertificate]


def ingd_run(oracle, x0, cfg: MinNormConfig, T: int, rng: np.random.Generator) -> RunResult:
    """Run up to ``T`` outer steps ``x <- x - delta * g_hat``.

    Stops early with a certificate as soon as MinNorm returns a vector of
    norm at most ``epsilon``. A MinNorm call that exhausts its budget aborts
    the run (or, with ``on_budget_exhausted='continue'``, retries from the
    same point at the next outer iteration).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    o = counted(oracle)
    p = cfg.params
    x = np.asarray(x0, dtype=float).copy()
    fx = o.value(x)
    trace = RunTrace("ingd")
    k_total = 0
    certificate = None
    for t in range(T):
        res = min_norm(o, x, cfg, rng, fx=fx)
        k_total += res.inner_iters
        trace.append(TraceRecord(
            t=t, x=x.copy(), f=fx, g_norm=res.estimate.norm, inner_iters=res.inner_iters,
            k_total=k_total, value_evals=o.value_evals, grad_evals=o.grad_evals,
            outcome=res.outcome.value, g2_k=res.decay_values(),
        ))
        if res.outcome is Outcome.SMALL_NORM:
            certificate = StationarityCertificate.from_estimate(res.estimate, p)
            break
        if res.outcome is Outcome.BUDGET_EXHAUSTED:
            trace.budget_exhausted = True
            if cfg.on_budget_exhausted == "abort":
                break
            continue
        x = x - p.delta * unit(res.estimate.vector)
        fx = res.f_step
    return RunResult(x=x, trace=trace, certificate=certificate)
