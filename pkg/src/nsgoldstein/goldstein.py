"""Goldstein-subdifferential data model, descent tests and certificates.

A :class:`SubgradientEstimate` is an explicit convex combination of gradients
taken at points of the ball ``B_delta(x)``, so membership in the Goldstein
subdifferential can be re-checked from raw oracle calls.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import CertificateError, ZeroDirection

SIMPLEX_TOL = 1e-10
BALL_TOL = 1e-10
RECOMPUTE_TOL = 1e-8
CERTIFICATE_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class GoldsteinParams:
    delta: float
    epsilon: float
    gamma: float = 0.01
    lipschitz: float = 1.0
    rho: Optional[float] = None

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.lipschitz > 0:
            raise ValueError(f"lipschitz must be positive, got {self.lipschitz}")
        if self.rho is not None and not self.rho >= 0:
            raise ValueError(f"rho must be nonnegative, got {self.rho}")

    @classmethod
    def for_oracle(cls, oracle, delta, epsilon, gamma=0.01, lipschitz=None, rho=None):
        """Copy L (and rho, when declared) from the oracle unless overridden."""
        return cls(
            delta=float(delta),
            epsilon=float(epsilon),
            gamma=float(gamma),
            lipschitz=float(oracle.lipschitz_constant if lipschitz is None else lipschitz),
            rho=oracle.weak_convexity_rho if rho is None else float(rho),
        )

    def to_dict(self) -> dict:
        return dict(delta=self.delta, epsilon=self.epsilon, gamma=self.gamma,
                    lipschitz=self.lipschitz, rho=self.rho)


@dataclass(frozen=True, eq=False)
class SubgradientEstimate:
    """``vector = sum_i weights[i] * gradients[i]`` with ``points[i]`` in B_delta(center)."""

    vector: np.ndarray
    points: np.ndarray
    gradients: np.ndarray
    weights: np.ndarray
    center: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    @property
    def n_witnesses(self) -> int:
        return len(self.weights)

    def to_dict(self) -> dict:
        return dict(
            center=self.center.tolist(),
            vector=self.vector.tolist(),
            witnesses=[
                dict(point=p.tolist(), gradient=g.tolist(), weight=float(w))
                for p, g, w in zip(self.points, self.gradients, self.weights)
            ],
        )

    @classmethod
    def from_dict(cls, data: dict) -> "SubgradientEstimate":
        wit = data["witnesses"]
        d = len(data["center"])
        return cls(
            vector=np.asarray(data["vector"], dtype=float),
            points=np.asarray([w["point"] for w in wit], dtype=float).reshape(-1, d),
            gradients=np.asarray([w["gradient"] for w in wit], dtype=float).reshape(-1, d),
            weights=np.asarray([w["weight"] for w in wit], dtype=float),
            center=np.asarray(data["center"], dtype=float),
        )


class WitnessAccumulator:
    """Tracks the convex combination built by repeated segment projections.

    ``mix(point, grad, lam)`` replaces the running vector ``g`` by
    ``(1 - lam) g + lam grad``. Weights are stored lazily scaled so an update
    costs O(1) instead of rescaling every stored weight.
    """

    def __init__(self, point, grad):
        self.points = [np.asarray(point, dtype=float)]
        self.gradients = [np.asarray(grad, dtype=float)]
        self._raw = [1.0]
        self._scale = 1.0
        self.vector = np.array(grad, dtype=float)

    def mix(self, point, grad, lam: float, vector=None):
        grad = np.asarray(grad, dtype=float)
        if lam >= 1.0:
            self.points, self.gradients = [np.asarray(point, dtype=float)], [grad]
            self._raw, self._scale = [1.0], 1.0
            self.vector = grad.copy() if vector is None else np.asarray(vector, dtype=float)
            return
        if lam <= 0.0:
            return
        self._scale *= 1.0 - lam
        if self._scale < 1e-200:
            self._raw = [w * self._scale for w in self._raw]
            self._scale = 1.0
        self.points.append(np.asarray(point, dtype=float))
        self.gradients.append(grad)
        self._raw.append(lam / self._scale)
        if vector is None:
            vector = self.vector + lam * (grad - self.vector)
        self.vector = np.asarray(vector, dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.asarray(self._raw) * self._scale

    def estimate(self, center) -> SubgradientEstimate:
        return SubgradientEstimate(
            vector=self.vector.copy(),
            points=np.array(self.points),
            gradients=np.array(self.gradients),
            weights=self.weights,
            center=np.asarray(center, dtype=float).copy(),
        )


@dataclass(frozen=True, eq=False)
class StationarityCertificate:
    estimate: SubgradientEstimate
    norm_bound: float
    params: GoldsteinParams

    @classmethod
    def from_estimate(cls, estimate: SubgradientEstimate, params: GoldsteinParams):
        return cls(estimate=estimate, norm_bound=estimate.norm, params=params)

    @property
    def x(self) -> np.ndarray:
        return self.estimate.center

    def to_dict(self) -> dict:
        body = dict(
            schema_version=CERTIFICATE_SCHEMA_VERSION,
            x=self.estimate.center.tolist(),
            g=self.estimate.vector.tolist(),
            norm_bound=self.norm_bound,
            params=self.params.to_dict(),
            witnesses=self.estimate.to_dict()["witnesses"],
        )
        body["digest"] = _digest(body)
        return body

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, data: dict, check_digest: bool = True) -> "StationarityCertificate":
        if check_digest and "digest" in data:
            body = {k: v for k, v in data.items() if k != "digest"}
            if _digest(body) != data["digest"]:
                raise CertificateError("DIGEST_MISMATCH", "certificate document was modified after signing")
        est = SubgradientEstimate.from_dict(
            dict(center=data["x"], vector=data["g"], witnesses=data["witnesses"])
        )
        return cls(estimate=est, norm_bound=float(data["norm_bound"]), params=GoldsteinParams(**data["params"]))

    @classmethod
    def from_json(cls, text: str, check_digest: bool = True) -> "StationarityCertificate":
        return cls.from_dict(json.loads(text), check_digest=check_digest)


def _digest(body: dict) -> str:
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def project_origin_segment(g, u) -> tuple[np.ndarray, float]:
    """Minimum-norm point ``z = g + lam (u - g)`` of the segment ``[g, u]``."""
    g = np.asarray(g, dtype=float)
    u = np.asarray(u, dtype=float)
    diff = g - u
    dd = float(diff @ diff)
    if dd == 0.0:
        return g.copy(), 0.0
    lam = min(1.0, max(0.0, float(g @ diff) / dd))
    if lam == 1.0:
        return u.copy(), 1.0
    return g + lam * (u - g), lam


def unit(g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    n = np.linalg.norm(g)
    if n == 0.0:
        raise ZeroDirection("direction has zero norm")
    return g / n


def descent_quarter(oracle, x, g, delta: float, fx: Optional[float] = None) -> bool:
    """True iff ``f(x - delta*g_hat) <= f(x) - delta*||g||/4``.

    Pass the cached ``fx = f(x)`` to spend exactly one value evaluation.
    """
    g = np.asarray(g, dtype=float)
    ghat = unit(g)
    if fx is None:
        fx = oracle.value(x)
    return oracle.value(np.asarray(x, dtype=float) - delta * ghat) <= fx - 0.25 * delta * float(np.linalg.norm(g))


def descent_third(oracle, x, g, delta: float, epsilon: float, fx: Optional[float] = None) -> bool:
    """True iff ``f(x - delta*g_hat) <= f(x) - delta*epsilon/3``."""
    ghat = unit(g)
    if fx is None:
        fx = oracle.value(x)
    return oracle.value(np.asarray(x, dtype=float) - delta * ghat) <= fx - delta * epsilon / 3.0


def verify_certificate(oracle, cert: StationarityCertificate) -> bool:
    """Re-check a certificate against fresh gradient evaluations.

    Raises :class:`CertificateError` naming the first violated invariant;
    otherwise returns whether the certified norm is within ``epsilon``.
    """
    est = cert.estimate
    x = np.asarray(est.center, dtype=float)
    params = cert.params
    w = np.asarray(est.weights, dtype=float)
    pts = np.asarray(est.points, dtype=float).reshape(len(w), -1)
    grads = np.asarray(est.gradients, dtype=float).reshape(len(w), -1)

    if len(w) == 0 or np.any(w < -SIMPLEX_TOL) or abs(float(w.sum()) - 1.0) > SIMPLEX_TOL:
        raise CertificateError("WEIGHTS_NOT_SIMPLEX", f"weights sum to {w.sum()!r}")

    dist = np.linalg.norm(pts - x, axis=1)
    far = np.flatnonzero(dist > params.delta + BALL_TOL)
    if far.size:
        i = int(far[0])
        raise CertificateError(
            "WITNESS_OUTSIDE_BALL", f"witness {i} lies at distance {dist[i]!r} > delta={params.delta!r}"
        )

    for i, (p, g) in enumerate(zip(pts, grads)):
        try:
            fresh = oracle.gradient(p)
        except Exception as exc:  # any oracle failure at a stored witness is a mismatch
            raise CertificateError("GRADIENT_MISMATCH", f"gradient unavailable at witness {i}: {exc}")
        if np.max(np.abs(fresh - g)) > RECOMPUTE_TOL:
            raise CertificateError("GRADIENT_MISMATCH", f"stored gradient {i} differs from the oracle")

    combo = w @ grads
    if np.max(np.abs(combo - est.vector)) > RECOMPUTE_TOL:
        raise CertificateError("COMBINATION_MISMATCH", "vector is not the weighted sum of witness gradients")

    norm = float(np.linalg.norm(est.vector))
    if not math.isclose(cert.norm_bound, norm, rel_tol=1e-12, abs_tol=RECOMPUTE_TOL):
        raise CertificateError("NORM_MISMATCH", f"norm_bound {cert.norm_bound!r} != ||g|| = {norm!r}")
    return cert.norm_bound <= params.epsilon

