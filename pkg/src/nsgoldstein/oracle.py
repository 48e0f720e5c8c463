"""First-order oracles and the built-in Lipschitz test functions.

An oracle exposes ``value(x)`` everywhere and ``gradient(x)`` at points of
differentiability. At a kink the gradient raises
:class:`~nsgoldstein.errors.DifferentiabilityFailure` instead of returning an
arbitrary subgradient; :func:`eval_gradient_perturbed` is the only place where
such failures are resolved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (
    DifferentiabilityFailure,
    MalformedParameters,
    PersistentNondifferentiability,
    UnknownFunction,
)

DEFAULT_RETRY_CAP = 16


@dataclass(frozen=True, eq=False)
class FunctionOracle:
    """Value/gradient access to an L-Lipschitz function on R^d.

    ``gradient_fn`` returns ``None`` (or raises ``DifferentiabilityFailure``)
    where the function is not differentiable. ``domain_radius`` is set for
    functions whose Lipschitz constant is only certified locally; the norm it
    refers to is ``domain_norm`` (``"l2"`` ball or ``"linf"`` box).
    """

    dimension: int
    lipschitz_constant: float
    value_fn: Callable[[np.ndarray], float]
    gradient_fn: Callable[[np.ndarray], Optional[np.ndarray]]
    weak_convexity_rho: Optional[float] = None
    name: str = "custom"
    domain_radius: Optional[float] = None
    domain_norm: str = "l2"
    known_minimum: Optional[float] = None
    known_stationary_points: tuple = ()

    def value(self, x) -> float:
        return float(self.value_fn(np.asarray(x, dtype=float)))

    def gradient(self, x) -> np.ndarray:
        g = self.gradient_fn(np.asarray(x, dtype=float))
        if g is None:
            raise DifferentiabilityFailure(f"{self.name} is not differentiable at {x!r}")
        return np.asarray(g, dtype=float)

    def in_domain(self, x, slack: float = 0.0) -> bool:
        if self.domain_radius is None:
            return True
        x = np.asarray(x, dtype=float)
        size = np.max(np.abs(x)) if self.domain_norm == "linf" else np.linalg.norm(x)
        return bool(size <= self.domain_radius + slack)


class CountingOracle:
    """Wraps an oracle and counts value and gradient calls.

    Failed gradient attempts are counted in ``grad_evals`` as well as in
    ``grad_failures``.
    """

    def __init__(self, oracle: FunctionOracle):
        self.base = oracle
        self.value_evals = 0
        self.grad_evals = 0
        self.grad_failures = 0

    def __getattr__(self, name):
        if name == "base":
            raise AttributeError(name)
        return getattr(self.base, name)

    def value(self, x) -> float:
        self.value_evals += 1
        return self.base.value(x)

    def gradient(self, x) -> np.ndarray:
        self.grad_evals += 1
        try:
            return self.base.gradient(x)
        except DifferentiabilityFailure:
            self.grad_failures += 1
            raise

    def snapshot(self) -> tuple[int, int]:
        return self.value_evals, self.grad_evals


def counted(oracle) -> CountingOracle:
    """Return ``oracle`` itself if it already counts calls, else wrap it."""
    if isinstance(oracle, CountingOracle):
        return oracle
    return CountingOracle(oracle)


def uniform_ball(rng: np.random.Generator, center, radius: float) -> np.ndarray:
    center = np.asarray(center, dtype=float)
    d = center.shape[0]
    direction = rng.standard_normal(d)
    nrm = np.linalg.norm(direction)
    while nrm == 0.0:
        direction = rng.standard_normal(d)
        nrm = np.linalg.norm(direction)
    return center + radius * rng.random() ** (1.0 / d) * direction / nrm


def eval_gradient_perturbed(
    oracle,
    x,
    rng: np.random.Generator,
    perturb_radius: Optional[float] = None,
    retry_cap: int = DEFAULT_RETRY_CAP,
    within: Optional[tuple] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient at ``x``, or at a nearby random point if ``x`` is a kink.

    Returns ``(gradient, point)`` where ``point`` is where the gradient was
    actually taken. ``within=(center, radius)`` restricts perturbed points to
    the closed ball, so witnesses stay inside a Goldstein ball.
    """
    x = np.asarray(x, dtype=float)
    if perturb_radius is None:
        perturb_radius = 2.0 ** -40 * max(1.0, float(np.linalg.norm(x)))
    if perturb_radius < 0:
        raise ValueError("perturb_radius must be nonnegative")
    try:
        return oracle.gradient(x), x
    except DifferentiabilityFailure:
        if perturb_radius == 0.0:
            raise PersistentNondifferentiability(
                f"gradient undefined at {x!r} and perturb_radius is 0", point=x
            )
    for _ in range(retry_cap):
        xp = uniform_ball(rng, x, perturb_radius)
        if within is not None:
            center, radius = within
            if np.linalg.norm(xp - np.asarray(center)) > radius:
                continue
        try:
            return oracle.gradient(xp), xp
        except DifferentiabilityFailure:
            continue
    raise PersistentNondifferentiability(
        f"no differentiable point found near {x!r} after {retry_cap} retries", point=x
    )


def check_gradient_fd(oracle, x, step: float) -> float:
    """Max abs deviation between central differences and the reported gradient."""
    x = np.asarray(x, dtype=float)
    g = oracle.gradient(x)
    dev = 0.0
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        fd = (oracle.value(x + e) - oracle.value(x - e)) / (2.0 * step)
        dev = max(dev, abs(fd - g[i]))
    return dev


# --------------------------------------------------------------------------
# built-in test functions


@dataclass
class TestFunctionSpec:
    """Name plus parameters of a built-in test function.

    ``parameters`` holds function-specific constants: ``c`` for ``linear``,
    ``slopes``/``offsets`` for ``max_affine``. ``domain_radius`` is the radius
    of the region on which the Lipschitz constant is certified (Euclidean for
    ``shell``, max-norm box for ``cheby_nonsmooth_rosenbrock``).
    """

    __test__ = False  # not a pytest class

    name: str
    dimension: Optional[int] = None
    parameters: dict = field(default_factory=dict)
    domain_radius: Optional[float] = None
    known_stationary_points: Optional[list] = None


def _dim(spec, minimum=1) -> int:
    d = spec.dimension
    if d is None or int(d) != d or d < minimum:
        raise MalformedParameters(f"{spec.name} needs an integer dimension >= {minimum}, got {d!r}")
    return int(d)


def _abs_sum(spec):
    d = _dim(spec)

    def grad(x):
        if np.any(x == 0.0):
            return None
        return np.sign(x)

    return dict(
        dimension=d,
        lipschitz_constant=math.sqrt(d),
        value_fn=lambda x: float(np.sum(np.abs(x))),
        gradient_fn=grad,
        weak_convexity_rho=0.0,
        known_minimum=0.0,
        known_stationary_points=(np.zeros(d),),
    )


def _euclid_norm(spec):
    d = _dim(spec)

    def grad(x):
        n = np.linalg.norm(x)
        if n == 0.0:
            return None
        return x / n

    return dict(
        dimension=d,
        lipschitz_constant=1.0,
        value_fn=lambda x: float(np.linalg.norm(x)),
        gradient_fn=grad,
        weak_convexity_rho=0.0,
        known_minimum=0.0,
        known_stationary_points=(np.zeros(d),),
    )


def _linear(spec):
    if "c" not in spec.parameters:
        raise MalformedParameters("linear needs parameter c")
    c = np.asarray(spec.parameters["c"], dtype=float).ravel()
    if c.size == 0 or not np.all(np.isfinite(c)):
        raise MalformedParameters("linear: c must be a nonempty finite vector")
    if spec.dimension is not None and spec.dimension != c.size:
        raise MalformedParameters(f"linear: len(c)={c.size} but dimension={spec.dimension}")
    nc = float(np.linalg.norm(c))
    if nc == 0.0:
        raise MalformedParameters("linear: c must be nonzero")
    return dict(
        dimension=c.size,
        lipschitz_constant=nc,
        value_fn=lambda x: float(c @ x),
        gradient_fn=lambda x: c.copy(),
        weak_convexity_rho=0.0,
        known_minimum=None,
    )


def _max_affine(spec):
    params = spec.parameters
    if "slopes" in params:
        A = np.atleast_2d(np.asarray(params["slopes"], dtype=float))
        if np.asarray(params["slopes"]).size == 0:
            raise MalformedParameters("max_affine: empty affine-piece list")
    else:
        # default: the max-norm, f(x) = max_i |x_i|
        d = _dim(spec)
        A = np.vstack([np.eye(d), -np.eye(d)])
    if A.shape[0] == 0 or A.shape[1] == 0:
        raise MalformedParameters("max_affine: empty affine-piece list")
    if spec.dimension is not None and A.shape[1] != spec.dimension:
        raise MalformedParameters(f"max_affine: slopes have {A.shape[1]} columns, dimension={spec.dimension}")
    b = np.asarray(params.get("offsets", np.zeros(A.shape[0])), dtype=float).ravel()
    if b.shape[0] != A.shape[0]:
        raise MalformedParameters("max_affine: need one offset per slope row")
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
        raise MalformedParameters("max_affine: non-finite pieces")

    def value(x):
        return float(np.max(A @ x + b))

    def grad(x):
        vals = A @ x + b
        active = np.flatnonzero(vals == vals.max())
        if len(active) > 1 and np.any(A[active] != A[active[0]]):
            return None
        return A[active[0]].copy()

    minimum, argmin = _max_affine_minimum(A, b)
    return dict(
        dimension=A.shape[1],
        lipschitz_constant=float(np.max(np.linalg.norm(A, axis=1))),
        value_fn=value,
        gradient_fn=grad,
        weak_convexity_rho=0.0,
        known_minimum=minimum,
        known_stationary_points=() if argmin is None else (argmin,),
    )


def _max_affine_minimum(A, b):
    from scipy.optimize import linprog

    k, d = A.shape
    # min t  s.t.  A x + b <= t
    res = linprog(
        c=np.r_[np.zeros(d), 1.0],
        A_ub=np.hstack([A, -np.ones((k, 1))]),
        b_ub=-b,
        bounds=[(None, None)] * (d + 1),
        method="highs",
    )
    if res.status != 0:
        return None, None
    return float(res.fun), res.x[:d]


def _shell(spec):
    d = _dim(spec)
    R = 2.0 if spec.domain_radius is None else float(spec.domain_radius)
    if R <= 0:
        raise MalformedParameters("shell: domain_radius must be positive")

    def value(x):
        return abs(float(x @ x) - 1.0)

    def grad(x):
        s = float(x @ x) - 1.0
        if s == 0.0:
            return None
        return math.copysign(2.0, s) * x

    return dict(
        dimension=d,
        lipschitz_constant=2.0 * R,
        value_fn=value,
        gradient_fn=grad,
        weak_convexity_rho=2.0,
        domain_radius=R,
        domain_norm="l2",
        known_minimum=0.0,
        known_stationary_points=(np.zeros(d),),
    )


def _cheby_rosenbrock(spec):
    # f(x) = (x_1 - 1)^2 / 4 + sum_i |x_{i+1} - 2 x_i^2 + 1|, locally Lipschitz
    d = _dim(spec, minimum=2)
    B = 2.0 if spec.domain_radius is None else float(spec.domain_radius)
    if B <= 0:
        raise MalformedParameters("cheby_nonsmooth_rosenbrock: domain_radius must be positive")

    def value(x):
        return 0.25 * (x[0] - 1.0) ** 2 + float(np.sum(np.abs(x[1:] - 2.0 * x[:-1] ** 2 + 1.0)))

    def grad(x):
        inner = x[1:] - 2.0 * x[:-1] ** 2 + 1.0
        if np.any(inner == 0.0):
            return None
        s = np.sign(inner)
        g = np.zeros(d)
        g[0] = 0.5 * (x[0] - 1.0)
        g[:-1] += -4.0 * x[:-1] * s
        g[1:] += s
        return g

    # coordinate-wise gradient bounds on the box [-B, B]^d
    bounds = np.full(d, 1.0 + 4.0 * B)
    bounds[0] = 0.5 * (B + 1.0) + 4.0 * B
    bounds[-1] = 1.0
    return dict(
        dimension=d,
        lipschitz_constant=float(np.linalg.norm(bounds)),
        value_fn=value,
        gradient_fn=grad,
        weak_convexity_rho=None,
        domain_radius=B,
        domain_norm="linf",
        known_minimum=0.0,
        known_stationary_points=(np.ones(d),),
    )


_BUILDERS = {
    "abs_sum": _abs_sum,
    "euclid_norm": _euclid_norm,
    "max_affine": _max_affine,
    "cheby_nonsmooth_rosenbrock": _cheby_rosenbrock,
    "shell": _shell,
    "linear": _linear,
}

FUNCTION_DESCRIPTIONS = {
    "abs_sum": "sum_i |x_i|; L = sqrt(d); kinks on the coordinate hyperplanes",
    "euclid_norm": "||x||_2; L = 1; kink at the origin",
    "max_affine": "max_i <a_i, x> + b_i (default pieces give ||x||_inf); L = max ||a_i||",
    "cheby_nonsmooth_rosenbrock": "(x_1-1)^2/4 + sum |x_{i+1} - 2 x_i^2 + 1|; L certified on [-B, B]^d",
    "shell": "| ||x||^2 - 1 |; L = 2R on the ball of radius R; rho = 2",
    "linear": "<c, x>; L = ||c||; never stationary",
}


def list_functions() -> list[str]:
    return sorted(_BUILDERS)


def make_test_function(spec: TestFunctionSpec) -> FunctionOracle:
    """Instantiate a built-in test function."""
    try:
        builder = _BUILDERS[spec.name]
    except KeyError:
        raise UnknownFunction(f"unknown test function {spec.name!r}; known: {', '.join(list_functions())}")
    kwargs = builder(spec)
    if spec.known_stationary_points is not None:
        kwargs["known_stationary_points"] = tuple(np.asarray(p, dtype=float) for p in spec.known_stationary_points)
    return FunctionOracle(name=spec.name, **kwargs)
