import math

import numpy as np
import pytest

from nsgoldstein.errors import DifferentiabilityFailure, MalformedParameters, PersistentNondifferentiability, UnknownFunction
from nsgoldstein.oracle import (
    CountingOracle,
    TestFunctionSpec,
    check_gradient_fd,
    counted,
    eval_gradient_perturbed,
    list_functions,
    make_test_function,
    uniform_ball,
)


def fn(name, d=None, **params):
    return make_test_function(TestFunctionSpec(name, d, params))


def test_list_functions():
    assert set(list_functions()) == {
        "abs_sum", "euclid_norm", "linear", "max_affine", "shell", "cheby_nonsmooth_rosenbrock"
    }


def test_unknown_function():
    with pytest.raises(UnknownFunction):
        fn("nope", 2)


def test_missing_dimension():
    with pytest.raises(MalformedParameters):
        fn("abs_sum")


@pytest.mark.parametrize("name,d,params", [
    ("abs_sum", 3, {}),
    ("euclid_norm", 3, {}),
    ("linear", 2, {"c": np.array([3.0, -4.0])}),
    ("max_affine", 2, {}),
    ("shell", 3, {}),
    ("cheby_nonsmooth_rosenbrock", 3, {}),
])
def test_gradients_match_finite_differences(name, d, params):
    o = fn(name, d, **params)
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.uniform(-1.5, 1.5, d) / math.sqrt(d)
        assert check_gradient_fd(o, x, 1e-6) < 1e-4


@pytest.mark.parametrize("name,d,params", [
    ("abs_sum", 3, {}),
    ("euclid_norm", 3, {}),
    ("max_affine", 3, {}),
    ("shell", 2, {}),
    ("cheby_nonsmooth_rosenbrock", 2, {}),
])
def test_gradient_norm_within_declared_lipschitz(name, d, params):
    # dense sampling over the certified domain
    o = fn(name, d, **params)
    rng = np.random.default_rng(1)
    R = o.domain_radius or 2.0
    worst = 0.0
    for _ in range(4000):
        if o.domain_norm == "linf":
            x = rng.uniform(-R, R, d)
        else:
            x = uniform_ball(rng, np.zeros(d), R)
        try:
            worst = max(worst, float(np.linalg.norm(o.gradient(x))))
        except DifferentiabilityFailure:
            pass
    assert worst <= o.lipschitz_constant * (1 + 1e-12)


def test_shell_constants_from_grid():
    # |  ||x||^2 - 1 |: gradient +-2x, so L = 2R on radius R; f + ||x||^2 convex => rho = 2
    o = fn("shell", 2)
    assert o.lipschitz_constant == 4.0 and o.weak_convexity_rho == 2.0
    t = np.linspace(-2, 2, 201)
    X, Y = np.meshgrid(t, t)
    P = np.stack([X.ravel(), Y.ravel()], 1)
    P = P[np.linalg.norm(P, axis=1) <= 2]
    norms = [np.linalg.norm(o.gradient(p)) for p in P if abs(p @ p - 1) > 1e-12]
    assert max(norms) == pytest.approx(4.0, abs=1e-9)
    # midpoint convexity of f + (rho/2)||x||^2 on random pairs
    rng = np.random.default_rng(2)
    h = lambda x: o.value(x) + x @ x
    for _ in range(2000):
        a, b = rng.uniform(-1.4, 1.4, (2, 2))
        assert h((a + b) / 2) <= (h(a) + h(b)) / 2 + 1e-12
    # rho = 1 is too small: 1 - ||x||^2 + ||x||^2 / 2 is concave inside the ring
    a, b = np.array([-0.5, 0.0]), np.array([0.5, 0.0])
    h1 = lambda x: o.value(x) + 0.5 * x @ x
    assert h1((a + b) / 2) > (h1(a) + h1(b)) / 2


def test_kinks_raise():
    with pytest.raises(DifferentiabilityFailure):
        fn("abs_sum", 2).gradient(np.array([0.0, 1.0]))
    with pytest.raises(DifferentiabilityFailure):
        fn("euclid_norm", 2).gradient(np.zeros(2))
    with pytest.raises(DifferentiabilityFailure):
        fn("shell", 2).gradient(np.array([1.0, 0.0]))


def test_max_affine_default_is_inf_norm_and_minimum():
    o = fn("max_affine", 3)
    x = np.array([0.3, -0.9, 0.1])
    assert o.value(x) == pytest.approx(0.9)
    assert o.known_minimum == pytest.approx(0.0, abs=1e-9)


def test_max_affine_minimum_from_lp():
    # max(x, -x + 2) has minimum 1 at x = 1
    o = fn("max_affine", 1, slopes=np.array([[1.0], [-1.0]]), offsets=np.array([0.0, 2.0]))
    assert o.known_minimum == pytest.approx(1.0, abs=1e-9)


def test_rosenbrock_minimum():
    o = fn("cheby_nonsmooth_rosenbrock", 3)
    assert o.value(np.ones(3)) == 0.0
    assert o.known_minimum == 0.0


def test_linear_lipschitz_is_norm():
    o = fn("linear", 2, c=np.array([3.0, 4.0]))
    assert o.lipschitz_constant == pytest.approx(5.0)
    assert o.known_minimum is None


def test_perturbed_gradient_at_kink():
    o = fn("abs_sum", 1)
    rng = np.random.default_rng(0)
    g, p = eval_gradient_perturbed(o, np.zeros(1), rng)
    assert abs(g[0]) == 1.0 and 0 < abs(p[0]) <= 2.0 ** -40


def test_perturbed_gradient_respects_ball():
    o = fn("abs_sum", 1)
    rng = np.random.default_rng(0)
    for _ in range(50):
        # perturbation radius 2^-40 ~ 9.1e-13; half the candidates fall outside
        _, p = eval_gradient_perturbed(o, np.zeros(1), rng, within=(np.zeros(1), 4.5e-13))
        assert abs(p[0]) <= 4.5e-13


def test_zero_perturbation_is_persistent():
    with pytest.raises(PersistentNondifferentiability):
        eval_gradient_perturbed(fn("abs_sum", 1), np.zeros(1), np.random.default_rng(0), perturb_radius=0.0)


def test_counting_oracle():
    o = fn("abs_sum", 1)
    c = counted(o)
    assert counted(c) is c and isinstance(c, CountingOracle)
    c.value(np.ones(1))
    c.gradient(np.ones(1))
    with pytest.raises(DifferentiabilityFailure):
        c.gradient(np.zeros(1))
    assert (c.value_evals, c.grad_evals, c.grad_failures) == (1, 2, 1)
    assert c.lipschitz_constant == 1.0


def test_uniform_ball_radius_distribution():
    # P(||x|| <= r/2) = 2^-d for uniform in the ball
    rng = np.random.default_rng(3)
    pts = np.array([uniform_ball(rng, np.zeros(3), 1.0) for _ in range(20000)])
    assert np.all(np.linalg.norm(pts, axis=1) <= 1.0)
    assert np.mean(np.linalg.norm(pts, axis=1) <= 0.5) == pytest.approx(1 / 8, abs=0.01)
