import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsgoldstein.errors import CertificateError, ZeroDirection
from nsgoldstein.goldstein import (
    GoldsteinParams,
    StationarityCertificate,
    SubgradientEstimate,
    WitnessAccumulator,
    descent_quarter,
    descent_third,
    project_origin_segment,
    verify_certificate,
)
from nsgoldstein.oracle import TestFunctionSpec, counted, make_test_function


def fn(name, d, **params):
    return make_test_function(TestFunctionSpec(name, d, params))


def kink_certificate(weights=(0.5, 0.5), delta=0.2, eps=0.1, far=False):
    pts = np.array([[-delta / 2], [2 * delta if far else delta / 2]])
    est = SubgradientEstimate(
        vector=np.zeros(1), points=pts, gradients=np.array([[-1.0], [1.0]]),
        weights=np.array(weights), center=np.zeros(1),
    )
    return StationarityCertificate(est, 0.0, GoldsteinParams(delta, eps))


# ---- params


@pytest.mark.parametrize("kw", [
    dict(delta=0, epsilon=1), dict(delta=1, epsilon=-1), dict(delta=1, epsilon=1, gamma=1.0),
    dict(delta=1, epsilon=1, lipschitz=0), dict(delta=1, epsilon=1, rho=-1),
])
def test_params_validation(kw):
    with pytest.raises(ValueError):
        GoldsteinParams(**kw)


def test_params_for_oracle_copies_constants():
    p = GoldsteinParams.for_oracle(fn("shell", 2), 0.1, 0.2)
    assert (p.lipschitz, p.rho) == (4.0, 2.0)
    assert GoldsteinParams.for_oracle(fn("shell", 2), 0.1, 0.2, lipschitz=5.0, rho=3.0).rho == 3.0


# ---- segment projection


def test_project_examples():
    z, lam = project_origin_segment([1, 0], [-1, 0])
    assert np.allclose(z, 0) and lam == 0.5
    z, lam = project_origin_segment([3, 4], [3, 4])
    assert np.allclose(z, [3, 4]) and lam == 0.0
    z, lam = project_origin_segment([2, 0], [1, 1])
    assert np.allclose(z, [1, 1]) and lam == 1.0


def test_project_grid_optimality():
    rng = np.random.default_rng(0)
    t = np.linspace(0, 1, 101)
    for _ in range(10_000):
        g, u = rng.standard_normal((2, 3))
        z, lam = project_origin_segment(g, u)
        seg = np.linalg.norm(g[None] + t[:, None] * (u - g)[None], axis=1)
        assert np.linalg.norm(z) <= seg.min() + 1e-12
        assert np.allclose(z, g + lam * (u - g))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_project_norm_bound(v):
    g, u = np.array(v[:2]), np.array(v[2:])
    z, lam = project_origin_segment(g, u)
    assert 0 <= lam <= 1
    assert np.linalg.norm(z) <= min(np.linalg.norm(g), np.linalg.norm(u)) * (1 + 1e-12) + 1e-12


# ---- descent predicates


def test_descent_quarter_examples():
    assert descent_quarter(fn("linear", 2, c=np.array([1.0, 0])), np.zeros(2), np.array([1.0, 0]), 1.0)
    assert not descent_quarter(fn("abs_sum", 1), np.zeros(1), np.ones(1), 1.0)
    assert descent_quarter(fn("euclid_norm", 2), np.array([2.0, 0]), np.array([1.0, 0]), 1.0)


def test_descent_quarter_one_eval_with_cache():
    o = counted(fn("abs_sum", 1))
    descent_quarter(o, np.ones(1), np.ones(1), 0.5, fx=1.0)
    assert o.value_evals == 1


def test_descent_third_examples():
    o = fn("abs_sum", 1)
    assert descent_third(o, np.ones(1), np.ones(1), 0.5, 1.0)
    assert not descent_third(o, np.array([0.1]), np.ones(1), 1.0, 1.0)
    eps = 0.6
    c = np.array([eps / 4, 0.0])
    assert not descent_third(fn("linear", 2, c=c), np.array([0.3, -2.0]), c, 1.0, eps)


def test_zero_direction():
    with pytest.raises(ZeroDirection):
        descent_quarter(fn("abs_sum", 1), np.zeros(1), np.zeros(1), 1.0)
    with pytest.raises(ZeroDirection):
        descent_third(fn("abs_sum", 1), np.zeros(1), np.zeros(1), 1.0, 1.0)


def test_quarter_implies_third_when_long():
    o = fn("euclid_norm", 2)
    rng = np.random.default_rng(1)
    eps = 0.3
    for _ in range(2000):
        x = rng.uniform(-2, 2, 2)
        g = rng.standard_normal(2)
        g *= rng.uniform(4 * eps / 3, 3) / np.linalg.norm(g)
        if descent_quarter(o, x, g, 0.5):
            assert descent_third(o, x, g, 0.5, eps)


# ---- witnesses and certificates


def test_accumulator_tracks_combination():
    rng = np.random.default_rng(2)
    acc = WitnessAccumulator(np.zeros(2), rng.standard_normal(2))
    for _ in range(200):
        u = rng.standard_normal(2)
        z, lam = project_origin_segment(acc.vector, u)
        acc.mix(rng.standard_normal(2), u, lam, vector=z)
    est = acc.estimate(np.zeros(2))
    assert abs(est.weights.sum() - 1) < 1e-10 and np.all(est.weights >= 0)
    assert np.allclose(est.weights @ est.gradients, est.vector, atol=1e-8)


def test_verify_examples():
    o = fn("abs_sum", 1)
    for eps in (1e-3, 0.1, 5.0):
        assert verify_certificate(o, kink_certificate(eps=eps))
    with pytest.raises(CertificateError) as e:
        verify_certificate(o, kink_certificate(weights=(0.7, 0.5)))
    assert e.value.code == "WEIGHTS_NOT_SIMPLEX"
    with pytest.raises(CertificateError) as e:
        verify_certificate(o, kink_certificate(far=True))
    assert e.value.code == "WITNESS_OUTSIDE_BALL"


def test_verify_gradient_and_combination_mismatch():
    o = fn("abs_sum", 1)
    cert = kink_certificate()
    bad = StationarityCertificate(
        SubgradientEstimate(cert.estimate.vector, cert.estimate.points, np.array([[-1.0], [0.5]]),
                            cert.estimate.weights, cert.estimate.center), 0.0, cert.params)
    with pytest.raises(CertificateError) as e:
        verify_certificate(o, bad)
    assert e.value.code == "GRADIENT_MISMATCH"
    bad = StationarityCertificate(
        SubgradientEstimate(np.array([0.2]), cert.estimate.points, cert.estimate.gradients,
                            cert.estimate.weights, cert.estimate.center), 0.2, cert.params)
    with pytest.raises(CertificateError) as e:
        verify_certificate(o, bad)
    assert e.value.code == "COMBINATION_MISMATCH"


def test_verify_false_when_norm_exceeds_eps():
    o = fn("abs_sum", 1)
    est = SubgradientEstimate(np.ones(1), np.array([[0.9]]), np.ones((1, 1)), np.ones(1), np.ones(1))
    assert verify_certificate(o, StationarityCertificate.from_estimate(est, GoldsteinParams(0.2, 0.5))) is False


def test_json_roundtrip_and_digest():
    cert = kink_certificate()
    back = StationarityCertificate.from_json(cert.to_json())
    assert verify_certificate(fn("abs_sum", 1), back)
    doc = json.loads(cert.to_json())
    doc["params"]["epsilon"] = 10.0
    with pytest.raises(CertificateError) as e:
        StationarityCertificate.from_dict(doc)
    assert e.value.code == "DIGEST_MISMATCH"
