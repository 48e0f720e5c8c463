import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsgoldstein.errors import DimensionMismatch, ZeroDirection
from nsgoldstein.minnorm_poly import min_norm_lower_witness, wolfe_min_norm

from bruteforce import min_norm_bruteforce


def gap(P, x):
    return float(x @ x - np.min(np.asarray(P) @ x))


def test_examples():
    x, w = wolfe_min_norm([[3, 1], [1, 3], [2, 4]])
    assert np.allclose(x, [2, 2], atol=1e-9)
    assert np.allclose(w, [0.5, 0.5, 0.0], atol=1e-9)
    x, w = wolfe_min_norm([[1, 0], [-1, 0], [0, 1]])
    assert np.allclose(x, 0, atol=1e-9)
    x, w = wolfe_min_norm([[3.0, -4.0]])
    assert np.allclose(x, [3, -4]) and np.allclose(w, [1.0])


def test_bad_input():
    with pytest.raises(DimensionMismatch):
        wolfe_min_norm([])
    with pytest.raises(DimensionMismatch):
        wolfe_min_norm([[1, 2], [3]])


def test_duplicates_and_ties_deterministic():
    P = [[1.0, 1.0], [1.0, 1.0], [2.0, 2.0]]
    x1, w1 = wolfe_min_norm(P)
    x2, w2 = wolfe_min_norm(P)
    assert np.array_equal(w1, w2)
    assert np.allclose(x1, [1, 1]) and w1[0] == 1.0


def test_matches_bruteforce_small():
    rng = np.random.default_rng(0)
    for _ in range(40):
        d = int(rng.integers(2, 4))
        n = int(rng.integers(1, 6))
        P = rng.uniform(-1, 1, (n, d))
        x, w = wolfe_min_norm(P)
        ref, _ = min_norm_bruteforce(P)
        assert abs(np.linalg.norm(x) - ref) <= 1e-3
        assert np.allclose(w @ P, x, atol=1e-9)


def test_gap_random():
    rng = np.random.default_rng(1)
    for _ in range(200):
        d = int(rng.integers(2, 12))
        n = int(rng.integers(1, 40))
        P = rng.standard_normal((n, d)) + rng.standard_normal(d)
        x, w = wolfe_min_norm(P)
        assert gap(P, x) <= 1e-6
        assert np.all(w >= 0) and abs(w.sum() - 1) < 1e-12


def test_warm_start_same_answer():
    rng = np.random.default_rng(2)
    P = rng.standard_normal((10, 4)) + 1.0
    x, w = wolfe_min_norm(P[:6])
    x2, _ = wolfe_min_norm(P, warm_start=w)
    x3, _ = wolfe_min_norm(P)
    assert np.allclose(x2, x3, atol=1e-8)


def test_lower_witness():
    P = np.array([[3.0, 1.0], [1.0, 3.0], [2.0, 4.0]])
    x, _ = wolfe_min_norm(P)
    lb = min_norm_lower_witness(P, x)
    assert lb == pytest.approx(np.linalg.norm(x), abs=1e-8)
    with pytest.raises(ZeroDirection):
        min_norm_lower_witness(P, np.zeros(2))


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2 ** 32 - 1))
def test_property_optimality(n, d, seed):
    P = np.random.default_rng(seed).uniform(-5, 5, (n, d))
    x, w = wolfe_min_norm(P)
    assert gap(P, x) <= 1e-6 * (1 + x @ x)
    assert np.linalg.norm(x) <= np.min(np.linalg.norm(P, axis=1)) + 1e-9
