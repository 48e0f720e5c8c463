import math

import numpy as np
import pytest

from nsgoldstein.errors import EmptyInterior, PointNotInterior, ZeroNormal
from nsgoldstein.geometry import ConvexBody, cut, default_sampling, estimate_centroid, hit_and_run_chord

HALF_DISK_CENTROID = np.array([4 / (3 * math.pi), 0.0])


def half_disk():
    return cut(ConvexBody.ball(2, 1.0), np.array([1.0, 0.0]), np.zeros(2))


def test_default_sampling():
    assert default_sampling(1) == (1024, 50, 1)
    assert default_sampling(3) == (1536, 450, 3)


def test_ball_contains():
    b = ConvexBody.ball(3)
    assert b.contains(np.array([0, 0, 2.0])) and not b.contains(np.array([0, 0, 2.01]))
    assert b.n_cuts == 0 and np.array_equal(b.interior_point, np.zeros(3))


def test_chord_ball_and_halfspace():
    lo, hi = hit_and_run_chord(ConvexBody.ball(2, 2.0), np.zeros(2), np.array([1.0, 0.0]))
    assert (lo, hi) == (-2.0, 2.0)
    lo, hi = hit_and_run_chord(half_disk(), np.array([0.5, 0.0]), np.array([1.0, 0.0]))
    assert lo == pytest.approx(-0.5) and hi == pytest.approx(0.5)


def test_chord_errors():
    with pytest.raises(ValueError):
        hit_and_run_chord(ConvexBody.ball(2), np.zeros(2), np.array([1.0, 1.0]))
    with pytest.raises(PointNotInterior):
        hit_and_run_chord(ConvexBody.ball(2, 1.0), np.array([3.0, 0]), np.array([1.0, 0.0]))


def test_cut_keeps_upper_halfspace():
    b = half_disk()
    assert b.contains(np.array([0.5, 0.0])) and not b.contains(np.array([-0.1, 0.0]))
    assert b.interior_point is not None and b.contains(b.interior_point)
    with pytest.raises(ZeroNormal):
        cut(b, np.zeros(2), np.zeros(2))


def test_cut_through_interior_point_finds_new_one():
    b = ConvexBody.ball(2, 2.0)
    c = cut(b, np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert c.contains(c.interior_point) and c.interior_point[1] > 1.0


def test_cut_excluding_everything_raises_on_sampling():
    b = cut(ConvexBody.ball(2, 1.0), np.array([1.0, 0.0]), np.array([5.0, 0.0]))
    assert b.interior_point is None
    with pytest.raises(EmptyInterior):
        estimate_centroid(b, np.random.default_rng(0))


def test_half_disk_reference_by_rejection():
    # independent check of the closed-form centroid
    rng = np.random.default_rng(0)
    P = rng.uniform(-1, 1, (400_000, 2))
    P = P[(np.linalg.norm(P, axis=1) <= 1) & (P[:, 0] >= 0)]
    assert np.allclose(P.mean(axis=0), HALF_DISK_CENTROID, atol=3e-3)


def test_half_disk_centroid_single_seed():
    est = estimate_centroid(half_disk(), np.random.default_rng(5))
    assert np.linalg.norm(est.mu_hat - HALF_DISK_CENTROID) < 0.05
    assert est.n_samples == 1024 and est.samples.shape == (1024, 2)
    assert half_disk().contains_many(est.samples).all()


def test_samples_cover_body_uniformly():
    # fraction of the unit disk with x > 0.5 is (pi/3 - sqrt(3)/4) / pi
    est = estimate_centroid(ConvexBody.ball(2, 1.0), np.random.default_rng(1), n_samples=8000)
    frac = np.mean(est.samples[:, 0] > 0.5)
    assert frac == pytest.approx((math.pi / 3 - math.sqrt(3) / 4) / math.pi, abs=0.03)


def test_centroid_of_box_cut_ball_3d():
    # a slab |w_3| <= 0.5 keeps the centroid at 0
    b = cut(ConvexBody.ball(3, 1.0), np.array([0, 0, 1.0]), np.array([0, 0, -0.5]))
    b = cut(b, np.array([0, 0, -1.0]), np.array([0, 0, 0.5]))
    est = estimate_centroid(b, np.random.default_rng(2))
    assert np.linalg.norm(est.mu_hat) < 0.05


def test_start_points_outside_ignored():
    est = estimate_centroid(half_disk(), np.random.default_rng(3), start_points=np.array([[-0.5, 0.0]]))
    assert half_disk().contains(est.interior_point)


def test_bad_sampling_args():
    with pytest.raises(ValueError):
        estimate_centroid(ConvexBody.ball(2), np.random.default_rng(0), n_samples=0)
