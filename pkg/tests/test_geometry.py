import math

import numpy as np
import pytest

from safip.geometry import BoxDomain, RngStream, distance, sample_ball, sample_box

from oracles import binomial_band


def test_box_rejects_bad_bounds():
    with pytest.raises(ValueError):
        BoxDomain([0.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        BoxDomain([0.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        BoxDomain([], [])
    with pytest.raises(ValueError):
        BoxDomain([0.0], [np.inf])


def test_box_properties():
    box = BoxDomain.cube(-1, 1, 2)
    assert box.dim == 2
    assert box.diameter == pytest.approx(2 * math.sqrt(2))
    assert box.contains([1.0, -1.0])
    assert not box.contains([1.0 + 1e-12, 0.0])
    assert box == BoxDomain([-1, -1], [1, 1])
    assert hash(box) == hash(BoxDomain([-1, -1], [1, 1]))
    with pytest.raises(ValueError):
        box.lower[0] = 5.0


def test_same_stream_repeats_and_different_streams_differ():
    a = RngStream(42, 3).random(10_000)
    b = RngStream(42, 3).random(10_000)
    c = RngStream(42, 4).random(10_000)
    d = RngStream(43, 3).random(10_000)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    with pytest.raises(ValueError):
        RngStream(-1)


def test_sample_box_containment_and_quadrant_fraction():
    box = BoxDomain.cube(-1, 1, 2)
    rng = RngStream(0, 0)
    draws = np.array([sample_box(box, rng) for _ in range(100_000)])
    assert np.all(draws >= -1) and np.all(draws <= 1)
    lo, hi = binomial_band(100_000, 0.25)
    inside = np.sum((draws[:, 0] <= 0) & (draws[:, 1] <= 0))
    assert lo <= inside <= hi


def test_sample_box_tiny_interval():
    box = BoxDomain([0.0], [1e-300])
    rng = RngStream(5)
    for _ in range(1000):
        p = sample_box(box, rng)
        assert 0.0 <= p[0] <= 1e-300


def test_sample_ball_zero_radius_and_negative_radius():
    center = np.array([0.3, -0.2, 4.0])
    assert np.array_equal(sample_ball(center, 0.0, RngStream(1)), center)
    with pytest.raises(ValueError):
        sample_ball(center, -0.1, RngStream(1))
    with pytest.raises(ValueError):
        sample_ball(center, math.nan, RngStream(1))


@pytest.mark.parametrize("dim", [1, 2, 3, 10])
def test_sample_ball_radial_law(dim):
    rng = RngStream(7, dim)
    center = np.linspace(-1, 1, dim)
    radius = 2.5
    draws = 100_000
    r = np.array([distance(sample_ball(center, radius, rng), center) for _ in range(draws)])
    assert np.all(r <= radius + 1e-12)
    for t in (0.25, 0.5, 0.75):
        lo, hi = binomial_band(draws, t**dim)
        assert lo <= np.sum(r <= radius * t) <= hi, (dim, t)


def test_sample_ball_direction_is_isotropic():
    rng = RngStream(3)
    pts = np.array([sample_ball(np.zeros(3), 1.0, rng) for _ in range(20_000)])
    # each coordinate has mean 0 and variance 1/5 for the unit 3-ball
    se = math.sqrt(0.2 / len(pts))
    assert np.all(np.abs(pts.mean(axis=0)) < 4 * se)
    # sign patterns across octants are equally likely
    octant = (pts > 0).astype(int) @ np.array([1, 2, 4])
    counts = np.bincount(octant, minlength=8)
    lo, hi = binomial_band(len(pts), 1 / 8, sigmas=4)
    assert np.all((counts >= lo) & (counts <= hi))


def test_distance():
    assert distance([0, 0], [3, 4]) == 5.0
    assert distance([1.5, 2], [1.5, 2]) == 0.0
    with pytest.raises(ValueError):
        distance([0, 0], [0, 0, 0])
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a, b, c = rng.normal(size=(3, 4))
        assert distance(a, b) == distance(b, a)
        assert distance(a, c) <= distance(a, b) + distance(b, c) + 1e-12
        assert distance(a, b) == pytest.approx(math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b))), rel=1e-14)
