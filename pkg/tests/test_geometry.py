import numpy as np
import pytest

from adafista.geometry import (
    Box,
    clip_halfplane,
    clip_slab,
    disc_halfplane_area,
    disc_slab_area,
    polygon_area,
    slab_box_areas,
    slab_interval_lengths,
    slab_pair_area,
)


def mc_slab_box_area(theta, lo, hi, box_lo, box_hi, n=200_000, seed=0):
    rng = np.random.Generator(np.random.Philox(seed))
    pts = rng.uniform(box_lo, box_hi, size=(n, len(box_lo)))
    s = pts @ np.asarray(theta)
    vol = np.prod(np.asarray(box_hi) - np.asarray(box_lo))
    return vol * np.mean((s >= lo) & (s < hi))


def test_box_basics():
    b = Box([0.0, -1.0], [2.0, 3.0])
    assert b.dim == 2
    assert b.volume == pytest.approx(8.0)
    assert np.allclose(b.midpoint, [1.0, 1.0])
    assert b.contains((0.5, 0.0))
    assert not b.contains((2.5, 0.0))


def test_slab_box_area_against_monte_carlo():
    rng = np.random.Generator(np.random.Philox(7))
    for trial in range(20):
        ang = rng.uniform(0, np.pi)
        theta = np.array([[np.cos(ang), np.sin(ang)]])
        lo = rng.uniform(-0.8, 0.2)
        hi = lo + rng.uniform(0.05, 0.6)
        box_lo = rng.uniform(-0.5, 0.0, size=2)
        box_hi = box_lo + rng.uniform(0.2, 1.0, size=2)
        got = slab_box_areas(
            theta, [lo], [hi], box_lo[None, :], box_hi[None, :]
        )[0, 0]
        want = mc_slab_box_area(theta[0], lo, hi, box_lo, box_hi, seed=trial)
        assert got == pytest.approx(want, abs=5e-3)


def test_slab_box_area_axis_aligned_exact():
    # theta = e_1: the slab is a vertical strip, area is width * height
    got = slab_box_areas(
        np.array([[1.0, 0.0]]), [0.25], [0.75],
        np.array([[0.0, 0.0]]), np.array([[1.0, 2.0]]),
    )[0, 0]
    assert got == pytest.approx(0.5 * 2.0, abs=1e-12)


def test_slab_interval_lengths():
    lo = np.array([[0.0], [0.5], [2.0]])
    hi = np.array([[1.0], [1.5], [3.0]])
    got = slab_interval_lengths(
        np.array([[1.0]]), [0.25], [1.25], lo, hi
    )
    assert got.shape == (1, 3)
    assert np.allclose(got[0], [0.75, 0.75, 0.0])


def test_clip_and_area():
    square = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    assert polygon_area(square) == pytest.approx(1.0)
    half = clip_halfplane(square, (1.0, 0.0), 0.5)
    assert polygon_area(half) == pytest.approx(0.5)
    strip = clip_slab(square, (0.0, 1.0), 0.25, 0.75)
    assert polygon_area(strip) == pytest.approx(0.5)


def test_slab_pair_area_against_monte_carlo():
    rng = np.random.Generator(np.random.Philox(3))
    box = Box([-0.5, -0.5], [0.5, 0.5])
    for trial in range(10):
        a1, a2 = rng.uniform(0, np.pi, size=2)
        t1 = (np.cos(a1), np.sin(a1))
        t2 = (np.cos(a2), np.sin(a2))
        lo1, lo2 = rng.uniform(-0.4, 0.1, size=2)
        w1, w2 = rng.uniform(0.1, 0.5, size=2)
        got = slab_pair_area(box, t1, lo1, lo1 + w1, t2, lo2, lo2 + w2)
        pts = rng.uniform(box.lo, box.hi, size=(200_000, 2))
        s1 = pts @ np.asarray(t1)
        s2 = pts @ np.asarray(t2)
        want = np.mean(
            (s1 >= lo1) & (s1 < lo1 + w1) & (s2 >= lo2) & (s2 < lo2 + w2)
        )
        assert got == pytest.approx(want, abs=5e-3)


def test_disc_halfplane_area_limits():
    assert disc_halfplane_area(1.0, 2.0) == pytest.approx(np.pi)
    assert disc_halfplane_area(1.0, -2.0) == pytest.approx(0.0)
    assert disc_halfplane_area(1.0, 0.0) == pytest.approx(np.pi / 2)


def test_disc_slab_area_against_monte_carlo():
    rng = np.random.Generator(np.random.Philox(11))
    for trial in range(10):
        c = rng.uniform(-0.2, 0.2, size=2)
        r = rng.uniform(0.05, 0.3)
        ang = rng.uniform(0, np.pi)
        theta = (np.cos(ang), np.sin(ang))
        lo = rng.uniform(-0.4, 0.1)
        hi = lo + rng.uniform(0.05, 0.5)
        got = disc_slab_area(c, r, theta, lo, hi)
        pts = c + rng.uniform(-r, r, size=(400_000, 2))
        inside = np.sum((pts - c) ** 2, axis=1) <= r * r
        s = pts @ np.asarray(theta)
        want = (2 * r) ** 2 * np.mean(inside & (s >= lo) & (s < hi))
        assert got == pytest.approx(want, abs=4e-3)
