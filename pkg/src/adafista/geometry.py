"""Axis-aligned boxes and exact slab/box/disc intersection areas.

All areas here are exact up to floating point; they back the analytic
cell integrals of the indicator (strip) operators, so no quadrature is
ever involved.
"""
from __future__ import annotations

import numpy as np

_EPS = 1e-14


class Box:
    """Axis-aligned box [lo, hi] in R^d, d in {1, 2}."""

    def __init__(self, lo, hi):
        self.lo = np.atleast_1d(np.asarray(lo, dtype=float))
        self.hi = np.atleast_1d(np.asarray(hi, dtype=float))
        if self.lo.shape != self.hi.shape or np.any(self.hi <= self.lo):
            raise ValueError("box needs lo < hi componentwise")

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lo - tol) and np.all(x <= self.hi + tol))

    def contains_box(self, other: "Box", tol: float = 1e-12) -> bool:
        return bool(
            np.all(other.lo >= self.lo - tol) and np.all(other.hi <= self.hi + tol)
        )

    def corners(self) -> np.ndarray:
        if self.dim == 1:
            return np.array([[self.lo[0]], [self.hi[0]]])
        (a1, a2), (b1, b2) = self.lo, self.hi
        return np.array([[a1, a2], [b1, a2], [b1, b2], [a1, b2]])

    def __eq__(self, other):
        return (
            isinstance(other, Box)
            and np.array_equal(self.lo, other.lo)
            and np.array_equal(self.hi, other.hi)
        )

    def __repr__(self):
        return f"Box({self.lo.tolist()}, {self.hi.tolist()})"


def _hinge_sq(t: np.ndarray) -> np.ndarray:
    return np.square(np.maximum(t, 0.0))


def slab_box_areas(theta, s_lo, s_hi, box_lo, box_hi) -> np.ndarray:
    """Areas of {x : s_lo <= <theta, x> < s_hi} intersected with boxes.

    theta: (m, 2) unit directions; s_lo, s_hi: (m,); box_lo, box_hi: (L, 2).
    Returns an (m, L) array.  Uses the closed form for the distribution of a
    linear functional over a rectangle (piecewise-quadratic hinge identity),
    equivalent to half-plane clipping of the box polygon.
    """
    theta = np.asarray(theta, dtype=float)
    s_lo = np.asarray(s_lo, dtype=float)[:, None]
    s_hi = np.asarray(s_hi, dtype=float)[:, None]
    box_lo = np.asarray(box_lo, dtype=float)
    box_hi = np.asarray(box_hi, dtype=float)

    c = theta[:, 0][:, None]
    s = theta[:, 1][:, None]
    w1 = (box_hi[:, 0] - box_lo[:, 0])[None, :]
    w2 = (box_hi[:, 1] - box_lo[:, 1])[None, :]

    ac, as_ = np.abs(c), np.abs(s)
    p = ac * w1
    q = as_ * w2
    base = np.minimum(c * box_lo[None, :, 0], c * box_hi[None, :, 0]) + np.minimum(
        s * box_lo[None, :, 1], s * box_hi[None, :, 1]
    )
    top = base + p + q
    t1 = np.clip(s_lo, base, top) - base
    t2 = np.clip(s_hi, base, top) - base

    def G(t):
        return 0.5 * (
            _hinge_sq(t) - _hinge_sq(t - p) - _hinge_sq(t - q) + _hinge_sq(t - p - q)
        )

    denom = np.where((ac > _EPS) & (as_ > _EPS), ac * as_, 1.0)
    area = (G(t2) - G(t1)) / denom

    # Degenerate: slab aligned with an axis -> 1D overlap times the other width.
    deg_c = ac <= _EPS
    if np.any(deg_c):
        ov = np.maximum(t2 - t1, 0.0) / np.where(as_ > _EPS, as_, 1.0)
        area = np.where(deg_c, w1 * ov, area)
    deg_s = as_ <= _EPS
    if np.any(deg_s):
        ov = np.maximum(t2 - t1, 0.0) / np.where(ac > _EPS, ac, 1.0)
        area = np.where(deg_s, w2 * ov, area)
    return area


def slab_interval_lengths(theta, s_lo, s_hi, box_lo, box_hi) -> np.ndarray:
    """1D analogue of :func:`slab_box_areas`; theta is (m, 1) with entries +-1."""
    th = np.asarray(theta, dtype=float)[:, 0][:, None]
    lo = np.asarray(box_lo, dtype=float)[:, 0][None, :]
    hi = np.asarray(box_hi, dtype=float)[:, 0][None, :]
    a = np.minimum(th * lo, th * hi)
    b = np.maximum(th * lo, th * hi)
    s_lo = np.asarray(s_lo, dtype=float)[:, None]
    s_hi = np.asarray(s_hi, dtype=float)[:, None]
    return np.maximum(np.minimum(b, s_hi) - np.maximum(a, s_lo), 0.0)


def clip_halfplane(poly: np.ndarray, normal, offset: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by {x : <normal, x> <= offset}."""
    if len(poly) == 0:
        return poly
    d = poly @ np.asarray(normal, dtype=float) - offset
    out = []
    n = len(poly)
    for i in range(n):
        j = (i + 1) % n
        di, dj = d[i], d[j]
        if di <= _EPS:
            out.append(poly[i])
        if (di < -_EPS and dj > _EPS) or (di > _EPS and dj < -_EPS):
            t = di / (di - dj)
            out.append(poly[i] + t * (poly[j] - poly[i]))
    return np.array(out) if out else np.empty((0, 2))


def polygon_area(poly: np.ndarray) -> float:
    if len(poly) < 3:
        return 0.0
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def clip_slab(poly: np.ndarray, theta, s_lo: float, s_hi: float) -> np.ndarray:
    poly = clip_halfplane(poly, theta, s_hi)
    return clip_halfplane(poly, -np.asarray(theta, dtype=float), -s_lo)


def slab_pair_area(box: Box, theta_i, lo_i, hi_i, theta_j, lo_j, hi_j) -> float:
    """Area of (slab_i intersect slab_j intersect box) by polygon clipping."""
    poly = box.corners()
    poly = clip_slab(poly, theta_i, lo_i, hi_i)
    poly = clip_slab(poly, theta_j, lo_j, hi_j)
    return polygon_area(poly)


def disc_halfplane_area(radius: float, h: float) -> float:
    """Area of {x in disc(0, r) : <theta, x> <= t} with h = t (signed distance)."""
    h = float(np.clip(h, -radius, radius))
    return radius * radius * np.arccos(-h / radius) + h * np.sqrt(
        max(radius * radius - h * h, 0.0)
    )


def disc_slab_area(center, radius, theta, s_lo, s_hi) -> float:
    """Exact area of a disc intersected with the slab s_lo <= <theta, x> < s_hi."""
    proj = float(np.dot(np.asarray(theta, dtype=float), np.asarray(center, float)))
    return disc_halfplane_area(radius, s_hi - proj) - disc_halfplane_area(
        radius, s_lo - proj
    )
