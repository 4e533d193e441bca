"""Kernel-defined forward operators A : L^2(Omega) -> R^m.

Three kernel families are supported:

* indicator: psi_j = 1_{X_j} for slabs X_j = {x : s_lo <= <theta_j, x> < s_hi},
  grouped into blocks of pairwise-disjoint slabs (one block per Radon angle);
* cosine:    psi_j(x) = cos(<omega_j, x>);
* gaussian:  psi_j(x) = (2 pi sigma^2)^{-d/2} exp(-|x - x_j|^2 / (2 sigma^2)).

All cell integrals <psi_j, 1_T>, Gram entries <psi_i, psi_j> and the operator
norm / adjoint smoothness bounds are closed forms, so certificates built on
them are sound.  A positive `scale` multiplies every kernel; `normalized()`
picks it so the certified norm bound is exactly 1.
"""
from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from . import geometry
from .geometry import Box

_OMEGA_EPS = 1e-12


class KernelOperator:
    def __init__(self, kind: str, domain: Box, scale: float = 1.0, **params):
        if kind not in ("indicator", "cosine", "gaussian"):
            raise ValueError(f"unknown kernel kind {kind!r}")
        self.kind = kind
        self.domain = domain
        self.scale = float(scale)
        if kind == "indicator":
            self.thetas = np.asarray(params["thetas"], dtype=float).reshape(
                -1, domain.dim
            )
            self.s_lo = np.asarray(params["s_lo"], dtype=float)
            self.s_hi = np.asarray(params["s_hi"], dtype=float)
            self.m = len(self.thetas)
            blocks = params.get("blocks")
            if blocks is None:
                blocks = [list(range(self.m))]
            self.blocks = [np.asarray(b, dtype=np.int64) for b in blocks]
        elif kind == "cosine":
            self.omegas = np.asarray(params["omegas"], dtype=float).reshape(
                -1, domain.dim
            )
            self.m = len(self.omegas)
        else:
            self.centers = np.asarray(params["centers"], dtype=float).reshape(
                -1, domain.dim
            )
            self.sigma = float(params["sigma"])
            if self.sigma <= 0:
                raise ValueError("gaussian width must be positive")
            self.m = len(self.centers)
        if self.m < 1:
            raise ValueError("need at least one kernel")

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def smooth(self) -> bool:
        return self.kind != "indicator"

    def _params(self):
        if self.kind == "indicator":
            return dict(
                thetas=self.thetas,
                s_lo=self.s_lo,
                s_hi=self.s_hi,
                blocks=[b.tolist() for b in self.blocks],
            )
        if self.kind == "cosine":
            return dict(omegas=self.omegas)
        return dict(centers=self.centers, sigma=self.sigma)

    def with_scale(self, scale: float) -> "KernelOperator":
        return KernelOperator(self.kind, self.domain, scale=scale, **self._params())

    def normalized(self) -> "KernelOperator":
        """Rescale so the certified operator-norm bound equals 1."""
        raw = self.with_scale(1.0).operator_norm_bound()
        return self.with_scale(1.0 / raw if raw > 0 else 1.0)

    # ---- cell integrals -------------------------------------------------

    def cell_matrix(self, box_lo, box_hi) -> np.ndarray:
        """<psi_j, 1_T> for a batch of boxes; returns (m, L)."""
        box_lo = np.atleast_2d(np.asarray(box_lo, dtype=float))
        box_hi = np.atleast_2d(np.asarray(box_hi, dtype=float))
        if self.kind == "gaussian":
            # per-axis CDF differences, product over axes
            out = np.ones((self.m, len(box_lo)))
            for a in range(self.dim):
                c = self.centers[:, a][:, None]
                out *= ndtr((box_hi[None, :, a] - c) / self.sigma) - ndtr(
                    (box_lo[None, :, a] - c) / self.sigma
                )
            return self.scale * out
        if self.kind == "cosine":
            out = np.ones((self.m, len(box_lo)), dtype=complex)
            for a in range(self.dim):
                w = self.omegas[:, a][:, None]
                lo = box_lo[None, :, a]
                hi = box_hi[None, :, a]
                small = np.abs(w) < _OMEGA_EPS
                ws = np.where(small, 1.0, w)
                vals = (np.exp(1j * ws * hi) - np.exp(1j * ws * lo)) / (1j * ws)
                out *= np.where(small, hi - lo, vals)
            return self.scale * out.real
        if self.dim == 2:
            areas = geometry.slab_box_areas(
                self.thetas, self.s_lo, self.s_hi, box_lo, box_hi
            )
        else:
            areas = geometry.slab_interval_lengths(
                self.thetas, self.s_lo, self.s_hi, box_lo, box_hi
            )
        return self.scale * areas

    def cell_inner_products(self, cell_box: Box) -> np.ndarray:
        if not self.domain.contains_box(cell_box):
            raise ValueError("cell outside operator domain")
        return self.cell_matrix(cell_box.lo[None, :], cell_box.hi[None, :])[:, 0]

    # ---- pointwise kernels ----------------------------------------------

    def kernel_values(self, x) -> np.ndarray:
        """(psi_j(x))_j for a batch of points x of shape (n, d); returns (m, n)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.kind == "gaussian":
            d2 = np.sum((self.centers[:, None, :] - x[None, :, :]) ** 2, axis=2)
            amp = (2 * np.pi * self.sigma**2) ** (-self.dim / 2)
            return self.scale * amp * np.exp(-d2 / (2 * self.sigma**2))
        if self.kind == "cosine":
            return self.scale * np.cos(self.omegas @ x.T)
        proj = self.thetas @ x.T
        inside = (proj >= self.s_lo[:, None]) & (proj < self.s_hi[:, None])
        return self.scale * inside.astype(float)

    def adjoint_values(self, phi, x) -> np.ndarray:
        """(A* phi)(x) for a batch of points; returns (n,)."""
        return self.kernel_values(x).T @ np.asarray(phi, dtype=float)

    def adjoint_grads(self, phi, x) -> np.ndarray:
        """gradient of A* phi at each point; returns (n, d)."""
        if not self.smooth:
            raise ValueError("indicator kernels have no pointwise gradient")
        x = np.atleast_2d(np.asarray(x, dtype=float))
        phi = np.asarray(phi, dtype=float)
        if self.kind == "gaussian":
            vals = self.kernel_values(x)  # (m, n)
            diff = self.centers[:, None, :] - x[None, :, :]  # (m, n, d)
            return np.einsum("m,mn,mnd->nd", phi, vals, diff) / self.sigma**2
        s = np.sin(self.omegas @ x.T)  # (m, n)
        return -self.scale * np.einsum("m,mn,md->nd", phi, s, self.omegas)

    def adjoint_value_grad(self, phi, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        val = float(self.adjoint_values(phi, x[None, :])[0])
        grad = self.adjoint_grads(phi, x[None, :])[0]
        return val, grad

    # ---- Gram matrix ----------------------------------------------------

    def gram_matrix(self) -> np.ndarray:
        if self.kind == "gaussian":
            d2 = np.sum(
                (self.centers[:, None, :] - self.centers[None, :, :]) ** 2, axis=2
            )
            amp = (4 * np.pi * self.sigma**2) ** (-self.dim / 2)
            out = amp * np.exp(-d2 / (4 * self.sigma**2))
            # truncation to Omega: product of CDF differences around midpoints
            s = self.sigma / np.sqrt(2.0)
            for a in range(self.dim):
                mid = 0.5 * (self.centers[:, None, a] + self.centers[None, :, a])
                out *= ndtr((self.domain.hi[a] - mid) / s) - ndtr(
                    (self.domain.lo[a] - mid) / s
                )
            return self.scale**2 * out
        if self.kind == "cosine":
            # cos(a)cos(b) = (cos(a-b) + cos(a+b)) / 2
            diff = self.omegas[:, None, :] - self.omegas[None, :, :]
            summ = self.omegas[:, None, :] + self.omegas[None, :, :]
            out = 0.5 * (self._cos_integral(diff) + self._cos_integral(summ))
            return self.scale**2 * out
        G = np.zeros((self.m, self.m))
        for i in range(self.m):
            for j in range(i, self.m):
                G[i, j] = G[j, i] = self._slab_pair(i, j)
        return self.scale**2 * G

    def _cos_integral(self, omega: np.ndarray) -> np.ndarray:
        """Integral of cos(<omega, x>) over the domain box, broadcast over omega."""
        out = np.ones(omega.shape[:-1], dtype=complex)
        for a in range(self.dim):
            w = omega[..., a]
            lo, hi = self.domain.lo[a], self.domain.hi[a]
            small = np.abs(w) < _OMEGA_EPS
            ws = np.where(small, 1.0, w)
            vals = (np.exp(1j * ws * hi) - np.exp(1j * ws * lo)) / (1j * ws)
            out *= np.where(small, hi - lo, vals)
        return out.real

    def _slab_pair(self, i: int, j: int) -> float:
        if self.dim == 2:
            return geometry.slab_pair_area(
                self.domain,
                self.thetas[i], self.s_lo[i], self.s_hi[i],
                self.thetas[j], self.s_lo[j], self.s_hi[j],
            )
        # 1D: overlap of two intervals inside the domain
        def interval(k):
            th = self.thetas[k, 0]
            a, b = self.s_lo[k] / th, self.s_hi[k] / th
            lo, hi = min(a, b), max(a, b)
            return max(lo, self.domain.lo[0]), min(hi, self.domain.hi[0])

        a1, b1 = interval(i)
        a2, b2 = interval(j)
        return max(min(b1, b2) - max(a1, a2), 0.0)

    # ---- norm and smoothness bounds -------------------------------------

    def slab_areas(self) -> np.ndarray:
        lo, hi = self.domain.lo[None, :], self.domain.hi[None, :]
        if self.dim == 2:
            return geometry.slab_box_areas(self.thetas, self.s_lo, self.s_hi, lo, hi)[
                :, 0
            ]
        return geometry.slab_interval_lengths(
            self.thetas, self.s_lo, self.s_hi, lo, hi
        )[:, 0]

    def operator_norm_bound(self) -> float:
        """Certified upper bound on the L^2 -> l^2 operator norm."""
        if self.kind == "indicator":
            # per block of disjoint slabs the norm is the max member area;
            # blocks stack at worst orthogonally in l^2
            areas = self.slab_areas()
            total = sum(areas[b].max() for b in self.blocks)
            return self.scale * float(np.sqrt(total))
        if self.kind == "cosine":
            return self.scale * float(np.sqrt(self.m * self.domain.volume))
        # row-sum bound on AA* using the pointwise Gram upper bound
        d2 = np.sum(
            (self.centers[:, None, :] - self.centers[None, :, :]) ** 2, axis=2
        )
        amp = (4 * np.pi * self.sigma**2) ** (-self.dim / 2)
        row = amp * np.exp(-d2 / (4 * self.sigma**2)).sum(axis=1)
        return self.scale * float(np.sqrt(row.max()))

    def _gaussian_lattice(self):
        """Offsets and covering radius for the smoothness lattice sums.

        Returns (k_norms, delta) with k_norms the Euclidean norms of integer
        offsets |k|_inf <= 2*mhat and delta the covering radius of the center
        set over the domain, both in units of the smallest center spacing.
        """
        spacings = []
        radii = []
        for a in range(self.dim):
            coords = np.unique(self.centers[:, a])
            gaps = np.diff(coords)
            spacing = gaps.min() if len(gaps) else self.domain.widths[a]
            spacings.append(spacing)
            r = max(
                coords[0] - self.domain.lo[a],
                self.domain.hi[a] - coords[-1],
                (gaps.max() / 2) if len(gaps) else 0.0,
            )
            radii.append(max(r, 0.0))
        step = min(spacings)
        delta = float(np.linalg.norm(radii)) / step
        mhat = int(np.ceil(self.m ** (1.0 / self.dim)))
        rng = np.arange(-2 * mhat, 2 * mhat + 1)
        if self.dim == 1:
            k2 = rng.astype(float) ** 2
        else:
            k2 = (rng[:, None] ** 2 + rng[None, :] ** 2).ravel().astype(float)
        return np.sqrt(k2), delta, step

    def sup_norm_bound(self) -> float:
        """Bound on |A*|_{l^2 -> L_inf}: sup_x ||(psi_j(x))_j||_{l^2}."""
        if self.smooth:
            return self.smoothness_seminorm(0)
        # at most one strip of each block covers any given point
        return self.scale * float(np.sqrt(len(self.blocks)))

    def smoothness_seminorm(self, k: int) -> float:
        """Certified bound on |A*|_{l^2 -> C^k}, k in {0, 1, 2}."""
        if not self.smooth:
            raise ValueError("indicator kernels are not smooth")
        if k not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        if self.kind == "cosine":
            freq = float(np.linalg.norm(self.omegas, axis=1).max())
            return self.scale * float(np.sqrt(self.m) * freq**k)
        knorm, delta, step = self._gaussian_lattice()
        s2 = self.sigma**2
        near = np.maximum(knorm - delta, 0.0)
        expo = np.exp(-(step**2 / s2) * near**2)
        amp = (2 * np.pi * s2) ** (-self.dim / 2)
        if k == 0:
            return self.scale * amp * float(np.sqrt(expo.sum()))
        far = (knorm + delta) * step
        if k == 1:
            return self.scale * amp / s2 * float(np.sqrt(((far**2) * expo).sum()))
        return (
            self.scale
            * amp
            / s2
            * float(np.sqrt(((1.0 + far**2 / s2) ** 2 * expo).sum()))
        )
