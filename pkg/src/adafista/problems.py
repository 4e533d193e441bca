"""Synthetic problem presets at desk scale.

Each preset builds a kernel operator, normalizes it so the certified norm
bound is exactly 1, and synthesizes measurement data directly from the
ground truth (point masses pair with the continuous kernels; the tomography
phantom uses exact disc/strip intersection areas).  Randomness comes from
numpy's Philox counter-based generator, so fixed seeds reproduce bit-exact
data across platforms.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .geometry import Box
from .fista import Energy
from .kernels import KernelOperator

RADON_DEFAULT_MU = 1e-4


@dataclass
class ProblemSpec:
    name: str
    op_raw: KernelOperator
    fidelity: str
    mu: float
    eps: float = 1e-4
    spikes: list = field(default_factory=list)  # (location, mass)
    discs: list = field(default_factory=list)  # (center, radius, value)
    noise: tuple | None = None  # (kind, level), kind in {gaussian, laplace}
    seed: int = 0
    mode: str = "mesh"  # "mesh" | "wavelet"

    def rng(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(self.seed))


def fourier_1d(seed: int = 0, spikes=None) -> ProblemSpec:
    rng = np.random.Generator(np.random.Philox(seed))
    omegas = rng.uniform(-100.0, 100.0, size=(30, 1))
    op = KernelOperator("cosine", Box([0.0], [1.0]), omegas=omegas)
    if spikes is None:
        spikes = [((0.3,), 0.7), ((0.5,), -0.5), ((0.8,), 1.0)]
    return ProblemSpec(
        name="fourier_1d", op_raw=op, fidelity="quadratic", mu=0.02,
        spikes=spikes, seed=seed,
    )


def gaussian_1d(seed: int = 0, spikes=None) -> ProblemSpec:
    delta = 1.0 / 29.0
    centers = (np.arange(30)[:, None]) * delta
    op = KernelOperator("gaussian", Box([0.0], [1.0]), centers=centers, sigma=0.12)
    if spikes is None:
        spikes = [((1.0 / 3.0,), 1.0), ((0.7,), 1.3)]
    return ProblemSpec(
        name="gaussian_1d", op_raw=op, fidelity="quadratic", mu=0.06,
        spikes=spikes, seed=seed,
    )


def radon_2d(
    n_angles: int = 10, n_bins: int = 20, mu: float = RADON_DEFAULT_MU, seed: int = 0
) -> ProblemSpec:
    """Strip-integral tomography on the centered unit square, wavelet mode."""
    domain = Box([-0.5, -0.5], [0.5, 0.5])
    half = np.sqrt(2.0) / 2.0
    edges = np.linspace(-half, half, n_bins + 1)
    thetas, s_lo, s_hi, blocks = [], [], [], []
    for i in range(1, n_angles + 1):
        ang = np.pi * i / (n_angles + 1)
        th = (np.cos(ang), np.sin(ang))
        start = len(thetas)
        for k in range(n_bins):
            thetas.append(th)
            s_lo.append(edges[k])
            s_hi.append(edges[k + 1])
        blocks.append(list(range(start, start + n_bins)))
    op = KernelOperator(
        "indicator", domain, thetas=thetas, s_lo=s_lo, s_hi=s_hi, blocks=blocks
    )
    discs = [
        ((-0.15, -0.10), 0.18, 1.0),
        ((0.17, 0.15), 0.12, 0.8),
    ]
    return ProblemSpec(
        name="radon_2d", op_raw=op, fidelity="robust", mu=mu, eps=1e-4,
        discs=discs, noise=("laplace", 0.02), seed=seed, mode="wavelet",
    )


def gaussian_2d_smlm(seed: int = 0, n_spikes: int = 8) -> ProblemSpec:
    delta = 0.1
    side = 64
    ax = (np.arange(side) + 0.5) * delta
    gx, gy = np.meshgrid(ax, ax, indexing="ij")
    centers = np.stack([gx.ravel(), gy.ravel()], axis=1)
    op = KernelOperator(
        "gaussian", Box([0.0, 0.0], [6.4, 6.4]), centers=centers, sigma=0.2
    )
    rng = np.random.Generator(np.random.Philox(seed))
    locs = rng.uniform(0.8, 5.6, size=(n_spikes, 2))
    masses = rng.uniform(0.5, 1.5, size=n_spikes)
    spikes = [(tuple(l), float(m)) for l, m in zip(locs, masses)]
    return ProblemSpec(
        name="gaussian_2d_smlm", op_raw=op, fidelity="quadratic", mu=0.15,
        spikes=spikes, seed=seed,
    )


PRESETS = {
    "fourier_1d": fourier_1d,
    "gaussian_1d": gaussian_1d,
    "radon_2d": radon_2d,
    "gaussian_2d_smlm": gaussian_2d_smlm,
}


def synthesize_data(spec: ProblemSpec, op: KernelOperator) -> np.ndarray:
    """Measurements of the ground truth under the (normalized) operator."""
    b = np.zeros(op.m)
    if spec.spikes:
        locs = np.array([s[0] for s in spec.spikes], dtype=float).reshape(
            -1, op.dim
        )
        masses = np.array([s[1] for s in spec.spikes], dtype=float)
        b += op.kernel_values(locs) @ masses
    for center, radius, value in spec.discs:
        areas = np.array(
            [
                geometry.disc_slab_area(
                    center, radius, op.thetas[j], op.s_lo[j], op.s_hi[j]
                )
                for j in range(op.m)
            ]
        )
        b += value * op.scale * areas
    if spec.noise is not None:
        kind, level = spec.noise
        scale = level * float(np.max(np.abs(b), initial=0.0))
        rng = spec.rng()
        if kind == "laplace":
            b += rng.laplace(0.0, scale, size=op.m)
        elif kind == "gaussian":
            b += rng.normal(0.0, scale, size=op.m)
        else:
            raise ValueError(f"unknown noise kind {kind!r}")
    return b


def build(spec: ProblemSpec):
    """Normalize the operator, synthesize data, assemble the energy.

    Returns (op, energy, norm_scale) with op already normalized to bound 1.
    """
    raw_bound = spec.op_raw.with_scale(1.0).operator_norm_bound()
    op = spec.op_raw.normalized()
    b = synthesize_data(spec, op)
    energy = Energy(fidelity=spec.fidelity, b=b, mu=spec.mu, eps=spec.eps)
    return op, energy, raw_bound
