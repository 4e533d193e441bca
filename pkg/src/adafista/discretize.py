"""Bridges between the kernel operator and a finite coefficient vector.

Two geometries share one solver interface:

* MeshDiscretization: coefficients are densities on the leaves of a dyadic
  mesh, inner products weighted by cell measure;
* WaveletDiscretization: coefficients are Haar coefficients (orthonormal),
  plain Euclidean geometry.

Both keep the matrix of kernel/basis inner products up to date across
refinements by appending columns, never recomputing existing ones.
"""
from __future__ import annotations

import numpy as np

from .kernels import KernelOperator
from .mesh import DyadicMesh, PiecewiseConstant, MAX_DEPTH
from .wavelets import WaveletTree


class MeshDiscretization:
    mode = "mesh"

    def __init__(self, op: KernelOperator, max_depth: int = MAX_DEPTH):
        self.op = op
        self.mesh = DyadicMesh(op.domain, max_depth=max_depth)
        lo, hi = self.mesh.leaf_boxes()
        self.Q = op.cell_matrix(lo, hi)

    @property
    def n(self) -> int:
        return self.mesh.leaf_count()

    @property
    def weights(self) -> np.ndarray:
        return self.mesh.leaf_measures()

    def zero(self) -> np.ndarray:
        return np.zeros(self.n)

    def forward(self, c: np.ndarray) -> np.ndarray:
        return self.Q @ c

    def adjoint_project(self, phi: np.ndarray) -> np.ndarray:
        """Per-cell value of the L^2 projection of A*phi onto the mesh."""
        return (self.Q.T @ phi) / self.weights

    def penalty(self, c: np.ndarray) -> float:
        return float(np.sum(np.abs(c) * self.weights))

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.sum(u * v * self.weights))

    def norm(self, u: np.ndarray) -> float:
        return float(np.sqrt(max(self.inner(u, u), 0.0)))

    def as_function(self, c: np.ndarray) -> PiecewiseConstant:
        return PiecewiseConstant(self.mesh, np.asarray(c, dtype=float))

    def refine(self, positions, vectors):
        """Split leaves; returns the carried vectors on the new leaf order."""
        wrapped = [PiecewiseConstant(self.mesh, np.asarray(v, float)) for v in vectors]
        kept, n_new = self.mesh.refine(positions, carried=wrapped)
        lo, hi = self.mesh.leaf_boxes()
        if n_new:
            self.Q = np.concatenate(
                [self.Q[:, kept], self.op.cell_matrix(lo[-n_new:], hi[-n_new:])],
                axis=1,
            )
        else:
            self.Q = self.Q[:, kept]
        return [w.coeffs for w in wrapped]

    def coarsen_zero(self, certified_positions, vectors):
        wrapped = [PiecewiseConstant(self.mesh, np.asarray(v, float)) for v in vectors]
        self.mesh.coarsen_zero(certified_positions, carried=wrapped)
        lo, hi = self.mesh.leaf_boxes()
        # leaf order changed arbitrarily; rebuild the cell matrix
        self.Q = self.op.cell_matrix(lo, hi)
        return [w.coeffs for w in wrapped]


class WaveletDiscretization:
    mode = "wavelet"

    def __init__(self, op: KernelOperator, max_depth: int = MAX_DEPTH):
        self.op = op
        self.tree = WaveletTree(op.domain, max_depth=max_depth)
        self.C = self.tree.slot_columns(op, [0])

    @property
    def mesh(self) -> DyadicMesh:
        return self.tree.mesh

    @property
    def n(self) -> int:
        return self.tree.n_slots()

    @property
    def weights(self) -> np.ndarray:
        return np.ones(self.n)

    def zero(self) -> np.ndarray:
        return np.zeros(self.n)

    def forward(self, c: np.ndarray) -> np.ndarray:
        return self.C @ c

    def adjoint_project(self, phi: np.ndarray) -> np.ndarray:
        return self.C.T @ phi

    def penalty(self, c: np.ndarray) -> float:
        return float(np.sum(np.abs(c)))

    def inner(self, u: np.ndarray, v: np.ndarray) -> float:
        return float(np.dot(u, v))

    def norm(self, u: np.ndarray) -> float:
        return float(np.linalg.norm(u))

    def as_function(self, c: np.ndarray) -> PiecewiseConstant:
        return self.tree.synthesize(c)

    def grow(self, phi, mu, disc_grad, vectors, factor: float = 10.0):
        """Expand the active set per the tail-bound rule; pad carried vectors."""
        added, capped = self.tree.grow(self.op, phi, mu, disc_grad, factor=factor)
        if added:
            self.C = np.concatenate(
                [self.C, self.tree.slot_columns(self.op, added)], axis=1
            )
            vectors = [
                np.concatenate([np.asarray(v, float), np.zeros(len(added))])
                for v in vectors
            ]
        return vectors, len(added), capped
