"""Per-cell sup-norm bounds on adjoint fields A*phi.

Smooth kernels get the midpoint Taylor bound; indicator kernels get the
block-wise coefficient bound (within a block of disjoint strips at most one
strip covers any point).  Both routes return certified upper bounds on
||A*phi||_{L_inf(T)} for every mesh leaf at once.
"""
from __future__ import annotations

import numpy as np

from .kernels import KernelOperator
from .mesh import DyadicMesh


def taylor_cell_intervals(op: KernelOperator, phi, mesh: DyadicMesh, order: int = 1):
    """Per leaf (midpoint value of A*phi, certified radius over the cell).

    order 1 radius: (diam/2)|grad at midpoint| + (diam^2/8) c2 ||phi||;
    order 0 radius: (diam/2) c1 ||phi||, kept for the ratio rule and tests.
    """
    if not op.smooth:
        raise ValueError("Taylor bounds need smooth kernels")
    phi = np.asarray(phi, dtype=float)
    mids = mesh.leaf_midpoints()
    diam = mesh.leaf_diameters()
    vals = op.adjoint_values(phi, mids)
    pnorm = float(np.linalg.norm(phi))
    if order == 0:
        rad = 0.5 * diam * op.smoothness_seminorm(1) * pnorm
    else:
        grads = np.linalg.norm(op.adjoint_grads(phi, mids), axis=1)
        c2 = op.smoothness_seminorm(2)
        rad = 0.5 * diam * grads + 0.125 * diam**2 * c2 * pnorm
    return vals, rad


def taylor_cell_sup_bounds(
    op: KernelOperator, phi, mesh: DyadicMesh, order: int = 1
) -> np.ndarray:
    vals, rad = taylor_cell_intervals(op, phi, mesh, order=order)
    return np.abs(vals) + rad


def indicator_cell_sup_bounds(
    op: KernelOperator, phi, mesh: DyadicMesh
) -> np.ndarray:
    """Per-leaf bound sum over blocks of max |phi_j| among strips meeting T."""
    if op.kind != "indicator":
        raise ValueError("indicator bound needs indicator kernels")
    phi = np.asarray(phi, dtype=float)
    lo, hi = mesh.leaf_boxes()
    # projection range of each leaf box onto each strip direction
    base = np.zeros((op.m, mesh.leaf_count()))
    span = np.zeros_like(base)
    for a in range(mesh.dim):
        th = op.thetas[:, a][:, None]
        base += np.minimum(th * lo[None, :, a], th * hi[None, :, a])
        span += np.abs(th) * (hi[None, :, a] - lo[None, :, a])
    meets = (op.s_hi[:, None] > base) & (op.s_lo[:, None] < base + span)
    out = np.zeros(mesh.leaf_count())
    aphi = np.abs(phi)
    for b in op.blocks:
        out += np.max(np.where(meets[b], aphi[b][:, None], 0.0), axis=0)
    return op.scale * out


def cell_sup_bounds(op: KernelOperator, phi, mesh: DyadicMesh, order: int = 1):
    if op.smooth:
        return taylor_cell_sup_bounds(op, phi, mesh, order=order)
    return indicator_cell_sup_bounds(op, phi, mesh)


def continuous_norm_bound(op: KernelOperator, phi, mesh: DyadicMesh) -> float:
    """Bound on ||A*phi||_{L_inf(Omega)}: max of the per-cell bounds."""
    return float(cell_sup_bounds(op, phi, mesh).max())
