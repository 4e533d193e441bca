"""Haar wavelet tree over a dyadic mesh.

Nodes are the dyadic cells of the leaf mesh's tree.  The root carries one
scaling coefficient; every internal node carries 2^d - 1 detail coefficients
(constant +-values on its children), so the number of coefficients always
equals the number of leaves and the basis is orthonormal in L^2.

The 1D detail at level 0 is +1 on the right half and -1 on the left half of
its cell; 2D details are tensor products (horizontal, vertical, diagonal).
"""
from __future__ import annotations

import numpy as np

from . import bounds
from .geometry import Box
from .mesh import MAX_DEPTH, Cell, DyadicMesh, PiecewiseConstant


def haar_matrix(d: int) -> np.ndarray:
    """Orthogonal 2^d x 2^d two-scale matrix M = H / sqrt(2^d).

    Row 0 is the scaling row (all ones); row t has sign (2 c_a - 1) on each
    axis a where bit a of t is set.  Columns are child offsets, bit a of c
    selecting the upper half along axis a.
    """
    n = 2**d
    H = np.ones((n, n))
    for t in range(n):
        for c in range(n):
            s = 1.0
            for a in range(d):
                if (t >> a) & 1:
                    s *= 2 * ((c >> a) & 1) - 1
            H[t, c] = s
    return H / np.sqrt(n)


class WaveletTree:
    def __init__(self, domain: Box, max_depth: int = MAX_DEPTH):
        self.mesh = DyadicMesh(domain, max_depth=max_depth)
        self.internal: list[tuple] = []  # (level, index) keys, creation order
        self._slot_base: dict[tuple, int] = {}
        self.M = haar_matrix(domain.dim)

    @property
    def domain(self) -> Box:
        return self.mesh.domain

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def n_details(self) -> int:
        return 2**self.dim - 1

    def n_slots(self) -> int:
        return 1 + self.n_details * len(self.internal)

    def node_slots(self, key) -> slice:
        base = self._slot_base[key]
        return slice(base, base + self.n_details)

    def refine_leaves(self, positions):
        """Split leaves; each becomes an internal node with fresh detail slots.

        New slots are appended at the end; a zero coefficient there keeps the
        synthesized function unchanged (exact injection).  Returns the number
        of new slots.
        """
        positions = sorted(set(int(p) for p in positions))
        keys = [
            (int(self.mesh.levels[p]), tuple(int(c) for c in self.mesh.indices[p]))
            for p in positions
            if self.mesh.levels[p] < self.mesh.max_depth
        ]
        self.mesh.refine(positions)
        added = 0
        for key in keys:
            self._slot_base[key] = self.n_slots()
            self.internal.append(key)
            added += self.n_details
        return added

    def _children_keys(self, key):
        lvl, idx = key
        d = self.dim
        return [
            (lvl + 1, tuple(2 * idx[a] + ((c >> a) & 1) for a in range(d)))
            for c in range(2**d)
        ]

    def synthesize(self, coeffs) -> PiecewiseConstant:
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (self.n_slots(),):
            raise ValueError("coefficient count must match slot count")
        scal = {(0, (0,) * self.dim): float(coeffs[0])}
        for key in self.internal:  # creation order is topological (parents first)
            vec = np.empty(2**self.dim)
            vec[0] = scal.pop(key)
            vec[1:] = coeffs[self.node_slots(key)]
            child_vals = self.M.T @ vec
            for ck, v in zip(self._children_keys(key), child_vals):
                scal[ck] = v
        values = np.empty(self.mesh.leaf_count())
        meas = self.mesh.leaf_measures()
        for i in range(self.mesh.leaf_count()):
            key = (int(self.mesh.levels[i]), tuple(int(c) for c in self.mesh.indices[i]))
            values[i] = scal[key] / np.sqrt(meas[i])
        return PiecewiseConstant(self.mesh, values)

    def analyze(self, u: PiecewiseConstant) -> np.ndarray:
        if u.mesh is not self.mesh and u.mesh.leaf_count() != self.mesh.leaf_count():
            raise ValueError("function must live on the tree's leaf mesh")
        meas = self.mesh.leaf_measures()
        scal = {}
        for i in range(self.mesh.leaf_count()):
            key = (int(self.mesh.levels[i]), tuple(int(c) for c in self.mesh.indices[i]))
            scal[key] = u.coeffs[i] * np.sqrt(meas[i])
        coeffs = np.empty(self.n_slots())
        for key in reversed(self.internal):
            child_vals = np.array([scal.pop(ck) for ck in self._children_keys(key)])
            vec = self.M @ child_vals
            scal[key] = vec[0]
            coeffs[self.node_slots(key)] = vec[1:]
        coeffs[0] = scal[(0, (0,) * self.dim)]
        return coeffs

    def slot_cells(self):
        """Cell supporting each slot (root cell for slot 0)."""
        cells = [Cell(0, (0,) * self.dim)]
        for key in self.internal:
            cells.extend([Cell(*key)] * self.n_details)
        return cells

    def slot_columns(self, op, slots) -> np.ndarray:
        """<psi_j, w_s> for the requested slots; returns (m, len(slots)).

        Built from child-cell integrals via the two-scale relation; exact.
        """
        out = np.empty((op.m, len(slots)))
        root_box = self.domain
        for col, s in enumerate(slots):
            if s == 0:
                q = op.cell_matrix(root_box.lo[None, :], root_box.hi[None, :])[:, 0]
                out[:, col] = q / np.sqrt(root_box.volume)
                continue
            node_i = (s - 1) // self.n_details
            t = (s - 1) % self.n_details + 1
            key = self.internal[node_i]
            ckeys = self._children_keys(key)
            boxes = [Cell(*ck).box(self.domain) for ck in ckeys]
            lo = np.array([b.lo for b in boxes])
            hi = np.array([b.hi for b in boxes])
            Q = op.cell_matrix(lo, hi)  # (m, 2^d)
            cmeas = boxes[0].volume
            # w_t = sum_c M[t, c] * 1_{C_c} / sqrt(|C|)
            out[:, col] = Q @ (self.M[t] / np.sqrt(cmeas))
        return out

    def leaf_tail_bounds(self, op, phi) -> np.ndarray:
        """Per-leaf bound on ||1_T A*phi||_{L^2} >= any wavelet pairing in T."""
        sup = bounds.cell_sup_bounds(op, phi, self.mesh)
        return np.sqrt(self.mesh.leaf_measures()) * sup

    def grow(self, op, phi, mu, disc_grad, factor=10.0):
        """Refine leaves until leaf_tail_bound - mu <= factor * disc_grad.

        Coefficient vectors held by callers must be padded with zeros for the
        returned slots.  Returns (added_slot_indices, capped_flag).
        """
        if factor <= 0:
            raise ValueError("growth factor must be positive")
        added = []
        capped = False
        while True:
            tails = self.leaf_tail_bounds(op, phi)
            bad = np.nonzero(tails - mu > factor * disc_grad)[0]
            bad = [p for p in bad if self.mesh.levels[p] < self.mesh.max_depth]
            if len(bad) == 0:
                if np.any(tails - mu > factor * disc_grad):
                    capped = True
                break
            start = self.n_slots()
            n_new = self.refine_leaves(bad)
            added.extend(range(start, start + n_new))
        return added, capped
