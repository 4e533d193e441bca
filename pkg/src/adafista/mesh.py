"""Adaptive dyadic 2^d-tree meshes and piecewise-constant functions on them.

Cells are half-open boxes [lo, hi) except on the upper faces of the domain,
so every point of the domain belongs to exactly one leaf.  Coefficients are
densities (function values), not masses, which keeps the soft-threshold of
the L1 prox independent of cell size.
"""
from __future__ import annotations

import json

import numpy as np

from .geometry import Box

MAX_DEPTH = 40


class Cell:
    """Dyadic cell identified by (level, index) inside a domain box."""

    __slots__ = ("level", "index")

    def __init__(self, level: int, index):
        self.level = int(level)
        self.index = tuple(int(i) for i in np.atleast_1d(index))
        if any(i < 0 or i >= 2**self.level for i in self.index):
            raise ValueError("cell index out of range for level")

    @property
    def dim(self) -> int:
        return len(self.index)

    def key(self):
        return (self.level, self.index)

    def children(self):
        d = self.dim
        out = []
        for off in range(2**d):
            idx = tuple(
                2 * self.index[a] + ((off >> a) & 1) for a in range(d)
            )
            out.append(Cell(self.level + 1, idx))
        return out

    def parent(self) -> "Cell":
        if self.level == 0:
            raise ValueError("root has no parent")
        return Cell(self.level - 1, tuple(i // 2 for i in self.index))

    def box(self, domain: Box) -> Box:
        w = domain.widths / 2**self.level
        lo = domain.lo + np.array(self.index) * w
        return Box(lo, lo + w)

    def measure(self, domain: Box) -> float:
        return domain.volume / 2 ** (self.level * self.dim)

    def midpoint(self, domain: Box) -> np.ndarray:
        w = domain.widths / 2**self.level
        return domain.lo + (np.array(self.index) + 0.5) * w

    def diameter(self, domain: Box) -> float:
        return float(np.linalg.norm(domain.widths)) / 2**self.level

    def __eq__(self, other):
        return isinstance(other, Cell) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Cell(level={self.level}, index={self.index})"


class DyadicMesh:
    """Leaf partition of a domain box by an adaptive 2^d tree.

    Leaves are stored in parallel arrays (levels, indices) plus a dict from
    cell key to position; refine appends children at the end and reports the
    surviving positions so callers can update per-leaf caches incrementally.
    """

    def __init__(self, domain: Box, max_depth: int = MAX_DEPTH):
        self.domain = domain
        self.max_depth = max_depth
        self.levels = np.zeros(1, dtype=np.int64)
        self.indices = np.zeros((1, domain.dim), dtype=np.int64)
        self._pos = {(0, (0,) * domain.dim): 0}
        self.epoch = 0
        self.depth_capped = False

    @property
    def dim(self) -> int:
        return self.domain.dim

    def leaf_count(self) -> int:
        return len(self.levels)

    def leaf_cells(self):
        return [
            Cell(self.levels[i], self.indices[i]) for i in range(len(self.levels))
        ]

    def leaf_measures(self) -> np.ndarray:
        return self.domain.volume / 2.0 ** (self.levels * self.dim)

    def leaf_widths(self) -> np.ndarray:
        # width along axis 0; cells are similar to the domain so all axes scale
        return self.domain.widths[0] / 2.0**self.levels

    def leaf_boxes(self):
        w = self.domain.widths[None, :] / 2.0 ** self.levels[:, None]
        lo = self.domain.lo[None, :] + self.indices * w
        return lo, lo + w

    def leaf_midpoints(self) -> np.ndarray:
        lo, hi = self.leaf_boxes()
        return 0.5 * (lo + hi)

    def leaf_diameters(self) -> np.ndarray:
        return float(np.linalg.norm(self.domain.widths)) / 2.0**self.levels

    def min_cell_width(self) -> float:
        return float(self.domain.widths[0] / 2.0 ** self.levels.max())

    def position(self, cell: Cell) -> int:
        return self._pos[cell.key()]

    def is_leaf(self, cell: Cell) -> bool:
        return cell.key() in self._pos

    def locate(self, x) -> Cell:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not self.domain.contains(x):
            raise ValueError(f"point {x} outside domain {self.domain}")
        cell = Cell(0, (0,) * self.dim)
        while cell.key() not in self._pos:
            # walk down: pick the child whose half-open box holds x
            mid = cell.midpoint(self.domain)
            bits = tuple(int(x[a] >= mid[a]) for a in range(self.dim))
            nxt = Cell(cell.level + 1, tuple(2 * cell.index[a] + bits[a] for a in range(self.dim)))
            # clamp onto the domain's upper faces
            if nxt.level > self.levels.max() + 1:
                raise RuntimeError("locate descended past mesh depth")
            cell = nxt
        return cell

    def refine(self, positions, carried=None):
        """Split the leaves at the given positions into their 2^d children.

        Returns (kept, n_new): `kept` are the old positions that survive, in
        their new order (children of all split cells are appended after them
        in split order).  Each carried PiecewiseConstant gets its coefficient
        arrays rebuilt with parent values copied to children (exact injection).
        """
        positions = sorted(set(int(p) for p in positions))
        if not positions:
            return list(range(self.leaf_count())), 0
        for p in positions:
            if p < 0 or p >= self.leaf_count():
                raise ValueError(f"position {p} is not a current leaf")
        split = [p for p in positions if self.levels[p] < self.max_depth]
        if len(split) < len(positions):
            self.depth_capped = True
        if not split:
            self.epoch += 1
            return list(range(self.leaf_count())), 0

        split_set = set(split)
        kept = [p for p in range(self.leaf_count()) if p not in split_set]
        d = self.dim
        new_levels = [self.levels[kept]]
        new_indices = [self.indices[kept]]
        child_src = []
        for p in split:
            lvl = self.levels[p]
            base = 2 * self.indices[p]
            offs = np.array(
                [[(o >> a) & 1 for a in range(d)] for o in range(2**d)],
                dtype=np.int64,
            )
            new_levels.append(np.full(2**d, lvl + 1, dtype=np.int64))
            new_indices.append(base[None, :] + offs)
            child_src.extend([p] * 2**d)
        self.levels = np.concatenate(new_levels)
        self.indices = np.concatenate(new_indices, axis=0)
        self._rebuild_pos()
        self.epoch += 1

        if carried:
            src = np.array(kept + child_src, dtype=np.int64)
            for u in carried:
                u.coeffs = u.coeffs[src]
        return kept, len(child_src)

    def coarsen_zero(self, certified_positions, carried=None):
        """Merge sibling groups that are all certified (and zero on carried).

        Applied recursively until stable.  Returns the number of removed
        leaves.
        """
        carried = carried or []
        removed = 0
        certified = set(int(p) for p in certified_positions)
        for u in carried:
            bad = [p for p in certified if abs(u.coeffs[p]) != 0.0]
            if bad:
                raise ValueError("coarsen_zero requires exact zeros on certified leaves")
        cert_keys = {(int(self.levels[p]), tuple(self.indices[p])) for p in certified}
        while True:
            groups = {}
            for i in range(self.leaf_count()):
                key = (int(self.levels[i]), tuple(int(c) for c in self.indices[i]))
                if key not in cert_keys or key[0] == 0:
                    continue
                pkey = (key[0] - 1, tuple(c // 2 for c in key[1]))
                groups.setdefault(pkey, []).append(i)
            merge = {k: v for k, v in groups.items() if len(v) == 2**self.dim}
            if not merge:
                break
            drop = set()
            for v in merge.values():
                drop.update(v)
                # children leave the certified set; parents enter it
            keep = [i for i in range(self.leaf_count()) if i not in drop]
            for v in merge.values():
                for i in v:
                    cert_keys.discard(
                        (int(self.levels[i]), tuple(int(c) for c in self.indices[i]))
                    )
            new_levels = list(self.levels[keep])
            new_indices = list(self.indices[keep])
            for pkey in merge:
                new_levels.append(pkey[0])
                new_indices.append(np.array(pkey[1], dtype=np.int64))
                cert_keys.add(pkey)
            src = np.array(keep, dtype=np.int64)
            for u in carried:
                u.coeffs = np.concatenate([u.coeffs[src], np.zeros(len(merge))])
            self.levels = np.array(new_levels, dtype=np.int64)
            self.indices = np.array(new_indices, dtype=np.int64).reshape(-1, self.dim)
            removed += sum(len(v) - 1 for v in merge.values())
        self._rebuild_pos()
        return removed

    def _rebuild_pos(self):
        self._pos = {
            (int(self.levels[i]), tuple(self.indices[i])): i
            for i in range(len(self.levels))
        }

    def total_measure(self) -> float:
        return float(self.leaf_measures().sum())

    def to_records(self, coeffs=None):
        recs = []
        for i in range(self.leaf_count()):
            r = {"level": int(self.levels[i]), "index": [int(c) for c in self.indices[i]]}
            if coeffs is not None:
                r["coeff"] = float(coeffs[i])
            recs.append(r)
        return recs

    @classmethod
    def from_records(cls, domain: Box, records, max_depth: int = MAX_DEPTH):
        mesh = cls(domain, max_depth=max_depth)
        mesh.levels = np.array([r["level"] for r in records], dtype=np.int64)
        mesh.indices = np.array([r["index"] for r in records], dtype=np.int64).reshape(
            -1, domain.dim
        )
        mesh._rebuild_pos()
        if abs(mesh.total_measure() - domain.volume) > 1e-9 * domain.volume:
            raise ValueError("records do not partition the domain")
        return mesh


class PiecewiseConstant:
    """Function constant on each mesh leaf; coeffs are densities."""

    def __init__(self, mesh: DyadicMesh, coeffs=None):
        self.mesh = mesh
        if coeffs is None:
            coeffs = np.zeros(mesh.leaf_count())
        self.coeffs = np.asarray(coeffs, dtype=float)
        if self.coeffs.shape != (mesh.leaf_count(),):
            raise ValueError("coefficient count must match leaf count")

    def copy(self) -> "PiecewiseConstant":
        return PiecewiseConstant(self.mesh, self.coeffs.copy())

    def norm_l2(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs**2 * self.mesh.leaf_measures())))

    def norm_m(self) -> float:
        """Total-variation (L1) norm of the associated measure."""
        return float(np.sum(np.abs(self.coeffs) * self.mesh.leaf_measures()))

    def __call__(self, x) -> float:
        return float(self.coeffs[self.mesh.position(self.mesh.locate(x))])

    def to_json(self) -> str:
        return json.dumps(
            {
                "domain": {
                    "lo": self.mesh.domain.lo.tolist(),
                    "hi": self.mesh.domain.hi.tolist(),
                },
                "leaves": self.mesh.to_records(self.coeffs),
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "PiecewiseConstant":
        doc = json.loads(text)
        domain = Box(doc["domain"]["lo"], doc["domain"]["hi"])
        mesh = DyadicMesh.from_records(domain, doc["leaves"])
        coeffs = np.array([r.get("coeff", 0.0) for r in doc["leaves"]])
        return cls(mesh, coeffs)
