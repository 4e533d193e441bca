"""Figure rendering for the report verb (matplotlib, file output only)."""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def render_figures(out_dir: str, rows: list, recon=None) -> list:
    """Render convergence/resolution figures and the reconstruction.

    Returns the list of files written.
    """
    written = []
    n = np.array([r["n"] for r in rows], dtype=float)
    pos = n > 0

    fig, ax = plt.subplots(figsize=(6, 4))
    for key, style in (
        ("min_so_far_cont_gap", "-"),
        ("disc_gap", "--"),
        ("disc_grad", ":"),
    ):
        y = np.array([r[key] for r in rows], dtype=float)
        good = pos & (y > 0)
        if good.any():
            ax.loglog(n[good], y[good], style, label=key.replace("_", " "))
    ax.set_xlabel("iteration n")
    ax.set_ylabel("certified value")
    ax.legend()
    ax.set_title("convergence")
    path = os.path.join(out_dir, "convergence.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    w = np.array([r["min_cell_width"] for r in rows], dtype=float)
    cells = np.array([r["leaf_count"] for r in rows], dtype=float)
    ax.loglog(n[pos], 1.0 / w[pos], "-", label="1 / min cell width")
    ax.loglog(n[pos], cells[pos], "--", label="leaf count")
    ax.set_xlabel("iteration n")
    ax.legend()
    ax.set_title("resolution")
    path = os.path.join(out_dir, "resolution.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    written.append(path)

    if recon is not None:
        fig, ax = plt.subplots(figsize=(6, 4))
        mesh = recon.mesh
        if mesh.dim == 1:
            lo, hi = mesh.leaf_boxes()
            order = np.argsort(lo[:, 0])
            xs = np.empty(2 * len(order))
            ys = np.empty_like(xs)
            xs[0::2], xs[1::2] = lo[order, 0], hi[order, 0]
            ys[0::2] = ys[1::2] = recon.coeffs[order]
            ax.plot(xs, ys, "-")
            ax.set_xlabel("x")
            ax.set_ylabel("density")
        else:
            g = 256
            dom = mesh.domain
            px = dom.lo[0] + (np.arange(g) + 0.5) / g * dom.widths[0]
            py = dom.lo[1] + (np.arange(g) + 0.5) / g * dom.widths[1]
            img = np.empty((g, g))
            for i, x in enumerate(px):
                for j, y in enumerate(py):
                    img[j, i] = recon((x, y))
            ax.imshow(
                img, origin="lower",
                extent=[dom.lo[0], dom.hi[0], dom.lo[1], dom.hi[1]],
            )
        ax.set_title("reconstruction")
        path = os.path.join(out_dir, "recon.png")
        fig.savefig(path, dpi=120, bbox_inches="tight")
        plt.close(fig)
        written.append(path)
    return written
