"""A-posteriori certificates: dual energies, gaps, gradient norms, screening.

Everything here is a certified bound: the discrete gap bounds the distance
to the best energy on the current discretization, the continuous gap bounds
the distance to the infimum over all measures, and screened cells provably
carry no support of any minimizer.  Negative gaps beyond a small numerical
floor indicate a soundness bug and abort the run.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import bounds
from .fista import Energy, energy_value, fidelity_value_grad

GAP_FLOOR = 1e-9


class InfeasibleDualError(ValueError):
    pass


class SoundnessError(RuntimeError):
    pass


@dataclass
class CertificateReport:
    phi: np.ndarray
    sigma: float
    sigma0: float
    energy: float
    disc_gap: float
    cont_gap: float
    disc_grad: float
    cont_grad: float
    screen_ratio: float
    dual_norm_disc: float
    dual_norm_cont: float
    cell_sup: np.ndarray | None = None
    tail_bounds: np.ndarray | None = None
    screened: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    clamped: bool = False


def dual_vector(energy: Energy, disc, x: np.ndarray) -> np.ndarray:
    _, g = fidelity_value_grad(energy, disc.forward(x) - energy.b)
    return g


def dual_energy(energy: Energy, phi: np.ndarray) -> float:
    phi = np.asarray(phi, dtype=float)
    lin = float(np.dot(energy.b, phi))
    if energy.fidelity == "quadratic":
        return 0.5 * float(np.dot(phi, phi)) + lin
    if np.max(np.abs(phi), initial=0.0) > energy.eps * (1 + 1e-12):
        raise InfeasibleDualError("phi outside the domain of the conjugate")
    return float(np.sum(0.5 * phi**2 - 0.5 * energy.eps**2)) + lin


def _golden_min(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    g = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def sigma_opt(energy: Energy, phi: np.ndarray, dual_norm_bound: float) -> float:
    """Feasible scaling minimizing sigma -> E_dual(sigma * phi)."""
    phi = np.asarray(phi, dtype=float)
    p2 = float(np.dot(phi, phi))
    if p2 == 0.0:
        return 0.0
    cap = energy.mu / dual_norm_bound if dual_norm_bound > 0 else np.inf
    if energy.fidelity == "quadratic":
        return float(max(0.0, min(-np.dot(energy.b, phi) / p2, cap)))
    cap = min(cap, energy.eps / float(np.max(np.abs(phi))))
    if not np.isfinite(cap):
        cap = 0.0
    return _golden_min(lambda s: dual_energy(energy, s * phi), 0.0, cap)


def grad_case_values(x: np.ndarray, field_vals: np.ndarray, mu: float) -> np.ndarray:
    """Distance of -field to mu * subdifferential of |.| at x, per entry."""
    pos = np.abs(field_vals + mu)
    neg = np.abs(field_vals - mu)
    zero = np.maximum(np.abs(field_vals) - mu, 0.0)
    return np.where(x > 0, pos, np.where(x < 0, neg, zero))


def discrete_grad_norm(x: np.ndarray, field_vals: np.ndarray, mu: float) -> float:
    return float(grad_case_values(x, field_vals, mu).max(initial=0.0))


def _clamp_gap(gap: float, scale: float) -> tuple[float, bool]:
    floor = GAP_FLOOR * max(1.0, scale)
    if gap < -floor:
        raise SoundnessError(f"negative certified gap {gap:.3e}")
    if gap < 0.0:
        return 0.0, True
    return gap, False


def certify(
    energy: Energy, disc, x: np.ndarray, screening: bool = True
) -> CertificateReport:
    """Assemble the full certificate for the current iterate."""
    x = np.asarray(x, dtype=float)
    phi = dual_vector(energy, disc, x)
    e_val = energy_value(energy, disc, x)
    fvals = disc.adjoint_project(phi)
    dual_norm_disc = float(np.max(np.abs(fvals), initial=0.0))
    sigma = sigma_opt(energy, phi, dual_norm_disc)
    disc_gap = e_val + dual_energy(energy, sigma * phi)
    mu = energy.mu

    mesh = disc.mesh
    cell_sup = None
    tail = None
    if disc.mode == "mesh":
        if disc.op.smooth:
            vals, rad = bounds.taylor_cell_intervals(disc.op, phi, mesh)
            cell_sup = np.abs(vals) + rad
            cont_grad_cells = grad_case_values(x, vals, mu) + rad
            cont_grad_cells[x == 0] = np.maximum(cell_sup[x == 0] - mu, 0.0)
        else:
            cell_sup = bounds.indicator_cell_sup_bounds(disc.op, phi, mesh)
            # no signed midpoint value; bound each case by the sup bound
            cont_grad_cells = np.where(
                x != 0, cell_sup + mu, np.maximum(cell_sup - mu, 0.0)
            )
        dual_norm_cont = float(cell_sup.max(initial=0.0))
        cont_grad = float(cont_grad_cells.max(initial=0.0))
    else:
        tail = disc.tree.leaf_tail_bounds(disc.op, phi)
        dual_norm_cont = max(dual_norm_disc, float(tail.max(initial=0.0)))
        cont_grad = max(
            discrete_grad_norm(x, fvals, mu),
            float(np.maximum(tail - mu, 0.0).max(initial=0.0)),
        )
    sigma0 = sigma_opt(energy, phi, dual_norm_cont)
    cont_gap = e_val + dual_energy(energy, sigma0 * phi)

    disc_gap, cl1 = _clamp_gap(disc_gap, abs(e_val))
    cont_gap, cl2 = _clamp_gap(cont_gap, abs(e_val))
    cont_gap = max(cont_gap, disc_gap)

    disc_grad = discrete_grad_norm(x, fvals, mu)

    c0 = disc.op.sup_norm_bound()
    slack = float(np.sqrt(2.0 * cont_gap))
    screen_ratio = slack * c0 / mu
    screened = np.empty(0, dtype=np.int64)
    if screening and screen_ratio < 1.0:
        if disc.mode == "mesh":
            screened = np.nonzero(sigma0 * cell_sup < mu - slack * c0)[0]
        else:
            col_norms = np.linalg.norm(disc.C, axis=0)
            screened = np.nonzero(
                sigma0 * np.abs(fvals) < mu - slack * col_norms
            )[0]
    return CertificateReport(
        phi=phi,
        sigma=sigma,
        sigma0=sigma0,
        energy=e_val,
        disc_gap=disc_gap,
        cont_gap=cont_gap,
        disc_grad=disc_grad,
        cont_grad=cont_grad,
        screen_ratio=screen_ratio,
        dual_norm_disc=dual_norm_disc,
        dual_norm_cont=dual_norm_cont,
        cell_sup=cell_sup,
        tail_bounds=tail,
        screened=screened,
        clamped=cl1 or cl2,
    )
