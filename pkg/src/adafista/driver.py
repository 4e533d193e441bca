"""Solver loop: FISTA steps, periodic certificates, refinement, trace rows.

One check every `check_every` iterations computes the full certificate and
drives both refinement rules:

* mesh mode: a repair loop refines (ratio rule) until the continuous gap is
  within gap_factor of the discrete one, and the temporal criterion triggers
  epoch refinements of the whole non-screenable region;
* wavelet mode: the active set grows until every leaf tail bound is within
  factor 10 of the discrete gradient norm.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .certify import (
    CertificateReport,
    certify as make_certificate,
    discrete_grad_norm,
    dual_vector,
)
from .discretize import MeshDiscretization, WaveletDiscretization
from .fista import Energy, SolverState, advance
from .kernels import KernelOperator
from .refine import RateParams, RefinePolicy, select_cells

TRACE_COLUMNS = [
    "n", "wall_time_s", "energy", "disc_gap", "cont_gap",
    "min_so_far_cont_gap", "disc_grad", "cont_grad", "leaf_count",
    "min_cell_width", "epoch", "screened_cells",
]

WAVELET_GROW_FACTOR = 10.0
RATIO_REPAIR_TRIES = 8


@dataclass
class RunResult:
    rows: list
    state: SolverState
    disc: object
    energy: Energy
    report: CertificateReport
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return np.array([row[name] for row in self.rows])


def make_discretization(op: KernelOperator, mode: str, max_depth: int = 40,
                        uniform_depth: int = 0):
    if mode == "wavelet":
        disc = WaveletDiscretization(op, max_depth=max_depth)
        for _ in range(uniform_depth):
            disc.tree.refine_leaves(range(disc.mesh.leaf_count()))
        if uniform_depth:
            added = list(range(disc.C.shape[1], disc.tree.n_slots()))
            disc.C = np.concatenate(
                [disc.C, disc.tree.slot_columns(op, added)], axis=1
            )
        return disc
    disc = MeshDiscretization(op, max_depth=max_depth)
    for _ in range(uniform_depth):
        disc.refine(range(disc.mesh.leaf_count()), [])
    return disc


def _epoch_cells(report: CertificateReport, disc, mu: float):
    """Cells refined at a temporal epoch: halve the sup-bound overshoot.

    The continuous dual norm exceeds the discrete one by the worst per-cell
    Taylor overshoot; refining every cell in the top half of that overshoot
    halves it, which is what keeps the continuous gap tracking the discrete
    one from epoch to epoch.
    """
    over = report.cell_sup - report.dual_norm_disc
    usable = disc.mesh.levels < disc.mesh.max_depth
    top = float(over.max(initial=0.0))
    if top <= 0.0:
        cand = np.nonzero(usable)[0]
        if not len(cand):
            return []
        chosen = {int(cand[np.argmax(report.cell_sup[cand])])}
    else:
        chosen = {int(i) for i in np.nonzero((over > 0.5 * top) & usable)[0]}
    # also halve the cells where the dual field peaks (the support cells);
    # their widths limit how far the discrete gap can still fall.  Peaks are
    # extracted by non-max suppression at the field's own curvature scale so
    # each spike contributes one cell, not its whole plateau.
    fvals = np.abs(disc.adjoint_project(report.phi))
    cand = np.nonzero(usable)[0]
    if len(cand):
        mids = disc.mesh.leaf_midpoints()
        pnorm = float(np.linalg.norm(report.phi))
        radius = np.inf
        if disc.op.smooth and pnorm > 0:
            c2 = disc.op.smoothness_seminorm(2)
            if c2 > 0:
                radius = np.sqrt(2.0 * mu / (c2 * pnorm))
        peaks = []
        order = cand[np.argsort(-fvals[cand], kind="stable")]
        for i in order:
            if fvals[i] < 0.5 * report.dual_norm_disc or len(peaks) >= 16:
                break
            if all(
                np.linalg.norm(mids[i] - mids[p]) > radius for p in peaks
            ):
                peaks.append(int(i))
        if not peaks:
            peaks = [int(cand[np.argmax(fvals[cand])])]
        # take each peak together with its touching neighbours, otherwise the
        # field maximum hops to a coarser neighbour and the depth stalls
        diam = disc.mesh.leaf_diameters()
        levels = disc.mesh.levels
        for p in peaks:
            dist = np.linalg.norm(mids[cand] - mids[p], axis=1)
            near = dist <= 0.51 * (diam[cand] + diam[p])
            chosen.update(int(i) for i in cand[near])
            # and keep the locally deepest cell descending every epoch, else
            # the minimum width stalls while the peak hops between neighbours
            ball = dist <= max(radius, 2.0 * diam[p])
            if ball.any():
                inball = cand[ball]
                chosen.add(int(inball[np.argmax(levels[inball])]))
    return sorted(chosen)


def solve(
    op: KernelOperator,
    energy: Energy,
    schedule,
    iters: int,
    policy: RefinePolicy | None = None,
    mode: str = "mesh",
    fixed: bool = False,
    uniform_depth: int = 0,
    rate_params: RateParams | None = None,
    x0=None,
    screening: bool = True,
    disc=None,
) -> RunResult:
    policy = policy or RefinePolicy()
    if disc is None:
        disc = make_discretization(
            op, mode, max_depth=policy.max_depth, uniform_depth=uniform_depth
        )
    rate = rate_params or RateParams.lasso(op.dim)
    state = SolverState(disc, schedule, x0=x0)
    rows = []
    min_cont = np.inf
    t_start = time.perf_counter()

    def room() -> bool:
        return policy.max_cells is None or disc.n < policy.max_cells

    def check():
        nonlocal min_cont
        refined = False
        if not fixed and disc.mode == "wavelet":
            phi = dual_vector(energy, disc, state.x)
            fvals = disc.adjoint_project(phi)
            dgrad = discrete_grad_norm(state.x, fvals, energy.mu)
            vecs, added, _ = disc.grow(
                phi, energy.mu, dgrad, state.carried_vectors(),
                factor=WAVELET_GROW_FACTOR,
            )
            if added:
                state.set_carried(vecs)
                refined = True
        report = make_certificate(energy, disc, state.x, screening=screening)
        if not fixed and disc.mode == "mesh":
            tries = 0
            while (
                report.cont_gap > policy.gap_factor * report.disc_gap
                and tries < RATIO_REPAIR_TRIES
                and room()
            ):
                cells = select_cells(report, disc, policy.gap_factor)
                if not cells:
                    break
                state.set_carried(disc.refine(cells, state.carried_vectors()))
                report = make_certificate(energy, disc, state.x, screening=screening)
                refined = True
                tries += 1
            if policy.beta is None:
                policy.beta = max(policy.metric(report), 1e-300)
            if (
                policy.should_refine(report, rate, state.epoch, state.n)
                and room()
            ):
                cells = _epoch_cells(report, disc, energy.mu)
                if cells:
                    state.set_carried(disc.refine(cells, state.carried_vectors()))
                    state.mark_epoch()
                    report = make_certificate(energy, disc, state.x, screening=screening)
            if policy.coarsen and len(report.screened):
                zero = [
                    int(p)
                    for p in report.screened
                    if all(v[p] == 0.0 for v in state.carried_vectors())
                ]
                if zero:
                    state.set_carried(
                        disc.coarsen_zero(zero, state.carried_vectors())
                    )
                    report = make_certificate(energy, disc, state.x, screening=screening)
        elif not fixed and disc.mode == "wavelet" and refined:
            state.mark_epoch()
        min_cont = min(min_cont, report.cont_gap)
        rows.append(
            {
                "n": state.n,
                "wall_time_s": time.perf_counter() - t_start,
                "energy": report.energy,
                "disc_gap": report.disc_gap,
                "cont_gap": report.cont_gap,
                "min_so_far_cont_gap": min_cont,
                "disc_grad": report.disc_grad,
                "cont_grad": report.cont_grad,
                "leaf_count": disc.mesh.leaf_count(),
                "min_cell_width": disc.mesh.min_cell_width(),
                "epoch": state.epoch,
                "screened_cells": len(report.screened),
            }
        )
        return report

    report = check()
    while state.n < iters:
        advance(state, energy)
        if state.n % policy.check_every == 0 or state.n == iters:
            report = check()
    return RunResult(rows=rows, state=state, disc=disc, energy=energy, report=report)
