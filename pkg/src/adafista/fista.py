"""Refining-subset FISTA: stepsize schedules, energies, prox and the step.

The iteration keeps two vectors x (the iterate) and z (the inertial point);
the subset restriction enters only through the discretization the vectors
live on, which may gain coefficients between steps (exact injection, so no
projection is ever needed).  The operator is pre-normalized to ||A|| <= 1,
so the gradient stepsize is 1.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ChambolleDossal:
    """t_0 = 1, t_n = (n + a - 1) / a for n >= 1; requires a >= 2."""

    kind = "chambolle-dossal"

    def __init__(self, a: float = 2.0):
        if a < 2:
            raise ValueError("need a >= 2 for rho_n >= 0")
        self.a = float(a)

    def t(self, n: int) -> float:
        return 1.0 if n == 0 else (n + self.a - 1) / self.a

    def rho(self, n: int) -> float:
        return self.t(n) ** 2 - self.t(n + 1) ** 2 + self.t(n + 1)


class Greedy:
    """Fixed-overshoot inertial scheme with gradient-based restart."""

    kind = "greedy"


@dataclass
class Energy:
    fidelity: str  # "quadratic" | "robust"
    b: np.ndarray
    mu: float
    eps: float = 1e-4

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.fidelity not in ("quadratic", "robust"):
            raise ValueError(f"unknown fidelity {self.fidelity!r}")
        if self.fidelity == "robust" and self.eps <= 0:
            raise ValueError("robust fidelity needs eps > 0")
        self.b = np.asarray(self.b, dtype=float)


def fidelity_value_grad(energy: Energy, r: np.ndarray):
    r = np.asarray(r, dtype=float)
    if energy.fidelity == "quadratic":
        return 0.5 * float(np.dot(r, r)), r.copy()
    eps = energy.eps
    big = np.abs(r) >= eps
    vals = np.where(big, eps * np.abs(r), 0.5 * r**2 + 0.5 * eps**2)
    grad = np.where(big, eps * np.sign(r), r)
    return float(vals.sum()), grad


def energy_value(energy: Energy, disc, c: np.ndarray) -> float:
    val, _ = fidelity_value_grad(energy, disc.forward(c) - energy.b)
    return val + energy.mu * disc.penalty(c)


def prox_l1(v: np.ndarray, threshold: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - threshold, 0.0)


class SolverState:
    def __init__(self, disc, schedule, x0=None):
        self.disc = disc
        self.schedule = schedule
        self.x = disc.zero() if x0 is None else np.asarray(x0, dtype=float).copy()
        self.z = self.x.copy()
        self.y = self.x.copy()  # greedy extrapolation point
        self.x_prev = self.x.copy()
        self.n = 0
        self.epoch = 0
        self.snapshot = self.x.copy()
        self.restarts = 0

    def carried_vectors(self):
        return [self.x, self.z, self.y, self.x_prev, self.snapshot]

    def set_carried(self, vectors):
        self.x, self.z, self.y, self.x_prev, self.snapshot = vectors

    def mark_epoch(self):
        self.epoch += 1
        self.snapshot = self.x.copy()


def _grad_step(state: SolverState, energy: Energy, point: np.ndarray) -> np.ndarray:
    r = state.disc.forward(point) - energy.b
    _, g = fidelity_value_grad(energy, r)
    return prox_l1(point - state.disc.adjoint_project(g), energy.mu)


def step(state: SolverState, energy: Energy) -> None:
    """One iteration of refining-subset FISTA (Chambolle-Dossal stepsize)."""
    t = state.schedule.t(state.n)
    ubar = (1.0 - 1.0 / t) * state.x + (1.0 / t) * state.z
    x_new = _grad_step(state, energy, ubar)
    state.z = (1.0 - t) * state.x + t * x_new
    state.x = x_new
    state.n += 1


def greedy_step(state: SolverState, energy: Energy) -> None:
    """Greedy variant: overshoot y = 2x - x_prev, restart on misalignment.

    Heuristic; no convergence guarantee under refinement.
    """
    y = state.y
    x_new = _grad_step(state, energy, y)
    if state.disc.inner(y - x_new, x_new - state.x) >= 0.0:
        state.y = x_new.copy()  # restart: drop the momentum
        state.restarts += 1
    else:
        state.y = x_new + (x_new - state.x)
    state.x_prev = state.x
    state.x = x_new
    state.z = x_new.copy()
    state.n += 1


def advance(state: SolverState, energy: Energy) -> None:
    if getattr(state.schedule, "kind", "") == "greedy":
        greedy_step(state, energy)
    else:
        step(state, energy)
