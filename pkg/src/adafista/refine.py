"""Refinement policy: when to refine (temporal) and which cells (spatial).

The temporal rule follows the practical criteria: refine to epoch k+1 once
the monitored certificate metric drops below beta * a_E^{-(k+1)}, with an
a-priori iteration count as backstop so stalls cannot postpone refinement
forever.  The spatial rule selects cells by the ratio of their certified sup
bound to the projected gradient value, greedily until the predicted
continuous dual norm is within gap_factor of the discrete one.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .certify import CertificateReport

MODES = ("apriori", "cont_gap", "disc_gap", "cont_grad", "disc_grad")


def kappa(a_U: float, a_E: float) -> float:
    """Degraded-rate exponent: energy decays like n^(-2(1-kappa))."""
    if a_U < 1 or a_E < 1:
        raise ValueError("need a_U, a_E >= 1")
    num = math.log(a_U**2)
    den = math.log(a_E) + num
    if den == 0.0:
        return 0.0
    return num / den


@dataclass
class RateParams:
    a_U: float
    a_E: float
    d: int = 1
    h: float = 0.5

    @property
    def kappa(self) -> float:
        return kappa(self.a_U, self.a_E)

    @property
    def energy_exponent(self) -> float:
        return 2.0 * (1.0 - self.kappa)

    @classmethod
    def lasso(cls, d: int) -> "RateParams":
        # piecewise-constant L1 instantiation: a_U = 2^(d/2), a_E = 2
        return cls(a_U=2.0 ** (d / 2.0), a_E=2.0, d=d)


def apriori_schedule(params: RateParams, c: float, K: int):
    """Refinement iterations n_k = ceil(c * (a_E a_U^2)^(k/2)), k = 1..K."""
    if c <= 0:
        raise ValueError("need c > 0")
    base = params.a_E * params.a_U**2
    out = []
    truncated = False
    prev = 0
    for k in range(1, K + 1):
        try:
            n_k = math.ceil(c * base ** (k / 2.0))
        except OverflowError:
            truncated = True
            break
        if n_k > 10**15:
            truncated = True
            break
        if n_k <= prev:
            n_k = prev + 1
        out.append(n_k)
        prev = n_k
    return out, truncated


@dataclass
class RefinePolicy:
    mode: str = "disc_gap"
    beta: float | None = None  # calibrated to the first certificate if None
    gap_factor: float = 2.0
    check_every: int = 10
    apriori_c: float = 10.0
    max_cells: int | None = None
    max_depth: int = 40
    coarsen: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown refinement mode {self.mode!r}")
        if self.gap_factor <= 1:
            raise ValueError("gap_factor must exceed 1")

    def metric(self, report: CertificateReport) -> float:
        return {
            "apriori": 0.0,
            "cont_gap": report.cont_gap,
            "disc_gap": report.disc_gap,
            "cont_grad": report.cont_grad,
            "disc_grad": report.disc_grad,
        }[self.mode]

    def backstop_n(self, params: RateParams, k: int) -> int:
        sched, truncated = apriori_schedule(params, self.apriori_c, k + 1)
        if truncated or len(sched) <= k:
            return 10**15
        return sched[k]

    def should_refine(
        self, report: CertificateReport, params: RateParams, k: int, n: int
    ) -> bool:
        backstop = n >= self.backstop_n(params, k)
        if self.mode == "apriori":
            return backstop
        if self.beta is None:
            raise ValueError("beta not calibrated")
        return self.metric(report) <= self.beta * params.a_E ** -(k + 1) or backstop


def select_cells(report: CertificateReport, disc, gap_factor: float):
    """Greedy spatial selection on a mesh discretization.

    Cells are ranked by sup_bound / |projected value|; a refined cell's bound
    is predicted to drop halfway toward |value|.  Selection stops once the
    predicted continuous dual norm is within gap_factor of the discrete one.
    """
    sup = report.cell_sup
    if sup is None:
        raise ValueError("spatial selection needs per-cell bounds")
    fvals = np.abs(disc.adjoint_project(report.phi))
    target = gap_factor * max(report.dual_norm_disc, 1e-300)
    pred = fvals + 0.5 * np.maximum(sup - fvals, 0.0)
    ratio = sup / np.maximum(fvals, 1e-300)
    levels = disc.mesh.levels
    at_cap = levels >= disc.mesh.max_depth
    # deterministic order: ratio desc, then (level, index) asc
    order = sorted(
        range(len(sup)),
        key=lambda i: (-ratio[i], int(levels[i]), tuple(disc.mesh.indices[i])),
    )
    eff = sup.copy()
    selected = []
    for i in order:
        if float(eff.max(initial=0.0)) <= target:
            break
        if at_cap[i] or eff[i] <= target:
            continue
        eff[i] = pred[i]
        selected.append(i)
    if not selected:
        usable = np.nonzero(~at_cap)[0]
        if len(usable):
            selected = [int(usable[np.argmax(sup[usable])])]
    return selected
