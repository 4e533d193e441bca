import math

import numpy as np
import pytest

from adafista.certify import certify
from adafista.discretize import MeshDiscretization
from adafista.fista import ChambolleDossal, Energy, SolverState, step
from adafista.geometry import Box
from adafista.kernels import KernelOperator
from adafista.refine import (
    RateParams,
    RefinePolicy,
    apriori_schedule,
    kappa,
    select_cells,
)


def test_kappa_closed_form():
    # kappa = log(a_U^2) / (log a_E + log a_U^2)
    assert kappa(np.sqrt(2.0), 2.0) == pytest.approx(0.5)
    assert kappa(2.0, 2.0) == pytest.approx(math.log(4) / math.log(8))
    assert kappa(1.0, 2.0) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        kappa(0.5, 2.0)


def test_lasso_rate_params():
    p1 = RateParams.lasso(1)
    assert p1.kappa == pytest.approx(0.5)
    assert p1.energy_exponent == pytest.approx(1.0)
    p2 = RateParams.lasso(2)
    assert p2.a_U == pytest.approx(2.0)
    assert p2.energy_exponent == pytest.approx(2.0 * (1 - math.log(4) / math.log(8)))


def test_apriori_schedule_growth():
    p = RateParams.lasso(1)
    sched, truncated = apriori_schedule(p, c=10.0, K=12)
    assert not truncated
    assert all(b > a for a, b in zip(sched, sched[1:]))
    # n_k = ceil(10 * 2^(k/2)) since a_E a_U^2 = 4
    for k, n in enumerate(sched, start=1):
        assert n >= math.ceil(10.0 * 4.0 ** (k / 2.0)) - 1
    sched, truncated = apriori_schedule(p, c=1.0, K=200)
    assert truncated
    with pytest.raises(ValueError):
        apriori_schedule(p, c=0.0, K=3)


def test_policy_validation_and_metric():
    with pytest.raises(ValueError):
        RefinePolicy(mode="bogus")
    with pytest.raises(ValueError):
        RefinePolicy(gap_factor=1.0)
    pol = RefinePolicy(mode="disc_gap", beta=1.0)
    p = RateParams.lasso(1)

    class R:
        disc_gap = 0.4
        cont_gap = 0.9
        disc_grad = 0.1
        cont_grad = 0.2

    # epoch 0 threshold is beta / 2 = 0.5: 0.4 qualifies
    assert pol.should_refine(R(), p, 0, n=10)
    # epoch 1 threshold 0.25: 0.4 does not, unless the backstop n is reached
    assert not pol.should_refine(R(), p, 1, n=10)
    assert pol.should_refine(R(), p, 1, n=10**9)


def test_apriori_mode_uses_backstop_only():
    pol = RefinePolicy(mode="apriori", apriori_c=10.0)
    p = RateParams.lasso(1)
    assert not pol.should_refine(None, p, 0, n=5)
    assert pol.should_refine(None, p, 0, n=20)


def test_select_cells_brings_predicted_norm_to_target():
    rng = np.random.Generator(np.random.Philox(3))
    op = KernelOperator(
        "gaussian", Box([0.0], [1.0]),
        centers=np.sort(rng.uniform(0, 1, 10))[:, None], sigma=0.1,
    ).normalized()
    energy = Energy(fidelity="quadratic", b=rng.normal(size=op.m), mu=0.05)
    disc = MeshDiscretization(op)
    disc.refine(range(1), [])
    disc.refine(range(2), [])
    state = SolverState(disc, ChambolleDossal(2.0))
    for _ in range(50):
        step(state, energy)
    report = certify(energy, disc, state.x)
    cells = select_cells(report, disc, gap_factor=2.0)
    assert cells  # coarse mesh: something must be selected
    assert all(0 <= i < disc.n for i in cells)
    assert len(set(cells)) == len(cells)
    # selection is deterministic
    assert cells == select_cells(report, disc, gap_factor=2.0)


def test_repeated_selection_closes_the_gap_ratio():
    rng = np.random.Generator(np.random.Philox(5))
    op = KernelOperator(
        "gaussian", Box([0.0], [1.0]),
        centers=np.sort(rng.uniform(0, 1, 10))[:, None], sigma=0.1,
    ).normalized()
    energy = Energy(fidelity="quadratic", b=rng.normal(size=op.m), mu=0.05)
    disc = MeshDiscretization(op)
    state = SolverState(disc, ChambolleDossal(2.0))
    for _ in range(100):
        step(state, energy)
    for _ in range(25):
        report = certify(energy, disc, state.x)
        if report.dual_norm_cont <= 2.0 * report.dual_norm_disc:
            break
        cells = select_cells(report, disc, gap_factor=2.0)
        state.set_carried(disc.refine(cells, state.carried_vectors()))
    report = certify(energy, disc, state.x)
    assert report.dual_norm_cont <= 2.0 * report.dual_norm_disc
