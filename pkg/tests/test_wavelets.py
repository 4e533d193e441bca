import numpy as np
import pytest

from adafista.geometry import Box
from adafista.kernels import KernelOperator
from adafista.mesh import PiecewiseConstant
from adafista.wavelets import WaveletTree, haar_matrix


def random_tree(d, depth, seed):
    rng = np.random.Generator(np.random.Philox(seed))
    tree = WaveletTree(Box([0.0] * d, [1.0] * d))
    for _ in range(depth):
        k = tree.mesh.leaf_count()
        # refine a random subset each round, keeping the tree unbalanced
        pos = rng.choice(k, size=max(1, k // 2), replace=False)
        tree.refine_leaves(pos)
    return tree


def test_haar_matrix_orthonormal():
    for d in (1, 2):
        M = haar_matrix(d)
        assert np.allclose(M @ M.T, np.eye(2**d), atol=1e-14)


@pytest.mark.parametrize("d,depth", [(1, 5), (2, 3)])
def test_analyze_synthesize_identity_and_parseval(d, depth):
    for seed in range(5):
        tree = random_tree(d, depth, seed)
        rng = np.random.Generator(np.random.Philox(100 + seed))
        coeffs = rng.normal(size=tree.n_slots())
        u = tree.synthesize(coeffs)
        back = tree.analyze(u)
        assert np.max(np.abs(back - coeffs)) < 1e-12
        # Parseval: the basis is orthonormal in L2
        assert abs(u.norm_l2() - np.linalg.norm(coeffs)) < 1e-12


def test_slot_count_matches_leaf_count():
    for d in (1, 2):
        tree = random_tree(d, 3, seed=9)
        assert tree.n_slots() == tree.mesh.leaf_count()


def test_zero_detail_slots_are_exact_injection():
    tree = WaveletTree(Box([0.0], [1.0]))
    rng = np.random.Generator(np.random.Philox(13))
    coeffs = rng.normal(size=1)
    u_before = tree.synthesize(coeffs)
    pts = rng.uniform(0, 1, size=20)
    vals = [u_before(p) for p in pts]
    added = tree.refine_leaves([0])
    coeffs = np.concatenate([coeffs, np.zeros(added)])
    u_after = tree.synthesize(coeffs)
    assert np.allclose([u_after(p) for p in pts], vals, atol=1e-14)


def test_slot_columns_match_direct_integrals():
    tree = random_tree(1, 3, seed=21)
    op = KernelOperator(
        "gaussian", Box([0.0], [1.0]),
        centers=np.linspace(0.1, 0.9, 5)[:, None], sigma=0.1,
    )
    cols = tree.slot_columns(op, range(tree.n_slots()))
    lo, hi = tree.mesh.leaf_boxes()
    Q = op.cell_matrix(lo, hi)
    for s in range(tree.n_slots()):
        e = np.zeros(tree.n_slots())
        e[s] = 1.0
        u = tree.synthesize(e)
        # <psi_j, b_s> = sum over leaves of coeff * cell integral
        want = Q @ u.coeffs
        assert np.allclose(cols[:, s], want, atol=1e-12)


def test_leaf_tail_bounds_dominate_new_detail_coefficients():
    rng = np.random.Generator(np.random.Philox(31))
    tree = random_tree(1, 3, seed=5)
    op = KernelOperator(
        "gaussian", Box([0.0], [1.0]),
        centers=np.linspace(0.0, 1.0, 8)[:, None], sigma=0.09,
    )
    for _ in range(10):
        phi = rng.normal(size=op.m)
        tails = tree.leaf_tail_bounds(op, phi)
        # the tail bound dominates every wavelet coefficient of A* phi
        # below the corresponding leaf; check one level down
        probe = random_tree(1, 3, seed=5)
        n_old = probe.n_slots()
        probe.refine_leaves(range(probe.mesh.leaf_count()))
        new = list(range(n_old, probe.n_slots()))
        cols = probe.slot_columns(op, new)
        coeffs = cols.T @ phi
        assert np.max(np.abs(coeffs)) <= tails.max() * (1 + 1e-12)


def test_grow_reaches_tail_target():
    rng = np.random.Generator(np.random.Philox(41))
    tree = WaveletTree(Box([0.0], [1.0]))
    op = KernelOperator(
        "gaussian", Box([0.0], [1.0]),
        centers=np.linspace(0.0, 1.0, 6)[:, None], sigma=0.15,
    )
    phi = rng.normal(size=op.m)
    mu = 0.01
    added, capped = tree.grow(op, phi, mu, disc_grad=1e-3, factor=10.0)
    assert not capped
    tails = tree.leaf_tail_bounds(op, phi)
    assert np.all(tails - mu <= 10.0 * 1e-3 + 1e-15)
