import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest

from nnfock import _linalg as la
from nnfock import appendix_c as ac
from nnfock.algebra import load_example
from nnfock.partitions import catalan
from nnfock.wick import wick_poly
from nnfock.fock import build_fock


def scalar_c(c, lam=0, N=6):
    return ac.build_construction_c([[c]], [[[lam]]], N=N)


def test_zero_c_is_full_fock_space():
    cc = ac.diagonal_c([[0, 0], [0, 0]], N=4)
    for n in range(5):
        assert la.max_abs(cc.gram(n) - la.eye(2 ** n, True)) == 0
    f = np.array([F(1), F(0)])
    for n in range(4):
        assert ac.moment_c(cc, [f] * (2 * n)) == catalan(n)
        assert ac.moment_c(cc, [f] * (2 * n + 1)) == 0


def test_diagonal_c_grams():
    Cij = [[F(1, 2), F(-1, 3)], [F(1, 4), 0]]
    cc = ac.diagonal_c(Cij, N=3)
    G = cc.gram(3)
    for i, j, k in itertools.product(range(2), repeat=3):
        idx = 4 * i + 2 * j + k
        assert G[idx, idx] == (1 + F(Cij[i][j])) * (1 + F(Cij[j][k]))
    assert la.max_abs(G - np.diag(np.diag(G))) == 0


def test_invariants_hold_for_random_constructions():
    rng = np.random.default_rng(0)
    for _ in range(3):
        cc = ac.random_construction_c(rng, m=2, N=4)
        assert max(ac.invariant_residuals(cc).values()) == 0
        assert all(la.min_eigenvalue(la.float_array(cc.gram(n))) > 0 for n in range(5))


@pytest.mark.parametrize("C,L", [
    ([[-2]], None),                                   # C + I not positive
    ([[1, 2, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]], None),  # not self-adjoint
    ([[0]], [[[1], [2]]]),                             # Lambda of the wrong shape
])
def test_invalid_constructions(C, L):
    with pytest.raises(ac.InvalidConstruction):
        ac.build_construction_c(C, L)


def test_scalar_r_prime():
    c, lam = F(1, 3), F(2, 5)
    cc = scalar_c(c, lam)
    R = ac.r_prime_c(cc, [1], 3)
    assert R[0][0, 0] == 1 and R[1][0, 0] == lam
    assert R[2][0, 0] == c + lam ** 2 == F(37, 75)
    assert ac.r_prime_consistency_c(cc, [1], 3) == 0
    assert max(ac.gf_residual_c(cc, [1], 4)) == 0


def test_zero_c_r_prime_is_lambda_chain():
    L = np.zeros((2, 2, 2), dtype=object)
    L[0, 0, 0] = L[0, 1, 1] = F(1)
    cc = ac.build_construction_c(np.zeros((4, 4), dtype=int), L, N=5)
    f = np.array([F(1), F(0)])
    R = ac.r_prime_c(cc, f, 3)
    A0 = cc.a0_matrix(f)
    for n in range(4):
        assert la.max_abs(R[n] - np.linalg.matrix_power(A0, n)) == 0


def test_operators_and_wick():
    cc = ac.random_construction_c(np.random.default_rng(1), m=2, N=4)
    f, g = np.array([F(1), F(1, 2)]), np.array([F(-1, 3), F(1)])
    assert max(ac.adjoint_residuals_c(cc, f).values()) == 0
    minus = ac.ops_c(cc, f)["minus"]
    v = cc.tensor(g)
    assert minus.apply(v)[0][0] == la.matmul(la.conj(cc.star_of(f)), g)
    for n in range(1, 5):
        assert ac.wick_vacuum_residual_c(cc, [(f, g)[k % 2] for k in range(n)]) == 0


def test_zero_c_wick_matches_free_case():
    # eta = 0, lam = 0: gamma = 0, so C + I = (gamma+phi) = 1 and C = 0
    cc = scalar_c(0, 0, N=4)
    fc = build_fock(load_example("bozejko", {"eta": ["0"], "lam": ["0"]}), 4)
    a, b = ac.wick_c(cc, [[1]] * 3), wick_poly(fc, [[1]] * 3)
    assert (a - b).max_abs() == 0


def test_literal_creation_bound_fails_on_vacuum():
    reps = {r.name: r for r in ac.norm_bounds_c(scalar_c(F(-9, 10), N=5))}
    lit = reps["||a+(f)|| <= sqrt||C+I|| ||f||"]
    assert not lit.ok() and abs(lit.computed - 1) < 1e-9
    assert reps["||a+(f)|| on levels >= 1 <= sqrt||C+I|| ||f||"].ok()
    assert reps["||a+(f)|| <= sqrt(max(1, ||C+I||)) ||f||"].ok()
    assert reps["| ||a-(f*)|| - ||a+(f)|| | = 0"].ok()


def test_norm_bounds_random():
    cc = ac.random_construction_c(np.random.default_rng(2), m=2, N=4)
    assert all(r.ok() for r in ac.norm_bounds_c(cc) if r.name != "||a+(f)|| <= sqrt||C+I|| ||f||")


def test_radius_with_negative_c():
    cc = scalar_c(F(-9, 10), N=4)
    assert abs(ac.convergence_radius_c(cc) - 1 / (4 * math.sqrt(0.1))) < 1e-12
    assert abs(ac.convergence_radius_c(cc, corrected=True) - 1 / (4 * math.sqrt(0.9))) < 1e-12
    reps = ac.r_prime_growth_c(cc, [1], 10)
    assert all(r.ok() for r in reps if r.tags["L"] == "corrected")
    assert not all(r.ok() for r in reps if r.tags["L"] == "literal")


def test_bridge_lenczewski():
    ctx = load_example("lenczewski_discrete", {"w": [["1/2", "1/4"], ["1/4", "1"]]})
    cc, Q = ac.from_algebra_context(ctx, N=4)
    assert ac.bridge_gram_residual(ctx, cc, Q) < 1e-9
    words = [w for n in range(1, 6) for w in itertools.product(range(2), repeat=n)][::3]
    assert ac.bridge_moment_residual(ctx, cc, Q, words, [ctx.basis(0), ctx.basis(1)]) < 1e-9


def test_bridge_poisson_gives_zero_c():
    ctx = load_example("poisson", {"d": 2, "phi": ["1/4", "1/9"]})
    cc, Q = ac.from_algebra_context(ctx, N=4)
    assert la.max_abs(cc.C) == 0
    assert ac.bridge_gram_residual(ctx, cc, Q) == 0


def test_orthogonal_basis_check():
    I2 = la.eye(2, True)
    diag = ac.diagonal_c([[F(1, 2), F(1, 3)], [0, F(-1, 2)]], N=3)
    rep = ac.orthogonal_basis_check(diag, [I2, I2, I2])
    assert rep.condition and rep.orthogonal and rep.agree
    dense = ac.build_construction_c([[0, F(1, 3), F(1, 3), 0], [F(1, 3), 0, 0, F(1, 3)],
                                     [F(1, 3), 0, 0, F(1, 3)], [0, F(1, 3), F(1, 3), 0]], N=3,
                                    validate=False)
    rep = ac.orthogonal_basis_check(dense, [I2, I2, I2])
    assert not rep.condition and rep.condition_witness is not None and rep.agree
    boz = load_example("bozejko", {"eta": ["1/2", "1/2"], "lam": ["1", "0"], "phi": ["1/4", "1/4"]})
    Q = ac.phi_orthonormal_basis(boz)
    rep = ac.orthogonal_basis_check(build_fock(boz, 3), [Q, Q, Q])
    assert rep.condition and rep.orthogonal


def test_wick_alpha_fit_is_flagged():
    rng = np.random.default_rng(3)
    cc = ac.random_construction_c(rng, m=2, N=5)
    fs = [np.array([F(1), F(1, 2)])] * 3
    K = ac.wick_constant_c(cc)
    alpha = ac.fit_wick_alpha([(3, ac.wick_norm_ratio(cc, fs), K)])
    rep = ac.wick_norm_bounds_c(cc, fs, alpha)
    assert rep.tags["empirical"] and rep.ok()
