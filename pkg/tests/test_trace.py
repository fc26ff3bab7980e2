from fractions import Fraction as F

import numpy as np
import pytest

from nnfock import _linalg as la
from nnfock.algebra import (InvalidAlgebra, commutative_algebra, load_example, make_context,
                            random_context, scalar_context)
from nnfock.fock import build_fock, x_op
from nnfock.trace import (apply_s, central_eta_decomposition, check_trace_conditions,
                          commutator_residual, conjugated_lambda, interacting_w_map,
                          poisson_decomposition, s_involution, s_isometry_residual,
                          w_map_residuals, x_r)
from nnfock.wick import wick_poly

ROT = [[F(3, 5), F(-4, 5)], [F(4, 5), F(3, 5)]]


def half_half(**kw):
    mul, star, unit, phi = commutative_algebra([F(1, 2), F(1, 2)], True)
    return make_context(mul, star, unit, phi, **kw)


@pytest.mark.parametrize("ctx", [scalar_context(F(1, 2), 1),
                                 load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "0"]}),
                                 random_context(np.random.default_rng(0), 2, kind="general")],
                         ids=["scalar", "bozejko", "random"])
def test_s_is_an_involution(ctx):
    fc = build_fock(ctx, 3)
    S = s_involution(fc)
    assert la.max_abs(S[0] - la.eye(1, True)) == 0
    for n in range(4):
        assert la.max_abs(la.matmul(S[n], la.conj(S[n])) - la.eye(fc.d ** n, True)) == 0
    vac = apply_s(fc, fc.vacuum(), S)
    assert vac[0][0] == 1


def test_s_reverses_and_stars():
    # S(u (x) v) = v* (x) u*
    ctx = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "0"]})
    fc = build_fock(ctx, 2)
    S = s_involution(fc)
    u, v = ctx.basis(0), ctx.basis(0) + 2 * ctx.basis(1)
    lhs = la.matmul(S[2], la.conj(fc.tensor(u, v)[2]))
    assert la.max_abs(lhs - fc.tensor(ctx.star_of(v), ctx.star_of(u))[2]) == 0


def test_s_isometry_on_tracial_context():
    fc = build_fock(load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "-1"]}), 3)
    assert s_isometry_residual(fc) == 0


def test_x_r_scalar_low_levels():
    fc = build_fock(scalar_context(F(1, 3), F(2, 5)), 3)
    X, Xr = x_op(fc, [1]), x_r(fc, [1])
    for key in [(1, 0), (0, 1), (1, 1)]:
        assert la.max_abs(X.block(*key) - Xr.block(*key)) == 0


def test_bozejko_tracial():
    ctx = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "-1/3"], "phi": ["1/3", "2/3"]})
    rep = check_trace_conditions(build_fock(ctx, 5), 5)
    assert rep.conditions_hold and rep.commute and rep.cyclic()
    assert rep.commutator_level3 == 0


def test_left_multiplier_counterexample():
    bad = half_half(lambda_map=[[1, 2], [0, -1]], name="lambda-u-v")
    rep = check_trace_conditions(build_fock(bad, 5), 5)
    assert rep.star > 0 and not rep.commute and not rep.cyclic(5)
    assert commutator_residual(build_fock(bad, 4), (0, 1, 2)) > 0


def test_poisson_tracial():
    rep = check_trace_conditions(build_fock(load_example("poisson", {"d": 2, "phi": ["1/4", "3/4"]}), 4), 4)
    assert rep.conditions_hold and rep.commute and rep.phi_tracial == 0


def test_poisson_decomposition_lambda_zero():
    ctx = half_half(name="free")
    Z, P, rep = poisson_decomposition(build_fock(ctx, 4), 4)
    assert rep.passed and Z.shape[1] == 2 and P.shape[1] == 0


def test_poisson_decomposition_d1():
    Z, P, rep = poisson_decomposition(build_fock(load_example("poisson"), 5), 5)
    assert rep.passed and Z.shape[1] == 0 and P.shape[1] == 1


def test_poisson_decomposition_split():
    ctx = half_half(lambda_map=[[1, 0], [0, 0]], name="lambda-on-e1")
    Z, P, rep = poisson_decomposition(build_fock(ctx, 5), 5)
    assert rep.passed and rep.dims == {"Z": 1, "P": 1}
    assert la.max_abs(ctx.prod(Z[:, 0], ctx.basis(0))) == 0


def test_poisson_decomposition_needs_gamma_zero():
    with pytest.raises(InvalidAlgebra):
        poisson_decomposition(build_fock(scalar_context(1, 0), 3))


def test_central_eta_split():
    ctx = load_example("bozejko", {"eta": ["0", "1"], "lam": ["1", "2"]})
    Nb, Np, rep = central_eta_decomposition(build_fock(ctx, 4), 4)
    assert rep.passed and rep.dims["N"] == 1 and rep.dims["Nperp"] == 1
    assert la.max_abs(ctx.prod(ctx.gamma_of(ctx.unit), Nb[:, 0])) == 0


def test_central_eta_invertible():
    ctx = load_example("bozejko", {"eta": ["1/2", "3"], "lam": ["1", "2"]})
    _, _, rep = central_eta_decomposition(build_fock(ctx, 4), 4)
    assert rep.passed and rep.dims["N"] == 0


def test_central_eta_rejects_non_multiplicative_gamma():
    with pytest.raises(InvalidAlgebra):
        central_eta_decomposition(build_fock(load_example("ma", {"C": [[0, 1], [1, 0]]}), 3), 3)


def test_conjugated_identity_is_bozejko():
    base = half_half()
    c = conjugated_lambda(base, [[1, 0], [0, 1]], [1, 2], [F(1, 2), 2])
    b = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "2"], "phi": ["1/2", "1/2"]})
    assert la.max_abs(c.lam - b.lam) == 0 and la.max_abs(c.gamma - b.gamma) == 0


def test_conjugated_rotation():
    base = half_half()
    # eta = 0: all trace conditions hold for a phi-unitary *-linear V
    c0 = conjugated_lambda(base, ROT, [1, 2], [0, 0])
    assert check_trace_conditions(build_fock(c0, 4), 4).conditions_hold
    # eta = unit: V is not multiplicative and the extra condition fails
    c1 = conjugated_lambda(base, ROT, [1, 2], [1, 1])
    rep = check_trace_conditions(build_fock(c1, 4), 4)
    assert rep.extra > 0.5 and not rep.conditions_hold


def test_conjugated_rejects_non_unitary():
    with pytest.raises(InvalidAlgebra):
        conjugated_lambda(half_half(), [[2, 0], [0, 1]], [1, 1], [0, 0])


def test_w_map_base_cases():
    ctx = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "-1"]})
    fc = build_fock(ctx, 3)
    ident = interacting_w_map(fc, fc.vacuum())
    assert (ident - wick_poly(fc, [])).max_abs() == 0
    u = ctx.basis(0) + ctx.basis(1)
    assert (interacting_w_map(fc, fc.tensor(u)) - x_op(fc, u)).max_abs() == 0


def test_w_map_matches_wick_poly_d1():
    fc = build_fock(load_example("bozejko", {"eta": ["1/3"], "lam": ["2"]}), 4)
    xi = fc.tensor([1], [1])
    assert (interacting_w_map(fc, xi) - wick_poly(fc, [[1], [1]])).max_abs() == 0


def test_w_map_residuals():
    ctx = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "-1"]})
    fc = build_fock(ctx, 4)
    xi = fc.tensor(ctx.basis(0), ctx.basis(1), ctx.unit)
    assert w_map_residuals(fc, xi) == (0, 0)
