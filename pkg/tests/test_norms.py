import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nnfock.algebra import load_example, random_context, scalar_context
from nnfock.fock import OperatorMatrix, a_plus, a_zero, build_fock, x_op
from nnfock.norms import (alpha, alpha_closed, convergence_radius, deformed_norm, diagonal_bound,
                          matricial_gf_bound, r_prime_growth, r_sequence, sequences_report,
                          undeformed_bound, verify_estimates, wick_norm_bounds, y_bound_reports)
from nnfock.partitions import catalan

TOL = 1e-9


def test_identity_norm():
    fc = build_fock(random_context(np.random.default_rng(0), 2, kind="left"), 3)
    assert abs(deformed_norm(fc, OperatorMatrix.identity(3, 2)) - 1) < TOL


@given(t=st.fractions(min_value=-1, max_value=3, max_denominator=5))
@settings(max_examples=10, deadline=None)
def test_scalar_creation_norm(t):
    fc = build_fock(scalar_context(t, 0), 4)
    # ||a+(1) e_n|| / ||e_n|| = sqrt(1+t) on levels >= 1, and 1 on the vacuum
    expect = max(1.0, math.sqrt(1 + t))
    assert abs(deformed_norm(fc, a_plus(fc, [1])) - expect) < 1e-8
    assert abs(deformed_norm(fc, a_plus(fc, [1]), 3, 1) - math.sqrt(1 + t)) < 1e-8


@given(lam=st.fractions(min_value=-3, max_value=3, max_denominator=5))
@settings(max_examples=10, deadline=None)
def test_scalar_preservation_norm(lam):
    fc = build_fock(scalar_context(F(1, 2), lam), 4)
    assert abs(deformed_norm(fc, a_zero(fc, [1]), 4) - abs(lam)) < 1e-8


@pytest.mark.parametrize("seed", range(5))
def test_undeformed_bound(seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(5, 5))
    K = A @ A.T + np.eye(5)
    rep = undeformed_bound(K, rng.normal(size=(5, 5)))
    assert rep.ok()


def test_estimates_on_scalar():
    reps = verify_estimates(build_fock(scalar_context(F(1, 2), F(-2, 3)), 4))
    assert all(r.ok() for r in reps)
    a0 = [r for r in reps if r.name.startswith("||a0")][0]
    assert abs(a0.slack) < 1e-8


def test_literal_creation_bound_needs_levels_above_vacuum():
    # gamma = -phi/2: ||a+(1)|| = 1 from the vacuum exceeds sqrt(1/2)
    reps = {r.name: r for r in verify_estimates(build_fock(scalar_context(F(-1, 2), 0), 4))}
    assert not reps["||a+(b)|| <= sqrt||(gamma+phi)[b*b]||"].ok()
    assert reps["||a+(b)|| on levels >= 1 <= sqrt||(gamma+phi)[b*b]||"].ok()
    assert reps["||a+(b)|| <= max(sqrt phi[b*b], sqrt||(gamma+phi)[b*b]||)"].ok()
    assert reps["| ||a-(b*)|| - ||a+(b)|| | = 0"].ok()


@pytest.mark.parametrize("seed", range(3))
def test_estimates_random_left(seed):
    ctx = random_context(np.random.default_rng(seed), 2, kind="left")
    for r in verify_estimates(build_fock(ctx, 4)):
        if r.name != "||a+(b)|| <= sqrt||(gamma+phi)[b*b]||":
            assert r.ok(), r


def test_estimates_lenczewski():
    ctx = load_example("lenczewski_discrete", {"w": [["1/2", "1/4"], ["1/4", "1"]]})
    reps = verify_estimates(build_fock(ctx, 4))
    assert all(r.ok() for r in reps if "sqrt||gamma+phi||" in r.name or "Lambda" in r.name)


def test_diagonal_bound_single_diagonal():
    fc = build_fock(scalar_context(F(1, 3), 1), 4)
    X = x_op(fc, [1])
    rep = diagonal_bound(fc, {(0, 1): X, (1, 2): 2 * X}, 3)
    assert rep.ok() and abs(rep.bound - 2 * deformed_norm(fc, X)) < 1e-8
    assert abs(rep.computed - rep.bound) < 1e-8


def test_y_bounds():
    ctx = random_context(np.random.default_rng(1), 2, kind="left")
    reps = y_bound_reports(build_fock(ctx, 4), [ctx.unit, ctx.basis(0), ctx.basis(1)])
    assert all(r.ok() for r in reps)


@pytest.mark.parametrize("t,lam", [(F(1, 2), F(1)), (F(2), F(-1, 3))])
def test_wick_norm_bounds_scalar(t, lam):
    fc = build_fock(scalar_context(t, lam), 6)
    for n in range(1, 5):
        assert wick_norm_bounds(fc, [[1]] * n, corrected=True).ok()


def test_wick_norm_bounds_need_left_multiplier():
    ctx = random_context(np.random.default_rng(2), 2, kind="general")
    with pytest.raises(ValueError):
        wick_norm_bounds(build_fock(ctx, 3), [ctx.unit])


def test_sequences():
    assert [alpha(j) for j in range(7)] == [0, 1, 2, 5, 12, 29, 70]
    assert all(abs(alpha(j) - alpha_closed(j)) < 1e-6 for j in range(20))
    assert r_sequence(8) == [1, 1, 2, 4, 9, 21, 51, 127, 323]
    rep = sequences_report(14)
    assert rep["r_le_catalan"] and rep["catalan"][:5] == [catalan(k) for k in range(5)]


@given(t=st.fractions(min_value=0, max_value=3, max_denominator=5),
       lam=st.fractions(min_value=-3, max_value=3, max_denominator=5))
@settings(max_examples=15, deadline=None)
def test_scalar_radius(t, lam):
    ctx = scalar_context(t, lam)
    K = max(math.sqrt(t), abs(lam))
    rad = convergence_radius(ctx)
    assert rad == math.inf if K == 0 else abs(rad - 1 / (4 * K)) < 1e-12


def test_radius_infinite_when_kprime_zero():
    assert convergence_radius(scalar_context(0, 0)) == math.inf


@pytest.mark.parametrize("ctx", [scalar_context(F(1, 2), F(1, 3)),
                                 random_context(np.random.default_rng(3), 2, kind="left"),
                                 random_context(np.random.default_rng(4), 2, kind="general")],
                         ids=["scalar", "left", "general"])
def test_r_prime_growth(ctx):
    reps = r_prime_growth(ctx, ctx.unit + ctx.basis(0), 10)
    assert all(r.ok() for r in reps)


def test_matricial_gf_bound():
    ctx = random_context(np.random.default_rng(5), 2, kind="left")
    fc = build_fock(ctx, 4)
    assert matricial_gf_bound(fc, [ctx.basis(0), ctx.basis(1), ctx.unit, ctx.basis(0)]).ok()


def test_submultiplicative():
    ctx = random_context(np.random.default_rng(6), 2, kind="left")
    fc = build_fock(ctx.with_mode(False), 4)
    A, B = x_op(fc, ctx.with_mode(False).basis(0)), x_op(fc, ctx.with_mode(False).basis(1))
    # on levels <= 2 the product stays inside the truncation
    assert deformed_norm(fc, A @ B, 2) <= deformed_norm(fc, A, 3) * deformed_norm(fc, B, 2) + TOL


def test_norm_monotone_in_truncation():
    ctx = random_context(np.random.default_rng(7), 2, kind="left").with_mode(False)
    vals = [deformed_norm(build_fock(ctx, N), x_op(build_fock(ctx, N), ctx.basis(0))) for N in (2, 3, 4)]
    assert vals == sorted(vals)
