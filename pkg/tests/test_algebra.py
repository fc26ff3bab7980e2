import json
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nnfock import _linalg as la
from nnfock.algebra import (InvalidAlgebra, check_cp_level, commutative_algebra, eq23_residuals,
                            from_dict, gamma_plus_t_phi, load_example, load_spec, make_context,
                            random_context, scalar_context, to_dict, transform_basis,
                            validate_algebra)
from nnfock.fock import build_fock, moment

rats = st.fractions(min_value=-2, max_value=2, max_denominator=6)


def test_scalar_context_validates():
    assert validate_algebra(scalar_context(F(1, 2), F(-3))).passed


def test_ma_example_validates():
    assert validate_algebra(load_example("ma", {"C": [[0, 0], [0, 0]]})).passed


def test_zero_phi_fails_faithfulness():
    mul, star, unit, _ = commutative_algebra([1], True)
    ctx = make_context(mul, star, unit, la.exact_array([0]))
    rep = validate_algebra(ctx)
    assert not rep.passed
    assert [c.name for c in rep.failures()] == ["phi faithful (Gram positive definite)"]


def test_lambda_adjointness_violation_detected():
    ctx = load_example("ma", {"C": [[0, 0], [0, 0]], "B": [[[1, 0], [2, 0]], [[0, 1], [1, 3]]]},
                       validate=False)
    names = {c.name for c in validate_algebra(ctx).failures()}
    assert "Lambda adjointness (phi part)" in names


@given(t=st.fractions(min_value=-1, max_value=3, max_denominator=8))
@settings(max_examples=25, deadline=None)
def test_cp_scalar_gamma_plus_phi(t):
    ctx = scalar_context(t, 0)
    assert check_cp_level(ctx, gamma_plus_t_phi(ctx, 1), 2).passed


def test_cp_scalar_half_phi_fails():
    ctx = scalar_context(F(-4, 5), 0)
    rep = check_cp_level(ctx, gamma_plus_t_phi(ctx, F(1, 2)), 1)
    assert not rep.passed and rep.min_eigenvalue < 0


def test_cp_ma_levels():
    ctx = load_example("ma", {"C": [["-1", "1/2"], ["3", "-1"]]})
    for n in (1, 2, 3):
        assert check_cp_level(ctx, ctx.total_pair_tensor, n).passed


@pytest.mark.parametrize("seed", range(4))
def test_cp_monotone_in_level(seed):
    rng = np.random.default_rng(seed)
    ctx = random_context(rng, 2, kind="left")
    for t in (F(-1), F(0), F(1, 2)):
        T = gamma_plus_t_phi(ctx, t)
        levels = [check_cp_level(ctx, T, n).passed for n in (1, 2, 3)]
        assert levels == sorted(levels, reverse=True)


def test_bozejko_d1_is_scalar():
    b = load_example("bozejko", {"eta": ["1/3"], "lam": ["2"]})
    s = scalar_context(F(1, 3), 2)
    fb, fs = build_fock(b, 6), build_fock(s, 6)
    assert [moment(fb, [[1]] * n) for n in range(7)] == [moment(fs, [[1]] * n) for n in range(7)]


def test_poisson_d1_is_sc01():
    p, s = build_fock(load_example("poisson"), 6), build_fock(scalar_context(0, 1), 6)
    assert [moment(p, [[1]] * n) for n in range(7)] == [moment(s, [[1]] * n) for n in range(7)]


def test_lenczewski_constant_kernel_matches_scalar_gamma():
    t = F(1, 3)
    lz = load_example("lenczewski_discrete", {"w": [[t] * 4] * 4})
    sg = load_example("scalar_gamma", {"psi": [t / 4] * 4})  # psi = t phi
    fl, fs = build_fock(lz, 6), build_fock(sg, 6)
    assert [moment(fl, [lz.unit] * n) for n in range(7)] == [moment(fs, [sg.unit] * n) for n in range(7)]


@pytest.mark.parametrize("name,params", [
    ("bozejko", {"eta": ["-1"], "lam": ["0"]}),
    ("lenczewski_discrete", {"w": [["-2", "0"], ["0", "0"]]}),
    ("nope", {}),
])
def test_invalid_examples_rejected(name, params):
    with pytest.raises(InvalidAlgebra):
        load_example(name, params)


@pytest.mark.parametrize("seed", range(3))
def test_random_contexts_satisfy_hypotheses(seed):
    rng = np.random.default_rng(seed)
    for kind in ("left", "general"):
        ctx = random_context(rng, 1 + seed, kind=kind)
        assert validate_algebra(ctx).passed
        phi_d, gam_d = eq23_residuals(ctx)
        assert all(la.max_abs(x) == 0 for x in phi_d + gam_d)


@given(st.lists(rats, min_size=2, max_size=2))
@settings(max_examples=30, deadline=None)
def test_star_involutive(coefs):
    ctx = load_example("bozejko", {"eta": ["1/2", "1"], "lam": ["0", "1"]})
    A = la.exact_array([[1, 1], [0, 1]])
    ctx = transform_basis(ctx, A)
    x = ctx.coerce(coefs)
    assert la.max_abs(ctx.star_of(ctx.star_of(x)) - x) == 0


def test_basis_change_preserves_moments():
    ctx = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "0"]})
    A = la.exact_array([[1, 2], [-1, 1]])
    ct = transform_basis(ctx, A)
    f, g = build_fock(ctx, 4), build_fock(ct, 4)
    # f_j = sum_k A[j, k] e_k
    for w in ([0, 1, 1, 0], [1, 1, 1]):
        old = [A[j] for j in w]
        assert moment(f, old) == moment(g, [ct.basis(j) for j in w])


def test_json_round_trip(tmp_path):
    ctx = load_example("ma", {"C": [["1/2", "0"], ["0", "1/3"]]})
    spec = to_dict(ctx)
    path = tmp_path / "spec.json"
    path.write_text(json.dumps(spec))
    back = load_spec(path)
    assert la.max_abs(back.gamma - ctx.gamma) == 0 and la.max_abs(back.lam - ctx.lam) == 0
    assert validate_algebra(back).passed
    fl = from_dict(spec, mode="float")
    assert not fl.exact
