"""Acceptance criteria 1-10.

Each criterion is a function returning (passed, detail); the pytest wrappers
assert on it and the conftest prints one PASS/FAIL line per criterion.  Run
this file directly (python tests/test_acceptance.py) for the lines alone.
"""
import itertools
import math
from fractions import Fraction as F
from functools import lru_cache

import numpy as np
import pytest

from nnfock import _linalg as la
from nnfock import appendix_c as ac
from nnfock.algebra import (InvalidAlgebra, check_cp_level, commutative_algebra, gamma_plus_t_phi, load_example,
                            make_context, random_context, scalar_context)
from nnfock.cumulants import (boolean_cumulant, boolean_cumulant_table, cumulant_gf_residual,
                              free_cumulant, free_cumulant_table, moment_partition_table,
                              moment_table, r_prime_check, r_prime_series, r_prime_series_recursive)
from nnfock.fock import build_fock, moment
from nnfock.norms import (alpha, alpha_closed, norm_reports, r_sequence, sequences_report)
from nnfock.partitions import catalan, mobius_boolean_cumulants, mobius_free_cumulants
from nnfock.trace import (central_eta_decomposition, check_trace_conditions, conjugated_lambda,
                          poisson_decomposition)
from nnfock.wick import (matricial_cumulants, matricial_system, pseudo_orthogonality_residual,
                         resolvent_residual, vacuum_property_residual, wick_poly)

LINES = {}

TITLES = {
    1: "moment oracle equivalence",
    2: "cumulant oracle equivalence",
    3: "R' consistency and generating functions",
    4: "Wick suite",
    5: "matricial suite",
    6: "norm suite (literal inequalities)",
    7: "traciality",
    8: "structure theorems",
    9: "C-construction",
    10: "non-degeneracy",
}


def record(k, passed, detail):
    LINES[k] = f"criterion {k:2d} {'PASS' if passed else 'FAIL'}  {TITLES[k]}: {detail}"
    return passed, detail


def _eq(a, b):
    return la.max_abs(np.asarray(a) - np.asarray(b)) == 0


# ======================================================================
# Shared sweeps
# ======================================================================

@lru_cache(maxsize=None)
def main_sweep():
    """10 random contexts, d = 1..3, alternating left-multiplier / general Lambda."""
    rng = np.random.default_rng(2024)
    out = []
    for i in range(10):
        ctx = random_context(rng, 1 + i % 3, kind="left" if i % 2 == 0 else "general")
        out.append(build_fock(ctx, 6))
    return tuple(out)


@lru_cache(maxsize=None)
def moment_tables():
    return tuple({n: moment_table(fc, n) for n in range(1, 7)} for fc in main_sweep())


@lru_cache(maxsize=None)
def norm_sweep():
    """20 random left-multiplier contexts at N = 5 with every norm report."""
    rng = np.random.default_rng(5)
    out = []
    for i in range(20):
        fc = build_fock(random_context(rng, 1 + i % 3, kind="left"), 5)
        out.append(norm_reports(fc))
    return tuple(out)


def _is_literal(name):
    return "levels >= 1" not in name and "max(" not in name and "(reported)" not in name


# ======================================================================
# Criteria
# ======================================================================

def criterion_1():
    rng = np.random.default_rng(1)
    bad, words = [], 0
    for i, (fc, M) in enumerate(zip(main_sweep(), moment_tables())):
        e = [fc.ctx.basis(j) for j in range(fc.d)]
        for n in range(1, 7):
            if not _eq(M[n], moment_partition_table(fc, n)):
                bad.append((i, n))
            words += fc.d ** n
            # the batched table against the word-by-word operator product
            for _ in range(2):
                w = tuple(int(x) for x in rng.integers(0, fc.d, n))
                if M[n][w] != moment(fc, [e[j] for j in w]):
                    bad.append((i, w))
    return record(1, not bad, f"{words} words, mismatches {bad}")


def criterion_2():
    bad, words = [], 0
    for i, (fc, M) in enumerate(zip(main_sweep(), moment_tables())):
        mom = (lambda w, M=M: M[len(w)][w])
        fcache, bcache = {}, {}
        for n in range(1, 7):
            Rt, Bt = free_cumulant_table(fc, n), boolean_cumulant_table(fc, n)
            for w in itertools.product(range(fc.d), repeat=n):
                words += 1
                if Rt[w] != mobius_free_cumulants(mom, w, fcache):
                    bad.append(("free", i, w))
                if Bt[w] != mobius_boolean_cumulants(mom, w, bcache):
                    bad.append(("boolean", i, w))
    wit = []
    for t, lam in [(F(1, 3), F(2, 5)), (F(-1, 2), F(3)), (F(2), F(-1, 4))]:
        fc = build_fock(scalar_context(t, lam), 6)
        u = [[1]]
        mom = (lambda w, fc=fc: moment(fc, [[1]] * len(w)))
        expect = {("R", 4): lam ** 2 + t, ("B", 4): lam ** 2 + 1 + t,
                  ("R", 5): lam ** 3 + 3 * lam * t, ("B", 5): lam ** 3 + 3 * lam * (1 + t)}
        for (kind, n), val in expect.items():
            part = (free_cumulant if kind == "R" else boolean_cumulant)(fc, u * n)
            mob = (mobius_free_cumulants if kind == "R" else mobius_boolean_cumulants)(mom, (0,) * n)
            if part != val or mob != val:
                wit.append((t, lam, kind, n, part, mob))
    return record(2, not bad and not wit,
                  f"{words} words x 2 kinds, mismatches {bad}; scalar witnesses off {wit}")


def criterion_3():
    rng = np.random.default_rng(3)
    ctxs = [random_context(rng, 2, kind=k) for k in ("left", "general", "left")]
    ctxs.append(scalar_context(F(1, 3), F(2, 5)))
    boz = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "-1/3"], "phi": ["1/4", "3/4"]})
    ctxs.append(boz)
    worst_check, worst_rec, worst_gf, boz_ok, multi_runs = 0.0, 0.0, 0.0, False, 0
    for ctx in ctxs:
        fc = build_fock(ctx, 6)
        d = ctx.dim
        for k in range(0, 5):
            for _ in range(2):
                w = [ctx.basis(int(j)) for j in rng.integers(0, d, k + 2)]
                worst_check = max(worst_check, r_prime_check(fc, w))
        u = ctx.unit + ctx.basis(d - 1)
        D, Rr = r_prime_series(ctx, u, 8), r_prime_series_recursive(ctx, u, 8)
        worst_rec = max(worst_rec, max(la.max_abs(D[n] - Rr[n]) for n in range(9)))
        # the 3-variable check sums the definition over all 3^n words, so it runs
        # on one random context and the bozejko one
        fam = [ctx.basis(0), ctx.basis(d - 1), ctx.unit] if ctx is ctxs[1] or ctx is boz else None
        rep = cumulant_gf_residual(ctx, u, 8, family=fam)
        multi_runs += fam is not None and rep.multivariate is not None
        worst_gf = max(worst_gf, rep.max_residual)
        if ctx is boz:
            boz_ok = rep.bozejko is not None and len(rep.bozejko) > 0
    passed = worst_check == 0 and worst_rec == 0 and worst_gf == 0 and boz_ok and multi_runs == 2
    return record(3, passed, f"R'-definition residual {worst_check}, recursion vs definition "
                             f"{worst_rec}, GF (main, R'', 3-variable, bozejko) {worst_gf}")


def criterion_4():
    rng = np.random.default_rng(4)
    ctxs = [random_context(rng, 2, kind="left"), random_context(rng, 2, kind="general"),
            scalar_context(F(1, 3), F(2, 5)), load_example("poisson")]
    vac, res, float_res, orth = 0.0, 0.0, 0.0, 0.0
    for ctx in ctxs:
        fc = build_fock(ctx, 6)
        e = [ctx.basis(j) for j in range(ctx.dim)] + [ctx.unit]
        words = []
        for n in range(1, 6):
            w = [e[int(j)] for j in rng.integers(0, len(e), n)]
            words.append(w)
            vac = max(vac, vacuum_property_residual(fc, w))
        orth = max(orth, pseudo_orthogonality_residual(fc, words))
        # exact for dim B = 1; for dim B = 2 the degree-6 operators are checked in
        # float mode at 1e-9 relative to the size of W_6(u)
        u = _invertible(ctx, rng)
        if ctx.dim == 1:
            res = max(res, max(resolvent_residual(build_fock(ctx, 7), u, 6).residuals))
        else:
            fcf = build_fock(ctx.with_mode(False), 7)
            uf = la.float_array(u)
            scale = max(1.0, wick_poly(fcf, [uf] * 6).max_abs())
            float_res = max(float_res, max(resolvent_residual(fcf, uf, 6).residuals) / scale)
    return record(4, vac == 0 and res == 0 and float_res <= 1e-9 and orth == 0,
                  f"vacuum property {vac}, resolvent interior {res} (exact), {float_res:.2g} "
                  f"(float, relative), pseudo-orthogonality {orth}")


def _invertible(ctx, rng):
    """Random rational element; invertible, since a general Lambda enters through u^{-1}."""
    while True:
        u = ctx.coerce([F(int(x), 2) for x in rng.integers(-3, 4, ctx.dim)])
        try:
            ctx.inverse_of(u)
            return u
        except InvalidAlgebra:
            continue


def criterion_5():
    rng = np.random.default_rng(5)
    ctxs = [scalar_context(F(1, 3), F(2, 5)), random_context(rng, 2, kind="left"),
            random_context(rng, 2, kind="general")]
    worst, mism = 0.0, []
    for ctx in ctxs:
        fc = build_fock(ctx, 5)
        us = [_invertible(ctx, rng) for _ in range(4)]
        S = matricial_system(fc, us, 4)
        worst = max(worst, S.max_residual)
        for n in range(1, 5):
            R = matricial_cumulants(fc, us, n)
            for i in range(4 - n + 1):
                if R[i, i + n] != free_cumulant(fc, us[i:i + n]):
                    mism.append((ctx.name, n, i))
    return record(5, worst == 0 and not mism,
                  f"(B - X)W - (B - Phi) interior residual {worst}, cumulant mismatches {mism}")


def criterion_6():
    fails = []
    for i, reps in enumerate(norm_sweep()):
        for r in reps:
            if _is_literal(r.name) and not r.ok():
                fails.append((i, r.name, round(r.computed, 4), round(r.bound, 4)))
    seq = sequences_report(12)
    seq_ok = (seq["alpha"][:6] == [0, 1, 2, 5, 12, 29] and seq["r"][:6] == [1, 1, 2, 4, 9, 21]
              and seq["alpha_closed_max_err"] < 1e-6 and seq["r_le_catalan"])
    detail = f"{len(fails)} literal reports below slack -1e-9"
    if fails:
        detail += f" (first: context {fails[0][0]}, {fails[0][1]}, {fails[0][2]} > {fails[0][3]})"
    return record(6, not fails and seq_ok, detail + f"; sequences ok {seq_ok}")


def _bozejko_catalog():
    return [load_example("bozejko", p) for p in
            ({"eta": ["1/2"], "lam": ["1"]}, {"eta": ["1/3", "2"], "lam": ["1", "-1/2"]},
             {"eta": ["0", "1"], "lam": ["0", "2"], "phi": ["1/4", "3/4"]})]


def criterion_7():
    boz_ok = all(check_trace_conditions(build_fock(c, 6), 6).conditions_hold
                 and check_trace_conditions(build_fock(c, 6), 6).cyclic(6) for c in _bozejko_catalog())
    mul, star, unit, phi = commutative_algebra([F(1, 3), F(2, 3)], True)
    bad = make_context(mul, star, unit, phi, lambda_map=[[1, 2], [0, -1]], name="lambda-u-v")
    rb = check_trace_conditions(build_fock(bad, 5), 5)
    counter_ok = rb.star > 0 and not rb.cyclic(5)
    rng = np.random.default_rng(7)
    sweep = [random_context(rng, 2, kind=k) for k in ("left", "general") for _ in range(3)]
    sweep += _bozejko_catalog() + [scalar_context(F(1, 3), F(1, 2)), load_example("poisson", {"d": 2}),
                                   bad]
    mism = []
    for c in sweep:
        r = check_trace_conditions(build_fock(c, 4), 4)
        if r.conditions_hold != r.commute:
            mism.append(c.name)
    return record(7, boz_ok and counter_ok and not mism,
                  f"bozejko tracial {boz_ok}; counterexample star residual {rb.star}, "
                  f"cyclic to 5 {rb.cyclic(5)}; conditions vs commutation mismatches {mism}")


def criterion_8():
    mul, star, unit, phi = commutative_algebra([F(1, 2), F(1, 2)], True)
    base = make_context(mul, star, unit, phi)
    ctxs = [load_example("poisson"), load_example("poisson", {"d": 2, "phi": ["1/4", "3/4"]}),
            conjugated_lambda(base, [[F(3, 5), F(-4, 5)], [F(4, 5), F(3, 5)]], [1, 2], [0, 0]),
            make_context(mul, star, unit, phi, lambda_map=[[1, 0], [0, 0]], name="lambda-on-e1")]
    failed = []
    for c in ctxs:
        _, _, rep = poisson_decomposition(build_fock(c, 6), 6)
        if not rep.passed:
            failed.append(c.name)
    m4 = moment(build_fock(load_example("poisson"), 4), [[1]] * 4)
    central = [load_example("bozejko", {"eta": ["0", "1"], "lam": ["1", "2"]}),
               load_example("bozejko", {"eta": ["1/2"], "lam": ["1"]})]
    cfail = [c.name for c in central if not central_eta_decomposition(build_fock(c, 6), 6)[2].passed]
    return record(8, not failed and m4 == 3 and not cfail,
                  f"poisson decompositions failing {failed}, free Poisson m4 = {m4}, "
                  f"central eta failing {cfail}")


@lru_cache(maxsize=None)
def construction_sweep():
    rng = np.random.default_rng(9)
    return tuple(ac.random_construction_c(rng, m=2, N=5) for _ in range(6))


def _c_elements(cc):
    return [np.array([F(1), F(1, 2)]), np.array([F(-1, 3), F(1)])]


def criterion_9():
    gram, adj, rp, wick, norm_fail = math.inf, 0.0, 0.0, 0.0, []
    for i, cc in enumerate(construction_sweep()):
        gram = min(gram, min(la.min_eigenvalue(la.float_array(cc.gram(n))) for n in range(6)))
        f, g = _c_elements(cc)
        for x in (f, g):
            adj = max(adj, max(ac.adjoint_residuals_c(cc, x).values()))
            rp = max(rp, ac.r_prime_consistency_c(cc, x, 3), max(ac.gf_residual_c(cc, x, 3)))
        for n in range(1, 6):
            wick = max(wick, ac.wick_vacuum_residual_c(cc, [(f, g)[k % 2] for k in range(n)]))
        for r in ac.norm_bounds_c(cc):
            if _is_literal(r.name) and not r.ok():
                norm_fail.append((i, r.name, round(r.computed, 4), round(r.bound, 4)))
    bridge = 0
    mul, star, unit, phi = commutative_algebra([F(1, 4), F(4, 9)], True)
    gz = [load_example("poisson", {"d": 2, "phi": ["1/4", "1/9"]}),
          make_context(mul, star, unit, phi, lambda_map=[[F(1, 2), -1], [F(3, 4), 2]], name="gamma0")]
    czero = True
    for ctx in gz:
        cc, Q = ac.from_algebra_context(ctx, N=6)
        czero = czero and la.max_abs(cc.C) == 0
        els = [ctx.basis(0), ctx.basis(1) - ctx.basis(0)]
        words = [w for k in range(1, 7) for w in itertools.product(range(2), repeat=k)]
        bridge = max(bridge, ac.bridge_moment_residual(ctx, cc, Q, words, els))
    passed = gram > 0 and adj == 0 and rp == 0 and wick == 0 and not norm_fail and czero and bridge == 0
    detail = (f"min Gram eigenvalue {gram:.3g}, adjoint {adj}, R' {rp}, Wick {wick}, "
              f"literal norm failures {len(norm_fail)}, C = 0 {czero}, gamma = 0 path {bridge}")
    return record(9, passed, detail)


def criterion_10():
    bad = []
    for i, fc in enumerate(main_sweep()):
        ctx = fc.ctx
        if not check_cp_level(ctx, gamma_plus_t_phi(ctx, F(9, 10)), ctx.dim):
            continue
        for n in range(6):
            ev = np.linalg.eigvalsh(la.float_array(fc.gram(n)))
            if not ev[0] > 1e-9 * ev[-1]:
                bad.append((i, n, ev[0]))
    rank = la.exact_rank(build_fock(scalar_context(-1, F(1, 2)), 3).gram(2))
    return record(10, not bad and rank == 0, f"non-positive Gram levels {bad}, SC(-1, 1/2) level-2 rank {rank}")


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10}


# ======================================================================
# pytest wrappers
# ======================================================================

@pytest.mark.parametrize("k", [1, 2, 3, 4, 5, 7, 8, 9, 10])
def test_criterion(k):
    passed, detail = CRITERIA[k]()
    assert passed, detail


@pytest.mark.xfail(strict=True, reason="the literal generator and Wick-norm estimates fail on the "
                                       "vacuum level when gamma + phi has norm below phi(1)")
def test_criterion_6_literal():
    passed, detail = criterion_6()
    assert passed, detail


def test_criterion_6_corrected_forms():
    """What does hold on the same sweep: every level >= 1 and max(...) form, and
    each literal failure is repaired by its corrected form."""
    for reps in norm_sweep():
        by_key = {(r.name, repr(r.tags)): r for r in reps}
        for r in reps:
            if not _is_literal(r.name) and "(reported)" not in r.name:
                assert r.ok(), (r.name, r.computed, r.bound)
        for r in reps:
            if _is_literal(r.name) and not r.ok():
                assert r.name.startswith("||a+(b)||") or r.name.startswith("||W(u_1..u_1)||"), r.name
                if r.name.startswith("||a+(b)||"):
                    fixed = "||a+(b)|| <= max(sqrt phi[b*b], sqrt||(gamma+phi)[b*b]||)"
                else:
                    fixed = r.name.replace("||g+p||", "max(||g+p||, ||phi||)", 1)
                assert by_key[(fixed, repr(r.tags))].ok(), fixed
    seq = sequences_report(12)
    assert [alpha(j) for j in range(6)] == [0, 1, 2, 5, 12, 29]
    assert all(abs(alpha(j) - alpha_closed(j)) < 1e-6 for j in range(13))
    assert r_sequence(5) == [1, 1, 2, 4, 9, 21]
    assert all(r_sequence(12)[n] <= catalan(n) for n in range(13)) and seq["r_le_catalan"]


if __name__ == "__main__":
    for k, fn in CRITERIA.items():
        fn()
        print(LINES[k])
