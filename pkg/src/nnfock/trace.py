"""Traciality of the vacuum state: the involution S, right operators X_r, the
four algebraic trace conditions, commutation of X with X_r, cyclicity of the
vacuum state, and the structure of tracial algebras (Poisson part, central eta).
"""

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import _linalg as la
from .algebra import InvalidAlgebra, eq23_residuals, make_context
from .cumulants import free_cumulant
from .fock import FockContext, OperatorMatrix, a_minus, a_zero, x_op


def _ctx(obj):
    return obj.ctx if isinstance(obj, FockContext) else obj


def _fock(fc, N):
    return fc if fc.N >= N else FockContext(fc.ctx, N, fc.kernel_tol)


def _zero(ctx, x):
    return la.is_zero(x) if ctx.exact else la.max_abs(x) <= ctx.tol


def _res(diffs):
    return max((la.max_abs(np.asarray(x)) for x in diffs), default=0.0)


# ======================================================================
# S and X_r
# ======================================================================

def s_involution(fc, max_level=None):
    """Per-level matrices S_n with S(x) = S_n conj(x) on coefficient vectors,
    S(u_1 (x) ... (x) u_n) = u_n* (x) ... (x) u_1*."""
    ctx = fc.ctx
    d = fc.d
    st = ctx.star.T
    out = [la.eye(1, fc.exact)]
    top = fc.N if max_level is None else min(max_level, fc.N)
    for n in range(1, top + 1):
        M = st
        for _ in range(n - 1):
            M = np.kron(M, st) if not fc.exact else _kron(M, st)
        # reverse the tensor factors of the input word
        perm = np.arange(d ** n).reshape((d,) * n).transpose(tuple(range(n - 1, -1, -1))).ravel()
        out.append(M[:, perm])
    return out


def _kron(a, b):
    r1, c1 = a.shape
    r2, c2 = b.shape
    out = np.empty((r1 * r2, c1 * c2), dtype=object)
    for i in range(r1):
        for j in range(c1):
            out[i * r2:(i + 1) * r2, j * c2:(j + 1) * c2] = a[i, j] * b
    return out


def apply_s(fc, vec, S=None):
    S = s_involution(fc) if S is None else S
    return [None if v is None else la.matmul(S[n], la.conj(v)) for n, v in enumerate(vec)]


def s_isometry_residual(fc, max_level=None):
    """max |<S x, S y> - <y, x>| over basis vectors, levels 0..max_level."""
    S = s_involution(fc)
    top = fc.N if max_level is None else max_level
    res = 0.0
    for n in range(top + 1):
        G = fc.gram(n)
        # <S e_i, S e_j> = (S_n e_j)^H G S_n e_i ; <e_j, e_i> = G[j, i]
        lhs = la.matmul(la.dagger(S[n]), la.matmul(G, S[n]))
        res = max(res, la.max_abs(lhs - G.T))
    return res


def x_r(fc, b, S=None, max_source=None):
    """X_r(b) = S X(S(b)) S as an OperatorMatrix (linear in b); with
    ``max_source`` only blocks out of levels <= max_source are built."""
    ctx = fc.ctx
    top = fc.N if max_source is None else max_source
    S = s_involution(fc, top + 1) if S is None else S
    X = x_op(fc, ctx.star_of(ctx.coerce(b)))
    blocks = {}
    for (t, s), blk in X.blocks.items():
        if s <= top:
            blocks[(t, s)] = la.matmul(S[t], la.matmul(la.conj(blk), la.conj(S[s])))
    return OperatorMatrix(fc.N, fc.d, blocks, fc.exact, fc.cplx)


# ======================================================================
# The trace conditions
# ======================================================================

@dataclass
class TraceReport:
    star: float
    associative: float
    extra: float
    gamma_self_adjoint: float
    a0_symmetric: float
    phi_tracial: float
    commutator: float
    commutator_level3: float = None
    cyclicity: dict = field(default_factory=dict)
    tol: float = la.DEFAULT_TOL

    def _ok(self, x):
        return x is not None and x <= self.tol

    @property
    def conditions_hold(self):
        return all(self._ok(x) for x in (self.star, self.associative, self.extra,
                                          self.gamma_self_adjoint))

    @property
    def commute(self):
        return self._ok(self.commutator)

    def cyclic(self, max_len=None):
        return all(self._ok(v) for k, v in self.cyclicity.items() if max_len is None or k <= max_len)

    @property
    def cyclicity_max(self):
        return max(self.cyclicity.values(), default=0.0)

    def to_dict(self):
        return {"star": self.star, "associative": self.associative, "extra": self.extra,
                "gamma_self_adjoint": self.gamma_self_adjoint, "a0_symmetric": self.a0_symmetric,
                "phi_tracial": self.phi_tracial, "commutator": self.commutator,
                "commutator_level3": self.commutator_level3,
                "cyclicity": {str(k): v for k, v in self.cyclicity.items()},
                "conditions_hold": self.conditions_hold, "commute": self.commute,
                "cyclic": self.cyclic()}


def condition_residuals(ctx):
    """Residuals of the four algebraic trace conditions over basis tuples."""
    d = ctx.dim
    e = [ctx.basis(i) for i in range(d)]
    lam, prod, g, st = ctx.lam_of, ctx.prod, ctx.gamma_of, ctx.star_of
    star = [st(lam(st(v), st(u))) - lam(u, v) for u in e for v in e]
    assoc, extra = [], []
    for u, y, v in itertools.product(e, repeat=3):
        assoc.append(prod(u, g(prod(y, v))) - prod(g(prod(u, y)), v)
                     - lam(u, lam(y, v)) + lam(lam(u, y), v))
    for u, y, z, v in itertools.product(e, repeat=4):
        gzv = g(prod(z, v))
        guy = g(prod(u, y))
        extra.append(lam(u, prod(y, gzv)) - prod(lam(u, y), gzv)
                     - lam(prod(guy, z), v) + prod(guy, lam(z, v)))
    gsa = [ctx.phi_of(prod(g(u), v)) - ctx.phi_of(prod(u, g(v))) for u in e for v in e]
    return {"star": _res(star), "associative": _res(assoc), "extra": _res(extra),
            "gamma_self_adjoint": _res(gsa)}


def phi_trace_residual(ctx):
    e = [ctx.basis(i) for i in range(ctx.dim)]
    return _res([ctx.phi_of(ctx.prod(u, v)) - ctx.phi_of(ctx.prod(v, u)) for u in e for v in e])


def commutator_residual(fc, levels=(0, 1, 2)):
    """max over basis u, v and source levels of |G_t [X(u), X_r(v)]_{t,s}|."""
    need = max(levels) + 2
    if fc.N < need:
        raise ValueError(f"commutators on level {max(levels)} need N >= {need}")
    ctx = fc.ctx
    top = max(levels)
    S = s_involution(fc, top + 2)
    xs = [x_op(fc, ctx.basis(i)) for i in range(fc.d)]
    xr = [x_r(fc, ctx.basis(i), S, top + 1) for i in range(fc.d)]
    res = 0.0
    for X in xs:
        Xd = X.restrict_domain(top)
        for Y in xr:
            C = X @ Y.restrict_domain(top) - Y @ Xd
            for (t, s), blk in C.blocks.items():
                if s in levels:
                    res = max(res, la.max_abs(la.matmul(fc.gram(t), blk)))
    return res


def word_moments(fc, n):
    """tau(X(e_{w_1}) ... X(e_{w_n})) for all words, as an n-way tensor.

    Prefix covectors Omega* X(w_1) ... X(w_k) and suffix vectors X(w_{k+1}) ... Omega
    are built once per length, so every moment of length n is one matrix product.
    No adjointness is used, so this also holds for contexts violating the
    standing hypotheses.
    """
    d = fc.d
    k, r = n // 2, n - n // 2
    fcm = FockContext(fc.ctx, max(r, 1), fc.kernel_tol)
    X = [x_op(fcm, fc.ctx.basis(i)).dense() for i in range(d)]
    dim = X[0].shape[0]
    vac = la.zeros((dim, 1), fc.exact, fc.cplx)
    vac[0, 0] = la.eye(1, fc.exact)[0, 0] if fc.exact else 1.0
    V = vac
    for _ in range(r):
        V = np.hstack([la.matmul(X[i], V) for i in range(d)])
    L = vac.T
    for _ in range(k):
        parts = [la.matmul(L, X[i]) for i in range(d)]
        L = np.stack(parts, axis=1).reshape(-1, dim)
    return la.matmul(L, V).reshape((d,) * n)


def cyclicity_residuals(fc, max_word=6):
    """max |tau(x y) - tau(y x)| over monomials in the X(e_i), by total length."""
    out = {}
    for n in range(2, max_word + 1):
        T = word_moments(fc, n)
        res = 0.0
        for k in range(1, n):
            rot = T.transpose(tuple(range(k, n)) + tuple(range(k)))
            res = max(res, la.max_abs(T - rot))
        out[n] = res
    return out


def check_trace_conditions(fc, max_word=6, level3=None):
    """Evaluate the trace conditions, the X / X_r commutators on levels 0..2
    (plus a level-3 spot check, by default when dim B <= 3) and cyclicity of
    the vacuum state."""
    ctx = fc.ctx
    if ctx.gamma_pair is not None:
        raise InvalidAlgebra("trace conditions need a linear gamma")
    if level3 is None:
        level3 = ctx.dim <= 3
    cond = condition_residuals(ctx)
    phi_d, gam_d = eq23_residuals(ctx)
    fc_c = _fock(fc, 5 if level3 else 4)
    comm = commutator_residual(fc_c, (0, 1, 2))
    comm3 = commutator_residual(fc_c, (3,)) if level3 and fc_c.N >= 5 else None
    return TraceReport(a0_symmetric=_res(phi_d + gam_d), phi_tracial=phi_trace_residual(ctx),
                       commutator=comm, commutator_level3=comm3,
                       cyclicity=cyclicity_residuals(fc, max_word),
                       tol=0.0 if ctx.exact else ctx.tol, **cond)


# ======================================================================
# Structure of tracial algebras
# ======================================================================

def _self_adjoint_basis(ctx, cols):
    """Self-adjoint spanning set (as columns) of a *-closed subspace."""
    if cols.shape[1] == 0:
        return cols
    vecs = []
    for j in range(cols.shape[1]):
        v = cols[:, j]
        vs = ctx.star_of(v)
        vecs.append(v + vs)
        if ctx.is_complex:
            vecs.append(1j * (v - vs))
        elif not la.is_zero(v - vs):
            raise InvalidAlgebra("real subspace is not spanned by self-adjoint elements")
    return la.column_space(np.column_stack(vecs))


def _orth_residual(ctx, A, B):
    if A.shape[1] == 0 or B.shape[1] == 0:
        return 0.0
    return la.max_abs(la.matmul(la.dagger(B), la.matmul(ctx.gns_gram, A)))


def _cumulant_words(basis, max_n):
    k = len(basis)
    for n in range(2, max_n + 1):
        for w in itertools.product(range(k), repeat=n):
            yield n, w


def _lam_chain(ctx, fs):
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = ctx.lam_of(f, out)
    return out


@dataclass
class DecompositionReport:
    residuals: dict
    dims: dict
    tol: float = 0.0

    @property
    def passed(self):
        return all(v <= self.tol for v in self.residuals.values())

    def to_dict(self):
        return {"residuals": self.residuals, "dims": self.dims, "passed": self.passed}


def _require_zero_gamma(ctx):
    if not _zero(ctx, ctx.gamma_pair_tensor):
        raise InvalidAlgebra("poisson decomposition needs gamma = 0")


def poisson_decomposition(fc, max_n=6, subspace=None):
    """For gamma = 0: Z = {f : g.f = 0 for all g}, P = span{f.g} with f.g = Lambda(f (x) g).

    Returns (Z, P, report); Z and P are column bases.  The report carries the
    orthogonality, star-algebra and cumulant-formula residuals; ``subspace``
    restricts the construction to an ideal (columns), as used for N = ker(eta).
    """
    ctx = fc.ctx
    if subspace is None:
        _require_zero_gamma(ctx)
    d = ctx.dim
    Hs = la.eye(d, ctx.exact) if subspace is None else subspace
    # f in Hs with Lambda(g (x) f) = 0 for all g
    rows = [la.matmul(ctx.a0_matrix(ctx.basis(i)), Hs) for i in range(d)]
    coef = la.nullspace(np.vstack(rows)) if Hs.shape[1] else Hs
    Z = la.matmul(Hs, coef) if coef.shape[1] else la.zeros((d, 0), ctx.exact)
    prods = [la.matmul(ctx.a0_matrix(Hs[:, i]), Hs) for i in range(Hs.shape[1])]
    P = la.column_space(np.hstack(prods)) if prods else la.zeros((d, 0), ctx.exact)
    if P.shape[1] == 0:
        P = la.zeros((d, 0), ctx.exact)
    e = [Hs[:, i] for i in range(Hs.shape[1])]
    st, ip = ctx.star_of, ctx.inner
    res = {
        "Z orthogonal to P": _orth_residual(ctx, Z, P),
        "dim Z + dim P = dim H": float(abs(Z.shape[1] + P.shape[1] - Hs.shape[1])),
        "(f.g)* = g*.f*": _res([st(lam_f(ctx, f, g)) - lam_f(ctx, st(g), st(f)) for f in e for g in e]),
        "associativity of the product": _res([lam_f(ctx, lam_f(ctx, f, g), h) - lam_f(ctx, f, lam_f(ctx, g, h))
                                              for f in e for g in e for h in e]),
        "<f.g, h> = <g, f*.h>": _res([ip(lam_f(ctx, f, g), h) - ip(g, lam_f(ctx, st(f), h))
                                      for f in e for g in e for h in e]),
    }
    fcm = _fock(fc, max_n)
    Zs = _self_adjoint_basis(ctx, Z)
    Ps = _self_adjoint_basis(ctx, P)
    fam = [(Zs[:, i], "Z") for i in range(Zs.shape[1])] + [(Ps[:, i], "P") for i in range(Ps.shape[1])]
    formula, semi = [], []
    for n, w in _cumulant_words(fam, max_n):
        fs = [fam[i][0] for i in w]
        R = free_cumulant(fcm, fs)
        formula.append(R - ip(fs[0], _lam_chain(ctx, fs[1:])))
        if any(fam[i][1] == "Z" for i in w):
            both_z = n == 2 and all(fam[i][1] == "Z" for i in w)
            semi.append(R - (ip(fs[0], fs[1]) if both_z else 0))
    res["cumulants R = <f_1, f_2...f_n>"] = _res(formula)
    res["semicircular on Z, free from P"] = _res(semi)
    res["free when f.g = 0"] = _freeness_residual(ctx, fcm, Ps, max_n)
    tol = 0.0 if ctx.exact else ctx.tol
    return Z, P, DecompositionReport(res, {"Z": Z.shape[1], "P": P.shape[1]}, tol)


def lam_f(ctx, f, g):
    return ctx.lam_of(f, g)


def _mixed_cumulants(fcm, f, g, max_n):
    out = []
    for n in range(2, max_n + 1):
        for w in itertools.product((0, 1), repeat=n):
            if 0 < sum(w) < n:
                out.append(free_cumulant(fcm, [g if x else f for x in w]))
    return out


def _freeness_residual(ctx, fcm, Ps, max_n):
    out = []
    k = Ps.shape[1]
    for i in range(k):
        for j in range(i + 1, k):
            f, g = Ps[:, i], Ps[:, j]
            if _zero(ctx, ctx.lam_of(f, g)):
                out.extend(_mixed_cumulants(fcm, f, g, max_n))
    return _res(out)


def central_eta_decomposition(fc, max_n=6):
    """For gamma[f] = eta f with eta central: N = {f : eta f = 0} and its complement.

    Returns (N, Nperp, report).  On N the Poisson analysis applies; on N^perp
    Lambda(f (x) g) = lam f g with lam = Lambda(1 (x) 1), and X(f), X(g) are
    free for f in N^perp, g in N.
    """
    ctx = fc.ctx
    d = ctx.dim
    eta = ctx.gamma_of(ctx.unit)
    res = {}
    res["gamma = eta ."] = la.max_abs(ctx.gamma - ctx.left_mult(eta))
    res["eta central"] = _res([ctx.prod(eta, ctx.basis(i)) - ctx.prod(ctx.basis(i), eta) for i in range(d)])
    tol = 0.0 if ctx.exact else ctx.tol
    if res["gamma = eta ."] > tol or res["eta central"] > tol:
        raise InvalidAlgebra("central eta decomposition needs gamma = multiplication by a central eta")
    Nb = la.nullspace(ctx.left_mult(eta))
    if Nb.shape[1]:
        # orthogonal complement of N for <x, y> = y^H P x
        Np = la.nullspace(la.matmul(la.dagger(Nb), ctx.gns_gram))
    else:
        Np = la.eye(d, ctx.exact)
    if Np.shape[1] == 0:
        Np = la.zeros((d, 0), ctx.exact)
    lam1 = ctx.lam_of(ctx.unit, ctx.unit)
    ep = [Np[:, i] for i in range(Np.shape[1])]
    res["Lambda(f (x) g) = lam f g on N^perp"] = _res(
        [ctx.lam_of(f, g) - ctx.prod(lam1, ctx.prod(f, g)) for f in ep for g in ep])
    res["lam central on N^perp"] = _res([ctx.prod(lam1, f) - ctx.prod(f, lam1) for f in ep])
    res["lam self-adjoint on N^perp"] = _res([ctx.prod(lam1 - ctx.star_of(lam1), f) for f in ep])
    fcm = _fock(fc, max_n)
    Ns = _self_adjoint_basis(ctx, Nb) if Nb.shape[1] else Nb
    Nps = _self_adjoint_basis(ctx, Np) if Np.shape[1] else Np
    mixed = []
    for i in range(Nps.shape[1]):
        for j in range(Ns.shape[1]):
            mixed.extend(_mixed_cumulants(fcm, Nps[:, i], Ns[:, j], max_n))
    res["free: N^perp vs N"] = _res(mixed)
    dims = {"N": Nb.shape[1], "Nperp": Np.shape[1]}
    if Nb.shape[1]:
        Z, P, sub = poisson_decomposition(fc, max_n=min(max_n, 4), subspace=Nb)
        for k, v in sub.residuals.items():
            res["N: " + k] = v
        dims.update({"Z": Z.shape[1], "P": P.shape[1]})
    return Nb, Np, DecompositionReport(res, dims, tol)


# ======================================================================
# Conjugated products and the interacting W map
# ======================================================================

def conjugated_lambda(fc, V, lam_el, eta_el, name="conjugated"):
    """Context with gamma[f] = eta f and Lambda(f (x) g) = V^{-1}[(V f) lam (V g)].

    V must be *-linear and unitary for <f, g> = phi[g* f]; eta and lam central,
    lam self-adjoint.
    """
    ctx = _ctx(fc)
    V = ctx.coerce(V)
    lam_el, eta_el = ctx.coerce(lam_el), ctx.coerce(eta_el)
    P = ctx.gns_gram
    tol = 0.0 if ctx.exact else ctx.tol
    unit_res = la.max_abs(la.matmul(la.dagger(V), la.matmul(P, V)) - P)
    star_res = la.max_abs(la.matmul(V, ctx.star.T) - la.matmul(ctx.star.T, la.conj(V)))
    if unit_res > tol or star_res > tol:
        raise InvalidAlgebra("V is not a *-linear phi-unitary map")
    d = ctx.dim
    for el, what in ((lam_el, "lam"), (eta_el, "eta")):
        if _res([ctx.prod(el, ctx.basis(i)) - ctx.prod(ctx.basis(i), el) for i in range(d)]) > tol:
            raise InvalidAlgebra(f"{what} is not central")
    if la.max_abs(ctx.star_of(lam_el) - lam_el) > tol:
        raise InvalidAlgebra("lam is not self-adjoint")
    Vinv = la.inverse(V)
    L = la.zeros((d, d, d), ctx.exact, ctx.is_complex)
    for i in range(d):
        for j in range(d):
            vi, vj = V[:, i], V[:, j]
            L[i, j, :] = la.matmul(Vinv, ctx.prod(ctx.prod(vi, lam_el), vj))
    return make_context(ctx.mul, ctx.star, ctx.unit, ctx.phi, gamma=ctx.left_mult(eta_el), lam=L,
                        name=name, exact=ctx.exact)


def interacting_w_map(fc, xi):
    """W(xi) with W(Omega) = I and W(a+(b) eta) = X(b) W(eta) - W(a0(b) eta) - W(a-(b) eta).

    ``xi`` is a Fock vector (per-level list).  Basis words are expanded as
    e_i (x) rest = a+(e_i) rest, and W is extended linearly.
    """
    top = max((n for n, v in enumerate(xi) if v is not None), default=0)
    if top > fc.N - 1:
        raise ValueError("W(xi) needs the level of xi to be at most N-1")
    ctx = fc.ctx
    d = fc.d
    memo = {}
    xs = {i: x_op(fc, ctx.basis(i)) for i in range(d)}
    a0s = {i: a_zero(fc, ctx.basis(i)) for i in range(d)}
    ams = {i: a_minus(fc, ctx.basis(i)) for i in range(d)}
    zero = OperatorMatrix(fc.N, d, {}, fc.exact, fc.cplx)

    def W_vec(vec_level, vec):
        out = zero
        for idx in range(len(vec)):
            c = vec[idx]
            if c != 0:
                word = tuple(int(x) for x in np.unravel_index(idx, (d,) * vec_level)) if vec_level else ()
                out = out + W_word(word) * c
        return out

    def W_word(word):
        if word in memo:
            return memo[word]
        if not word:
            out = OperatorMatrix.identity(fc.N, d, fc.exact, fc.cplx)
        else:
            i, rest = word[0], word[1:]
            n = len(rest)
            rv = la.zeros(d ** n, fc.exact)
            rv[int(np.ravel_multi_index(rest, (d,) * n)) if n else 0] = la.eye(1, fc.exact)[0, 0]
            out = xs[i] @ W_word(rest)
            if n >= 1:
                out = out - W_vec(n, la.matmul(a0s[i].block(n, n), rv))
                out = out - W_vec(n - 1, la.matmul(ams[i].block(n - 1, n), rv))
        memo[word] = out
        return out

    total = zero
    for n, v in enumerate(xi):
        if v is not None:
            total = total + W_vec(n, v)
    return total


def w_map_residuals(fc, xi):
    """(|W(xi) Omega - xi|, |<W(xi)* Omega - S(xi), zeta>|) over basis zeta."""
    W = interacting_w_map(fc, xi)
    v = W.apply(fc.vacuum())
    vac = max(la.max_abs(la.matmul(fc.gram(n), (v[n] if v[n] is not None else 0)
                                   - (xi[n] if n < len(xi) and xi[n] is not None else 0)))
              if (v[n] is not None or (n < len(xi) and xi[n] is not None)) else 0.0
              for n in range(fc.N + 1))
    S = s_involution(fc)
    sx = apply_s(fc, list(xi) + [None] * (fc.N + 1 - len(xi)), S)
    top = max(n for n, x in enumerate(xi) if x is not None)
    adj = 0.0
    for s in range(top + 1):
        row = W.block(0, s)[0, :]
        rhs = la.matmul(fc.gram(s), sx[s]) if sx[s] is not None else la.zeros(fc.d ** s, fc.exact)
        adj = max(adj, la.max_abs(la.conj(row) - rhs))
    return vac, adj
