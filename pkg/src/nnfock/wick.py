"""Wick polynomials, the resolvent identity for W(u) and the matricial
(ell^2-indexed) generating function on finite families.

An element c of B acts on a Wick polynomial by multiplying its first letter:
c o W(v_1, ..., v_n) := W(c v_1, v_2, ..., v_n).  This is the meaning of
b(u) W_n(u) and of the B-valued matrices A0 and Gamma below.  On W(empty) = I
the action c o I is kept as a formal B-valued term.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _linalg as la
from .cumulants import free_cumulant
from .fock import Gen, OperatorMatrix, WordTooLong, apply_gen, add_vectors, moment, x_op
from .partitions import enumerate_nc


def _key(ctx, us):
    return tuple(tuple(ctx.coerce(u)) for u in us)


def _guard(fc, n):
    if n > fc.N - 1:
        raise WordTooLong(f"Wick polynomial of degree {n} needs N >= {n + 1}")


# ======================================================================
# Wick polynomials
# ======================================================================

def wick_expansion(ctx, us):
    """W(u_1..u_n) as a list of (coefficient, (b_1, ..., b_k)) meaning
    coefficient * X(b_1) ... X(b_k), unfolded from the defining recursion."""
    us = _key(ctx, us)
    return list(_expansion(ctx, us))


def _expansion(ctx, us):
    one = la.eye(1, ctx.exact)[0, 0]
    n = len(us)
    if n == 0:
        return ((one, ()),)
    if n == 1:
        return ((one, us),)
    u0, u1 = np.array(us[0]), np.array(us[1])
    out = [(c, (us[0],) + w) for c, w in _expansion(ctx, us[1:])]
    lam = tuple(ctx.lam_of(u0, u1))
    out += [(-c, w) for c, w in _expansion(ctx, (lam,) + us[2:])]
    if n == 2:
        out.append((-ctx.phi_of(ctx.prod(u0, u1)), ()))
    else:
        g = ctx.pair_total(u0, u1)
        first = tuple(ctx.prod(g, np.array(us[2])))
        out += [(-c, w) for c, w in _expansion(ctx, (first,) + us[3:])]
    return tuple(out)


def wick_poly(fc, us):
    """W(u_1..u_n) as an OperatorMatrix, by the recursion
    W(u_0, ..) = X(u_0) W(u_1, ..) - W(Lambda(u_0 (x) u_1), u_2, ..) - W((gamma+phi)[u_0 u_1] u_2, ..)."""
    us = _key(fc.ctx, us)
    _guard(fc, len(us))
    cache = {}
    xs = {}

    def X(b):
        if b not in xs:
            xs[b] = x_op(fc, np.array(b))
        return xs[b]

    def W(word):
        if word in cache:
            return cache[word]
        n = len(word)
        if n == 0:
            out = OperatorMatrix.identity(fc.N, fc.d, fc.exact, fc.cplx)
        elif n == 1:
            out = X(word[0])
        else:
            ctx = fc.ctx
            u0, u1 = np.array(word[0]), np.array(word[1])
            out = X(word[0]) @ W(word[1:]) - W((tuple(ctx.lam_of(u0, u1)),) + word[2:])
            if n == 2:
                out = out - ctx.phi_of(ctx.prod(u0, u1)) * W(())
            else:
                g = ctx.pair_total(u0, u1)
                out = out - W((tuple(ctx.prod(g, np.array(word[2]))),) + word[3:])
        cache[word] = out
        return out

    return W(us)


def wick_from_expansion(fc, us):
    """Realize the X-polynomial of :func:`wick_expansion` as a sum of products of X's."""
    _guard(fc, len(us))
    total = OperatorMatrix(fc.N, fc.d, {}, fc.exact, fc.cplx)
    ident = OperatorMatrix.identity(fc.N, fc.d, fc.exact, fc.cplx)
    for c, word in wick_expansion(fc.ctx, us):
        term = ident
        for b in word:
            term = term @ x_op(fc, np.array(b))
        total = total + c * term
    return total


def wick_vacuum_vector(fc, us):
    """W(u_1..u_n) Omega from the recursion applied to vectors only."""
    ctx = fc.ctx
    us = _key(ctx, us)

    @lru_cache(maxsize=None)
    def vec(word):
        n = len(word)
        if n == 0:
            return tuple(fc.vacuum())
        if n == 1:
            return tuple(apply_gen(fc, Gen("x", np.array(word[0])), fc.vacuum()))
        u0, u1 = np.array(word[0]), np.array(word[1])
        out = apply_gen(fc, Gen("x", u0), list(vec(word[1:])))
        out = add_vectors(out, list(vec((tuple(ctx.lam_of(u0, u1)),) + word[2:])), 1, -1)
        if n == 2:
            out = add_vectors(out, fc.vacuum(), 1, -ctx.phi_of(ctx.prod(u0, u1)))
        else:
            g = ctx.pair_total(u0, u1)
            out = add_vectors(out, list(vec((tuple(ctx.prod(g, np.array(word[2]))),) + word[3:])),
                              1, -1)
        return tuple(out)

    return list(vec(us))


def vector_residual(fc, x, y):
    """max |x - y| over all levels of two Fock vectors."""
    res = 0.0
    for a, b in zip(x, y):
        if a is None and b is None:
            continue
        diff = a if b is None else (-b if a is None else a - b)
        res = max(res, la.max_abs(diff))
    return res


def vacuum_property_residual(fc, us):
    """max | W(u_1..u_n) Omega - u_1 (x) ... (x) u_n | with W built as an operator."""
    W = wick_poly(fc, us)
    return vector_residual(fc, W.apply(fc.vacuum()), fc.tensor(*us))


def pseudo_orthogonality_residual(fc, words):
    """max |<W(a) Omega, W(b) Omega>| over pairs of words of different lengths,
    with W(a) Omega obtained by applying the Wick operator to the vacuum."""
    vecs = [(len(w), wick_poly(fc, w).apply(fc.vacuum())) for w in words]
    res = 0.0
    for i, (na, x) in enumerate(vecs):
        for nb, y in vecs[i + 1:]:
            if na != nb:
                res = max(res, float(abs(fc.inner(x, y))))
    return res


# ======================================================================
# Resolvent identity
# ======================================================================

def b_element(ctx, u):
    """b(u) = 1 + Lambda(u (x) u) u^{-1} + (gamma+phi)[u^2]."""
    u = ctx.coerce(u)
    if ctx.lambda_kind == "left-multiplier":
        lam_part = ctx.lambda_map @ u
    else:
        lam_part = ctx.prod(ctx.lam_of(u, u), ctx.inverse_of(u))
    return ctx.unit + lam_part + ctx.pair_total(u, u)


@dataclass
class ResolventReport:
    residuals: list
    boundary: float
    b: object = None

    @property
    def max_residual(self):
        return max(self.residuals, default=0.0)

    def to_dict(self):
        return {"residuals": self.residuals, "boundary": self.boundary,
                "b": [str(x) for x in np.atleast_1d(self.b)]}


def resolvent_residual(fc, u, max_degree):
    """Degree-wise residuals of (b(u) - X(u)) W(u) = b(u) - phi[u^2], W(u) = sum_n W_n(u).

    Grading counts letters u.  The element c = Lambda(u (x) u) u^{-1} raises the
    degree by one and g = (gamma+phi)[u^2] by two, acting as c o W_n.  Degree k
    of the identity reads W_k + c o W_{k-1} + g o W_{k-2} - X W_{k-1} = 0 for
    k >= 3, W_2 + c o W_1 + phi[u^2] I - X W_1 = 0 and W_1 - X = 0.  The terms
    of degree max_degree + 1 are the truncation tail, returned separately.
    """
    ctx = fc.ctx
    u = ctx.coerce(u)
    _guard(fc, max_degree)
    if ctx.lambda_kind == "left-multiplier":
        c = ctx.lambda_map @ u
    else:
        c = ctx.prod(ctx.lam_of(u, u), ctx.inverse_of(u))
    g = ctx.pair_total(u, u)
    X = x_op(fc, u)
    W = [wick_poly(fc, [u] * n) for n in range(max_degree + 1)]

    def act(elem, n):
        if n == 0:
            raise ValueError
        return wick_poly(fc, [ctx.prod(elem, u)] + [u] * (n - 1))

    res = [0.0]  # degree 0: 1 - 1
    for k in range(1, max_degree + 1):
        if k == 1:
            r = W[1] - X
        elif k == 2:
            r = W[2] + act(c, 1) + ctx.phi_of(ctx.prod(u, u)) * W[0] - X @ W[1]
        else:
            r = W[k] + act(c, k - 1) + act(g, k - 2) - X @ W[k - 1]
        res.append(r.max_abs())
    # tail: what the truncated series leaves at degree max_degree + 1
    k = max_degree + 1
    if k >= 3:
        tail = act(c, k - 1) + act(g, k - 2) - X @ W[k - 1]
    elif k == 2:
        tail = act(c, 1) + ctx.phi_of(ctx.prod(u, u)) * W[0] - X @ W[1]
    else:
        tail = None
    boundary = tail.max_abs() if tail is not None else float("nan")
    return ResolventReport(res, boundary, b_element(ctx, u))


# ======================================================================
# Matricial generating function
# ======================================================================

@dataclass
class MatricialSystem:
    """Finite section of the band matrices for the family u_1..u_m.

    Indices run 0..m; X has entries X(u_i) at (i, i+1); W has W(u_i..u_{k-1})
    at (i, k); Phi and Gamma sit on the second superdiagonal and A0 on the
    first.  B-valued entries are kept as coefficient vectors, W entries as
    words (tuples of letter indices) with their operators.
    """

    us: list
    max_degree: int
    X: dict = field(default_factory=dict)
    W: dict = field(default_factory=dict)
    Phi: dict = field(default_factory=dict)
    Gamma: dict = field(default_factory=dict)
    A0: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    excluded: list = field(default_factory=list)

    @property
    def m(self):
        return len(self.us)

    @property
    def size(self):
        return self.m + 1

    @property
    def max_residual(self):
        return max(self.residuals.values(), default=0.0)

    def w_diagonal(self, n):
        """The matrix W_n with the single diagonal (i, i+n)."""
        return {(i, k): w for (i, k), w in self.W.items() if k - i == n}

    def scalar_pattern(self, name):
        """Band pattern of a matrix as a set of (i, k) positions."""
        return set(getattr(self, name))


class _Entry:
    """Operator part plus a formal B-valued multiple of the identity."""

    def __init__(self, op=None, formal=None):
        self.op, self.formal = op, formal

    def __add__(self, other):
        op = self.op if other.op is None else (other.op if self.op is None else self.op + other.op)
        if self.formal is None:
            formal = other.formal
        elif other.formal is None:
            formal = self.formal
        else:
            formal = self.formal + other.formal
        return _Entry(op, formal)

    def __neg__(self):
        return _Entry(None if self.op is None else -self.op,
                      None if self.formal is None else -self.formal)

    def size(self):
        a = 0.0 if self.op is None else self.op.max_abs()
        b = 0.0 if self.formal is None else la.max_abs(self.formal)
        return max(a, b)


def matricial_system(fc, us, max_degree=None):
    """Assemble the finite section and the entrywise residual of (B - X) W - (B - Phi).

    An entry (i, k) is checked when k - i <= max_degree and every term of its
    recursion stays inside the family (A0 at (i, i+1) needs u_{i+1}).  Other
    entries are listed in ``excluded``.
    """
    ctx = fc.ctx
    us = [ctx.coerce(u) for u in us]
    m = len(us)
    if m < 2:
        raise ValueError("family size must be >= 2")
    max_degree = min(m, fc.N - 1) if max_degree is None else max_degree
    _guard(fc, max_degree)
    S = MatricialSystem(us, max_degree)
    ident = OperatorMatrix.identity(fc.N, fc.d, fc.exact, fc.cplx)
    for i in range(m):
        S.X[(i, i + 1)] = x_op(fc, us[i])
    for i in range(m):
        if i + 1 < m:
            S.Phi[(i, i + 2)] = ctx.phi_of(ctx.prod(us[i], us[i + 1]))
            S.Gamma[(i, i + 2)] = ctx.pair_gamma(us[i], us[i + 1])
        # in left-multiplier mode A0 = Lambda(u_i) needs no right neighbour
        if ctx.lambda_kind == "left-multiplier":
            S.A0[(i, i + 1)] = ctx.lambda_map @ us[i]
        elif i + 1 < m:
            S.A0[(i, i + 1)] = ctx.prod(ctx.lam_of(us[i], us[i + 1]), ctx.inverse_of(us[i + 1]))
    for i in range(m + 1):
        S.W[(i, i)] = ((), ident)
        for k in range(i + 1, min(m, i + max_degree) + 1):
            word = tuple(range(i, k))
            S.W[(i, k)] = (word, wick_poly(fc, [us[j] for j in word]))

    def c_on(elem, j, k):
        """elem o W_{j,k}."""
        if j == k:
            return _Entry(None, elem)
        word = S.W[(j, k)][0]
        first = ctx.prod(elem, us[word[0]])
        return _Entry(wick_poly(fc, [first] + [us[x] for x in word[1:]]))

    for i in range(m + 1):
        for k in range(i, m + 1):
            if k - i > max_degree:
                continue
            if i < m and (i, i + 1) not in S.A0 and k > i:
                S.excluded.append((i, k))
                continue
            # (B - X) W
            lhs = _Entry(S.W[(i, k)][1])
            if (i, i + 1) in S.A0 and i + 1 <= k:
                lhs = lhs + c_on(S.A0[(i, i + 1)], i + 1, k)
            if (i, i + 2) in S.Gamma and i + 2 <= k:
                lhs = lhs + c_on(S.Gamma[(i, i + 2)], i + 2, k)
                lhs = lhs + _Entry(S.Phi[(i, i + 2)] * S.W[(i + 2, k)][1])
            if (i, i + 1) in S.X and i + 1 <= k:
                lhs = lhs + _Entry(-(S.X[(i, i + 1)] @ S.W[(i + 1, k)][1]))
            # B - Phi
            rhs = _Entry(ident) if k == i else _Entry()
            if k == i + 1 and (i, k) in S.A0:
                rhs = rhs + _Entry(None, S.A0[(i, k)])
            if k == i + 2 and (i, k) in S.Gamma:
                rhs = rhs + _Entry(None, S.Gamma[(i, k)])
            S.residuals[(i, k)] = (lhs + (-rhs)).size()
    return S


def is_unit_upper_triangular(S):
    """B - X has identity diagonal and strictly upper entries, so it is invertible
    on a finite section (I plus a nilpotent)."""
    return all(k > i for (i, k) in list(S.X) + list(S.A0) + list(S.Gamma) + list(S.Phi))


# ======================================================================
# Matricial cumulants
# ======================================================================

def matricial_cumulants(fc, us, n):
    """(m+1) x (m+1) matrix with R[X(u_i), ..., X(u_{i+n-1})] at (i, i+n)."""
    ctx = fc.ctx
    us = [ctx.coerce(u) for u in us]
    m = len(us)
    if n > min(m, fc.N):
        raise WordTooLong(f"n={n} needs n <= min(m={m}, N={fc.N})")
    out = la.zeros((m + 1, m + 1), fc.exact, fc.cplx)
    for i in range(m - n + 1):
        out[i, i + n] = free_cumulant(fc, us[i:i + n])
    return out


def d_valued_cumulant(fc, us, n):
    """Matrix-valued free cumulant R_n[X, ..., X] by Mobius inversion over NC(n)
    of the matrix moments Psi[X d_1 X ... d_{n-1} X], with nested blocks
    evaluated through their D-valued arguments."""
    ctx = fc.ctx
    us = [ctx.coerce(u) for u in us]
    m = len(us)
    size = m + 1
    exact = fc.exact
    eye = la.eye(size, exact)
    mom_cache = {}

    def mom(idx):
        if idx not in mom_cache:
            mom_cache[idx] = moment(fc, [us[a] for a in idx])
        return mom_cache[idx]

    def psi(ds):
        """Psi[X d_1 X ... d_{k-1} X]: entry (p, q) sums over index paths."""
        k = len(ds) + 1
        out = la.zeros((size, size), exact, fc.cplx)
        for a1 in range(m):
            paths = [((a1,), la.eye(1, exact)[0, 0])]
            for j in range(k - 1):
                new = []
                for path, w in paths:
                    a = path[-1]
                    for b in range(m):
                        c = ds[j][a + 1, b]
                        if c != 0:
                            new.append((path + (b,), w * c))
                paths = new
            for path, w in paths:
                out[a1, path[-1] + 1] += w * mom(path)
        return out

    def key(ds):
        return tuple(tuple(x for x in d.flat) for d in ds)

    cum_cache = {}

    def cum(ds):
        kd = key(ds)
        if kd in cum_cache:
            return cum_cache[kd]
        k = len(ds) + 1
        total = psi(ds)
        for p in enumerate_nc(k):
            if len(p.blocks) == 1:
                continue
            total = total - value(p.blocks, 1, k, ds)
        cum_cache[kd] = total
        return total

    def value(blocks, lo, hi, ds):
        """D-valued product over the blocks of a partition of [lo, hi] (1-based),
        outer blocks in order, separated by the d between them."""
        sub = [b for b in blocks if lo <= b[0] and b[-1] <= hi]
        outer = [b for b in sub if not any(w[0] < b[0] and b[-1] < w[-1] for w in sub)]
        outer.sort()
        res = None
        for idx, b in enumerate(outer):
            args = []
            for j in range(len(b) - 1):
                gap_lo, gap_hi = b[j] + 1, b[j + 1] - 1
                if gap_lo > gap_hi:
                    args.append(ds[b[j] - 1])
                else:
                    g = value(blocks, gap_lo, gap_hi, ds)
                    args.append(ds[b[j] - 1] @ g @ ds[b[j + 1] - 2])
            r = cum(tuple(args))
            res = r if res is None else res @ ds[outer[idx - 1][-1] - 1] @ r
        return eye if res is None else res

    return cum(tuple(eye for _ in range(n - 1)))
