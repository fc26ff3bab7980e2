"""Partition-weighted formulas for moments, Boolean and free cumulants, the
operator-valued kernel R' and its generating-function identities.

Every partition weight is a word of generator descriptors applied right to
left to the vacuum, so no operator matrices are formed.  The Mobius oracles in
:mod:`nnfock.partitions` give the independent second route.
"""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import _linalg as la
from .fock import FockContext, Gen, WordTooLong, apply_ops, operator_of
from .partitions import (CLOSING, MIDDLE, OPENING, enumerate_int, enumerate_nc_ns,
                         enumerate_nc_ns_connected)


# ======================================================================
# Weight assignments
# ======================================================================

MOMENT, FREE = "moment", "free_cumulant"


@dataclass(frozen=True)
class WeightAssignment:
    """Generator kinds attached to the elements of a partition."""

    partition: object
    kind: str = MOMENT

    @property
    def kinds(self):
        out = []
        for pos, role in enumerate(self.partition.roles):
            if role == OPENING:
                if self.kind == FREE:
                    out.append("phi_tilde" if pos == 0 else "gamma_tilde")
                else:
                    out.append("minus")
            elif role == CLOSING:
                out.append("plus")
            elif role == MIDDLE:
                out.append("zero")
            else:
                raise ValueError("weights are defined only for partitions without singletons")
        return tuple(out)

    def ops(self, us):
        return [Gen(k, u) for k, u in zip(self.kinds, us)]

    def value(self, fc, us):
        """<W(pi) Omega, Omega>."""
        vec = apply_ops(fc, self.ops(us))
        return la.zeros(1, fc.exact)[0] if vec[0] is None else vec[0][0]


def _guard(fc, us):
    if len(us) > fc.N:
        raise WordTooLong(f"word of length {len(us)} exceeds truncation N={fc.N}")


def _partition_sum(fc, us, partitions, kind):
    us = [fc.ctx.coerce(u) for u in us]
    _guard(fc, us)
    total = la.zeros(1, fc.exact)[0]
    for p in partitions:
        total = total + WeightAssignment(p, kind).value(fc, us)
    return total


def moment_partition_sum(fc, us):
    """Mixed moment as a sum of W_M weights over noncrossing no-singleton partitions."""
    return _partition_sum(fc, us, enumerate_nc_ns(len(us)), MOMENT)


def boolean_cumulant(fc, us):
    """Boolean cumulant: W_M weights over connected partitions (1 and n in one block)."""
    return _partition_sum(fc, us, enumerate_nc_ns_connected(len(us)), MOMENT)


def free_cumulant(fc, us):
    """Free cumulant: W_C weights over connected partitions."""
    return _partition_sum(fc, us, enumerate_nc_ns_connected(len(us)), FREE)


def chain_value(fc, us, first="minus"):
    """<a(u_1) a0(u_2) ... a0(u_{n-1}) a+(u_n) Omega, Omega> with a = a- or a~_phi."""
    n = len(us)
    if n < 2:
        return la.zeros(1, fc.exact)[0]
    kinds = [first] + ["zero"] * (n - 2) + ["plus"]
    vec = apply_ops(fc, [Gen(k, fc.ctx.coerce(u)) for k, u in zip(kinds, us)])
    return la.zeros(1, fc.exact)[0] if vec[0] is None else vec[0][0]


def bozejko_cumulant_formula(fc, fs):
    """Sum over connected partitions of phi[eta^{|pi|-1} lam^{n-2|pi|} f_1 ... f_n].

    Requires a context whose gamma and Lambda are multiplication by central
    elements eta and lam (stored in ``params``).
    """
    ctx = fc.ctx
    if ctx.params.get("family") != "bozejko":
        raise ValueError("bozejko_cumulant_formula needs a context with central eta and lam")
    eta, lam = ctx.params["eta"], ctx.params["lam_el"]
    n = len(fs)
    prod = ctx.unit
    for f in fs:
        prod = ctx.prod(prod, ctx.coerce(f))
    total = la.zeros(1, fc.exact)[0]
    for p in enumerate_nc_ns_connected(n):
        k = len(p.blocks)
        x = prod
        for _ in range(k - 1):
            x = ctx.prod(eta, x)
        for _ in range(n - 2 * k):
            x = ctx.prod(lam, x)
        total = total + ctx.phi_of(x)
    return total


# ======================================================================
# Batched tables over all basis words
# ======================================================================

def kind_word_table(fc, kinds):
    """<A_1(e_{w_1}) ... A_n(e_{w_n}) Omega, Omega> for every basis word w, as an
    n-way tensor; A_k is the generator of kind ``kinds[k]``.

    Suffix vectors for all words are carried as matrix columns, so each step is
    one matrix product per basis letter.
    """
    n, d = len(kinds), fc.d
    if n == 0:
        return la.eye(1, fc.exact)[0, 0]
    fcm = FockContext(fc.ctx, max(n // 2 + 1, 2), fc.kernel_tol)
    cache = fc.__dict__.setdefault("_kind_ops", {})
    state = {0: la.eye(1, fc.exact).astype(complex) if fc.cplx else la.eye(1, fc.exact)}
    for pos in range(n - 1, -1, -1):
        key = (kinds[pos], fcm.N)
        if key not in cache:
            cache[key] = [operator_of(fcm, Gen(kinds[pos], fc.ctx.basis(i))) for i in range(d)]
        ops = cache[key]
        top = min(pos, fcm.N)
        cols = next(iter(state.values())).shape[1]
        new = {}
        for op in ops:
            part = {}
            for (t, s), blk in op.blocks.items():
                if t > top or s not in state:
                    continue
                y = la.matmul(blk, state[s])
                part[t] = la.add(part[t], y) if t in part else y
            for t in range(top + 1):
                blk = part.get(t)
                if blk is None:
                    blk = la.zeros((fcm.dim(t), cols), fc.exact, fc.cplx)
                new.setdefault(t, []).append(blk)
        state = {t: np.hstack(v) for t, v in new.items()}
    return state[0].reshape((d,) * n)


def moment_table(fc, n):
    """All moments of X(e_{w_1}) ... X(e_{w_n}) by the operator route."""
    return kind_word_table(fc, ["x"] * n)


def partition_table(fc, n, partitions, kind=MOMENT):
    total = None
    for p in partitions:
        T = kind_word_table(fc, WeightAssignment(p, kind).kinds)
        total = T if total is None else la.add(total, T)
    if total is None:
        return la.zeros((fc.d,) * n, fc.exact, fc.cplx)
    return total


def moment_partition_table(fc, n):
    return partition_table(fc, n, enumerate_nc_ns(n), MOMENT)


def free_cumulant_table(fc, n):
    return partition_table(fc, n, enumerate_nc_ns_connected(n), FREE)


def boolean_cumulant_table(fc, n):
    return partition_table(fc, n, enumerate_nc_ns_connected(n), MOMENT)


# ======================================================================
# The kernel R'
# ======================================================================

@dataclass
class SeriesTable:
    """Graded coefficients of a generating function, degree -> matrix or scalar."""

    coeffs: list = field(default_factory=list)

    @property
    def max_degree(self):
        return len(self.coeffs) - 1

    def __getitem__(self, n):
        return self.coeffs[n]

    def __len__(self):
        return len(self.coeffs)

    def partial_sum(self, upto=None):
        upto = self.max_degree if upto is None else upto
        total = self.coeffs[0]
        for c in self.coeffs[1:upto + 1]:
            total = total + c
        return total


def _block_weight(ctx, first, inner, last):
    """Left multiplication by gamma[first R'[inner] last]."""
    return ctx.left_mult(ctx.pair_gamma(first, inner @ last))


def r_prime(fc, us):
    """R'[u_1..u_k] as a d x d matrix, summed over interval partitions.

    Singleton blocks weigh a0(u_i); a block {i_1 < ... < i_m} with m >= 2 weighs
    left multiplication by gamma[u_{i_1} R'[interior] u_{i_m}].  Block weights
    multiply left to right in order of appearance.
    """
    ctx = fc.ctx if hasattr(fc, "ctx") else fc
    us = tuple(tuple(ctx.coerce(u)) for u in us)
    if hasattr(fc, "N") and len(us) > fc.N - 2:
        raise WordTooLong(f"R' of {len(us)} letters needs N >= {len(us) + 2}")
    return _r_prime_cached(ctx, us)


def _r_prime_cached(ctx, us, memo=None):
    """Interval-partition sum for the word ``us`` (tuple of coefficient tuples),
    memoized on subwords so nested block weights are computed once."""
    memo = {} if memo is None else memo
    eye = la.eye(ctx.dim, ctx.exact)

    def rp(word):
        if word in memo:
            return memo[word]
        if not word:
            return eye
        total = la.zeros((ctx.dim, ctx.dim), ctx.exact, ctx.is_complex)
        for p in enumerate_int(len(word)):
            term = eye
            for b in p.blocks:
                first, last = np.array(word[b[0] - 1]), np.array(word[b[-1] - 1])
                if len(b) == 1:
                    w = ctx.a0_matrix(first)
                else:
                    w = _block_weight(ctx, first, rp(word[b[0]:b[-1] - 1]), last)
                term = term @ w
            total = total + term
        memo[word] = total
        return total

    return rp(tuple(us))


def r_prime_recursive(fc, u, n):
    """R'_n[u] from R'_n = sum_i R'_i gamma[u R'_{n-i-2} u] + R'_{n-1} a0(u)."""
    return r_prime_series_recursive(fc, u, n)[n]


def r_prime_series_recursive(fc, u, n):
    ctx = fc.ctx if hasattr(fc, "ctx") else fc
    u = ctx.coerce(u)
    a0 = ctx.a0_matrix(u)
    R = [la.eye(ctx.dim, ctx.exact)]
    for k in range(1, n + 1):
        total = R[k - 1] @ a0
        for i in range(k - 1):
            total = total + R[i] @ _block_weight(ctx, u, R[k - i - 2], u)
        R.append(total)
    return SeriesTable(R)


def r_prime_series(fc, u, max_degree):
    """Coefficients R'_n[u], n <= max_degree, from the interval-partition definition."""
    ctx = fc.ctx if hasattr(fc, "ctx") else fc
    u = tuple(ctx.coerce(u))
    memo = {}
    out = []
    for n in range(max_degree + 1):
        out.append(_r_prime_cached(ctx, (u,) * n, memo))
    return SeriesTable(out)


def r_prime_check(fc, us):
    """Residual of phi[u_0 R'[u_1..u_k] u_{k+1}] - R_{k+2}[X(u_0), ..., X(u_{k+1})]."""
    ctx = fc.ctx
    us = [ctx.coerce(u) for u in us]
    lhs = ctx.phi_of(ctx.prod(us[0], r_prime(fc, us[1:-1]) @ us[-1]))
    rhs = free_cumulant(fc, us)
    return float(abs(lhs - rhs))


# ======================================================================
# Generating-function identities
# ======================================================================

def _gf_rhs(ctx, R, u, n, a0):
    """Degree-n part of I + R' L(gamma[u R' u]) + R' a0(u)."""
    total = la.eye(ctx.dim, ctx.exact) if n == 0 else R[n - 1] @ a0
    for i in range(n - 1):
        total = total + R[i] @ _block_weight(ctx, u, R[n - 2 - i], u)
    return total


def _residual(x):
    return la.max_abs(x)


def _multi_r_prime(ctx, us, max_degree):
    """Sum over all words of length n of R'[u_{j(1)}, ..., u_{j(n)}], n <= max_degree.

    Each word's R' is the interval-partition sum organized by its last block,
    memoized on subwords.
    """
    letters = range(len(us))
    a0 = [ctx.a0_matrix(u) for u in us]
    eye = la.eye(ctx.dim, ctx.exact)

    @lru_cache(maxsize=None)
    def rp(word):
        if not word:
            return eye
        n = len(word)
        total = rp(word[:-1]) @ a0[word[-1]]
        for i in range(n - 1):
            total = total + rp(word[:i]) @ bw(word[i:])
        return total

    @lru_cache(maxsize=None)
    def bw(blk):
        return _block_weight(ctx, us[blk[0]], rp(blk[1:-1]), us[blk[-1]])

    out = [eye]
    frontier = [()]
    for n in range(1, max_degree + 1):
        frontier = [w + (j,) for w in frontier for j in letters]
        total = la.zeros((ctx.dim, ctx.dim), ctx.exact, ctx.is_complex)
        for w in frontier:
            total = total + rp(w)
        out.append(total)
    rp.cache_clear()
    bw.cache_clear()
    return SeriesTable(out)


@dataclass
class GFReport:
    main: list
    r_double: list
    multivariate: list = None
    bozejko: list = None

    @property
    def max_residual(self):
        vals = list(self.main) + list(self.r_double)
        for extra in (self.multivariate, self.bozejko):
            if extra:
                vals += list(extra)
        return max(vals, default=0.0)

    def passed(self, tol=la.DEFAULT_TOL):
        return self.max_residual <= tol

    def to_dict(self):
        return {"main": self.main, "r_double": self.r_double,
                "multivariate": self.multivariate, "bozejko": self.bozejko,
                "max_residual": self.max_residual}


def cumulant_gf_residual(fc, u, max_degree, family=None):
    """Per-degree residuals of R'(u) v = v + R'(u) gamma[u R'(u) u] v + R'(u) Lambda(u (x) v).

    R' coefficients come from the interval-partition definition; the identity
    is checked as matrices (all v at once).  Also checks the R'' = u R' u form,
    the multivariate version for ``family`` (a list of elements, coefficients
    summed over all words) and, for central-eta contexts,
    R' = 1 + lam R' f + eta R' f R' f with R' read as an element of B.
    """
    if max_degree > 10:
        raise ValueError("max_degree must be <= 10")
    ctx = fc.ctx if hasattr(fc, "ctx") else fc
    u = ctx.coerce(u)
    a0 = ctx.a0_matrix(u)
    R = r_prime_series(ctx, u, max_degree)
    main = [_residual(R[n] - _gf_rhs(ctx, R, u, n, a0)) for n in range(max_degree + 1)]

    # R''_n = u R'_{n-2} u, degree n counting u's: R'' = u^2 + u R' gamma[R''] u + u R' Lambda(u, u)
    lu = ctx.left_mult(u)
    rdd = [None, None] + [ctx.prod(u, R[n - 2] @ u) for n in range(2, max_degree + 1)]
    r_double = []
    for n in range(2, max_degree + 1):
        rhs = ctx.prod(u, u) if n == 2 else ctx.zeros(ctx.dim)
        if n >= 3:
            rhs = rhs + lu @ R[n - 3] @ ctx.lam_of(u, u)
        for i in range(n - 3):
            # u R'_i gamma[R''_{n-2-i}] u, degree i + (n-2-i) + 2 = n
            g = ctx.gamma_of(rdd[n - 2 - i]) if ctx.gamma_pair is None else \
                ctx.pair_gamma(u, R[n - 4 - i] @ u)
            rhs = rhs + lu @ R[i] @ ctx.prod(g, u)
        r_double.append(_residual(rdd[n] - rhs))

    multi = None
    if family is not None:
        fam = [ctx.coerce(f) for f in family]
        M = _multi_r_prime(ctx, fam, max_degree)
        U = fam[0]
        for f in fam[1:]:
            U = U + f
        aU = ctx.a0_matrix(U)
        multi = [_residual(M[n] - _gf_rhs(ctx, M, U, n, aU)) for n in range(max_degree + 1)]

    boz = None
    if ctx.params.get("family") == "bozejko":
        eta, lam = ctx.params["eta"], ctx.params["lam_el"]
        r = [R[n] @ ctx.unit for n in range(max_degree + 1)]
        boz = []
        for n in range(max_degree + 1):
            rhs = ctx.unit if n == 0 else ctx.prod(lam, ctx.prod(r[n - 1], u))
            for i in range(n - 1):
                rhs = rhs + ctx.prod(eta, ctx.prod(ctx.prod(r[i], u), ctx.prod(r[n - 2 - i], u)))
            boz.append(_residual(r[n] - rhs))
    return GFReport(main, r_double, multi, boz)
