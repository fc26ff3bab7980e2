"""Fock space over a Hilbert space H with the C-deformed inner product.

H = C^m with the standard inner product <x, y> = y^H x and a conjugation
f* = J conj(f).  C acts on H (x) H (index i*m + j for e_i (x) e_j), and
Lambda(e_i (x) e_j) = sum_k L[i, j, k] e_k.  Level n carries the Gram matrix
K_n = prod_k (I^{(x)k} (x) (C+I) (x) I^{(x)(n-2-k)}), so <x, y>_C = y^H K_n x.

Operators reuse :class:`nnfock.fock.OperatorMatrix`, and the context exposes
the same Gram interface as :class:`nnfock.fock.FockContext`, so
:func:`nnfock.norms.deformed_norm` applies unchanged.
"""

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import _linalg as la
from .fock import OperatorMatrix, build_fock, moment
from .norms import NormReport, deformed_norm, r_sequence
from .partitions import mobius_free_cumulants


class InvalidConstruction(ValueError):
    pass


# ======================================================================
# Context
# ======================================================================

@dataclass(eq=False)
class ConstructionC:
    h_dim: int
    conj: np.ndarray
    C: np.ndarray
    Lambda: np.ndarray
    N: int
    kernel_tol: float = la.KERNEL_TOL
    tol: float = la.DEFAULT_TOL
    name: str = ""
    _K: dict = field(default_factory=dict, repr=False)

    @property
    def d(self):
        return self.h_dim

    @property
    def exact(self):
        return la.is_exact(self.C)

    @property
    def cplx(self):
        return any(np.iscomplexobj(a) and not la.is_exact(a)
                   for a in (self.C, self.Lambda, self.conj))

    def dim(self, level):
        return self.h_dim ** level

    def coerce(self, f):
        return la.like(np.asarray(f), self.C)

    def star_of(self, f):
        return la.matmul(self.conj, la.conj(self.coerce(f)))

    @property
    def D(self):
        return la.add(self.C, la.eye(self.h_dim ** 2, self.exact))

    @property
    def lam_matrix(self):
        """Lambda as an m x m^2 matrix: column i*m + j holds Lambda(e_i (x) e_j)."""
        m = self.h_dim
        return self.Lambda.transpose(2, 0, 1).reshape(m, m * m)

    def a0_matrix(self, f):
        """Matrix of g -> Lambda(f (x) g)."""
        return np.tensordot(self.coerce(f), self.Lambda, axes=(0, 0)).T

    def lstar_row(self, f):
        """Row r with l*(f) g = r g = <g, f*>."""
        return la.conj(self.star_of(f))

    # -- Gram
    def K(self, n):
        """K_n by K_n = ((C+I) (x) I) (I (x) K_{n-1}); the factors commute."""
        if n not in self._K:
            m = self.h_dim
            if n <= 1:
                self._K[n] = la.eye(m ** n, self.exact)
            else:
                left = la.kron_eye(self.D, m ** (n - 2))
                right = _eye_kron(m, self.K(n - 1), self.exact)
                self._K[n] = la.matmul(left, right)
        return self._K[n]

    def gram(self, n):
        return self.K(n)

    @property
    def grams(self):
        return [self.gram(n) for n in range(self.N + 1)]

    def gram_dense(self, max_level=None):
        import scipy.linalg as sla
        max_level = self.N if max_level is None else max_level
        return sla.block_diag(*[la.float_array(self.gram(n)) for n in range(max_level + 1)])

    def inner(self, x, y):
        total = 0
        for n in range(self.N + 1):
            if x[n] is None or y[n] is None:
                continue
            total = total + la.matmul(la.conj(y[n]), la.matmul(self.gram(n), x[n]))
        return total

    # -- vectors
    def zero_vector(self):
        return [None] * (self.N + 1)

    def vacuum(self):
        v = self.zero_vector()
        v[0] = la.eye(1, self.exact)[0]
        return v

    def tensor(self, *factors):
        n = len(factors)
        if n > self.N:
            raise ValueError(f"level {n} exceeds truncation N={self.N}")
        if n == 0:
            return self.vacuum()
        t = self.coerce(factors[0])
        for f in factors[1:]:
            t = np.multiply.outer(t, self.coerce(f)).ravel()
        v = self.zero_vector()
        v[n] = t
        return v

    def with_mode(self, exact):
        if exact == self.exact:
            return self
        conv = la.exact_array if exact else la.float_array
        return ConstructionC(self.h_dim, conv(self.conj), conv(self.C), conv(self.Lambda),
                             self.N, self.kernel_tol, self.tol, self.name)

    def with_N(self, N):
        return ConstructionC(self.h_dim, self.conj, self.C, self.Lambda, N,
                             self.kernel_tol, self.tol, self.name)


def _eye_kron(m, A, exact):
    """I_m (x) A."""
    r, c = A.shape
    out = la.zeros((m * r, m * c), exact, np.iscomplexobj(A) and not exact)
    for i in range(m):
        out[i * r:(i + 1) * r, i * c:(i + 1) * c] = A
    return out


def _kron(a, b):
    return np.kron(a, b)


# ======================================================================
# Construction and validation
# ======================================================================

def invariant_residuals(cc, max_k_level=4):
    """Residual of each standing hypothesis, keyed by name (0 means it holds)."""
    m, ex = cc.h_dim, cc.exact
    C, J = cc.C, cc.conj
    JJ = _kron(J, J)
    out = {}
    out["C(f* x g*) = C(f x g)*"] = la.max_abs(la.matmul(C, JJ) - la.matmul(JJ, la.conj(C)))
    IC = _eye_kron(m, C, ex)
    CI = la.kron_eye(C, m)
    out["(I x C)(C x I) = (C x I)(I x C)"] = la.max_abs(la.matmul(IC, CI) - la.matmul(CI, IC))
    D = cc.D
    herm = la.max_abs(D - la.dagger(D))
    if ex:
        neg = 0.0 if la.psd_exact(D) else max(-la.min_eigenvalue(D), 10 * cc.tol)
    else:
        neg = max(0.0, -la.min_eigenvalue(D))
    out["C + I positive"] = max(herm, neg)
    adj = 0.0
    for i in range(m):
        e = la.zeros(m, ex)
        e[i] = Fraction(1) if ex else 1.0
        adj = max(adj, la.max_abs(cc.a0_matrix(cc.star_of(e)) - la.dagger(cc.a0_matrix(e))))
    out["<g, Lambda(b x f)> = <Lambda(b* x g), f>"] = adj
    LI = la.kron_eye(cc.lam_matrix, m)
    out["C(Lambda x I) = (Lambda x I)(I x C)"] = la.max_abs(la.matmul(C, LI) - la.matmul(LI, IC))
    kres = 0.0
    for n in range(2, min(cc.N, max_k_level) + 1):
        kres = max(kres, la.max_abs(cc.K(n) - k_product(cc, n)))
    out["K_n = product of shifted (C+I) factors"] = kres
    return out


def k_product(cc, n):
    """K_n multiplied out literally as (D x I..)(I x D x I..)...(I.. x D)."""
    m, ex = cc.h_dim, cc.exact
    out = la.eye(m ** n, ex)
    for k in range(n - 1):
        fac = la.kron_eye(_eye_kron(m ** k, cc.D, ex) if k else cc.D, m ** (n - 2 - k))
        out = la.matmul(out, fac)
    return out


def build_construction_c(C, Lambda=None, conj=None, N=4, exact=True, validate=True,
                         tol=la.DEFAULT_TOL, name=""):
    """Validated :class:`ConstructionC`.

    ``C`` is m^2 x m^2; ``Lambda`` is an m x m x m tensor (default 0); ``conj``
    the conjugation matrix J (default identity, i.e. entrywise conjugation).
    """
    conv = la.exact_array if exact else la.float_array
    C = conv(C)
    m2 = C.shape[0]
    m = int(round(math.sqrt(m2)))
    if C.shape != (m2, m2) or m * m != m2:
        raise InvalidConstruction(f"C must be m^2 x m^2, got shape {C.shape}")
    L = la.zeros((m, m, m), exact) if Lambda is None else conv(Lambda)
    if L.shape != (m, m, m):
        raise InvalidConstruction(f"Lambda must have shape {(m, m, m)}, got {L.shape}")
    J = la.eye(m, exact) if conj is None else conv(conj)
    if N < 2:
        raise ValueError("truncation level N must be >= 2")
    cc = ConstructionC(m, J, C, L, N, tol=tol, name=name)
    if validate:
        res = invariant_residuals(cc)
        bad = [k for k, v in res.items() if v > tol]
        if bad:
            raise InvalidConstruction("violated: " + "; ".join(f"{k} (residual {res[k]:.3g})"
                                                                for k in bad))
    return cc


def diagonal_c(Cij, B=None, N=4, exact=True):
    """C(e_i (x) e_j) = C_ij e_i (x) e_j, Lambda(e_i (x) e_j) = sum_k B[i, j, k] e_k."""
    conv = la.exact_array if exact else la.float_array
    Cij = conv(Cij)
    m = Cij.shape[0]
    C = la.zeros((m * m, m * m), exact)
    for i in range(m):
        for j in range(m):
            C[i * m + j, i * m + j] = Cij[i, j]
    return build_construction_c(C, B, N=N, exact=exact, name="diagonal")


def rotated_c(U, diag, lam=None, N=4, exact=True):
    """C = (U x U) diag(c_ij) (U x U)^T for a real orthogonal U, and
    Lambda(u_a (x) u_b) = lam[a, b] u_b in the rotated basis u_a = U e_a."""
    conv = la.exact_array if exact else la.float_array
    U, c = conv(U), conv(diag)
    m = U.shape[0]
    Dg = la.zeros((m * m, m * m), exact)
    for i in range(m):
        for j in range(m):
            Dg[i * m + j, i * m + j] = c[i, j]
    UU = _kron(U, U)
    C = la.matmul(la.matmul(UU, Dg), UU.T)
    L = la.zeros((m, m, m), exact)
    if lam is not None:
        lam = conv(lam)
        for a in range(m):
            for b in range(m):
                # Lambda(u_a x u_b) = lam[a, b] u_b, pulled back to the standard basis
                L = L + lam[a, b] * np.einsum("i,j,k->ijk", U[:, a], U[:, b], U[:, b])
    return build_construction_c(C, L, N=N, exact=exact, name="rotated")


def cayley_orthogonal(S, exact=True):
    """(I - S)(I + S)^{-1} for antisymmetric S: a rational orthogonal matrix."""
    conv = la.exact_array if exact else la.float_array
    S = conv(S)
    Id = la.eye(S.shape[0], exact)
    return la.matmul(Id - S, la.inverse(Id + S))


def random_construction_c(rng, m=2, N=4, exact=True, with_lambda=True, scale=Fraction(9, 10)):
    """Random valid construction: rotated diagonal C with entries in (-scale, scale)
    and a rotated Lambda(u_a x u_b) = lam_ab u_b."""
    def rat(lo, hi, den=8):
        return Fraction(int(rng.integers(round(lo * den), round(hi * den) + 1)), den)

    S = [[0] * m for _ in range(m)]
    for i in range(m):
        for j in range(i + 1, m):
            S[i][j] = rat(-1, 1)
            S[j][i] = -S[i][j]
    U = cayley_orthogonal(S, True)
    c = [[rat(-scale, scale) for _ in range(m)] for _ in range(m)]
    lam = [[rat(-1, 1) for _ in range(m)] for _ in range(m)] if with_lambda else None
    cc = rotated_c(U, c, lam, N=N, exact=True)
    return cc if exact else cc.with_mode(False)


# ======================================================================
# Bridge from an algebra context
# ======================================================================

def _exact_sqrt(x):
    x = Fraction(x)
    if x < 0:
        return None
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    return Fraction(n, d) if n * n == x.numerator and d * d == x.denominator else None


def phi_orthonormal_basis(ctx):
    """Columns Q with Q^H P Q = I for the GNS Gram P; exact when P is diagonal
    with square entries, Cholesky in float otherwise."""
    P = ctx.gns_gram
    d = ctx.dim
    if ctx.exact and all(P[i, j] == 0 for i in range(d) for j in range(d) if i != j):
        roots = [_exact_sqrt(P[i, i]) for i in range(d)]
        if all(r is not None and r > 0 for r in roots):
            Q = la.zeros((d, d), True)
            for i, r in enumerate(roots):
                Q[i, i] = 1 / r
            return Q
    Lc = np.linalg.cholesky(la.hermitian_part(P))
    return np.linalg.inv(Lc.conj().T)


def from_algebra_context(ctx, N=4, validate=True):
    """Construction over H = L^2(B, phi) in a phi-orthonormal basis Q, with C + I
    the level-2 Gram of the (gamma, phi) Fock space in that basis, J and Lambda
    transported through Q.  Returns (cc, Q); b in B corresponds to Q^{-1} b.

    The level-n Grams agree with the main construction only when the level-2
    form factorizes as in the C-construction; :func:`bridge_gram_residual`
    measures that.
    """
    fc = build_fock(ctx, max(N, 2))
    Q = phi_orthonormal_basis(ctx)
    exact = la.is_exact(Q)
    if not exact:
        ctx = ctx.with_mode(False)
        fc = build_fock(ctx, max(N, 2))
    Qi = la.inverse(Q) if exact else np.linalg.inv(Q)
    Q2 = _kron(Q, Q)
    K2 = la.matmul(la.matmul(la.dagger(Q2), fc.gram(2)), Q2)
    C = la.add(K2, la.eye(K2.shape[0], exact), -1)
    J = la.matmul(la.matmul(Qi, ctx.star.T), la.conj(Q))
    L = np.einsum("ai,bj,abk,lk->ijl", Q, Q, ctx.lam, Qi)
    cc = build_construction_c(C, L, J, N=N, exact=exact, validate=validate,
                              name=f"bridge:{ctx.name}")
    return cc, Q


def bridge_gram_residual(ctx, cc, Q, max_level=None):
    """max_n |K_n - (Q^{(x)n})^H G_n Q^{(x)n}| against the main Fock Grams."""
    max_level = cc.N if max_level is None else max_level
    fc = build_fock(ctx if la.is_exact(Q) else ctx.with_mode(False), max(max_level, 2))
    res = 0.0
    Qn = la.eye(1, cc.exact)
    for n in range(1, max_level + 1):
        Qn = _kron(Qn, Q)
        G = la.matmul(la.matmul(la.dagger(Qn), fc.gram(n)), Qn)
        res = max(res, la.max_abs(G - cc.gram(n)))
    return res


def bridge_moment_residual(ctx, cc, Q, words, elements):
    """max |moment_main(b_w) - moment_C(Q^{-1} b_w)| over words of element indices."""
    Qi = la.inverse(Q) if la.is_exact(Q) else np.linalg.inv(Q)
    c2 = ctx if la.is_exact(Q) else ctx.with_mode(False)
    fc = build_fock(c2, max(max(len(w) for w in words), 2))
    bs = [c2.coerce(b) for b in elements]
    fs = [la.matmul(Qi, b) for b in bs]
    res = 0.0
    for w in words:
        a = moment(fc, [bs[i] for i in w])
        b = moment_c(cc, [fs[i] for i in w])
        res = max(res, abs(complex(a) - complex(b)))
    return res


# ======================================================================
# Operators
# ======================================================================

def _two_factor(cc, f):
    """m x m^2 matrix of f_1 (x) f_2 -> l*(f)[(C+I)(f_1 (x) f_2)]."""
    m = cc.h_dim
    row = cc.lstar_row(f).reshape(1, m)
    return la.matmul(la.kron_eye(row, m), cc.D)


def ops_c(cc, f):
    """{'plus', 'minus', 'zero', 'x'} operator matrices for f in H."""
    f = cc.coerce(f)
    m, N, ex = cc.h_dim, cc.N, cc.exact
    cp = cc.cplx or (np.iscomplexobj(f) and not ex)
    plus = {(n + 1, n): la.kron_eye(f.reshape(m, 1), m ** n) for n in range(N)}
    minus = {(0, 1): cc.lstar_row(f).reshape(1, m)}
    am = _two_factor(cc, f)
    for n in range(2, N + 1):
        minus[(n - 1, n)] = la.kron_eye(am, m ** (n - 2))
    A0 = cc.a0_matrix(f)
    zero = {(n, n): la.kron_eye(A0, m ** (n - 1)) for n in range(1, N + 1)}
    out = {k: OperatorMatrix(N, m, v, ex, cp) for k, v in
           (("plus", plus), ("minus", minus), ("zero", zero))}
    out["x"] = out["plus"] + out["minus"] + out["zero"]
    return out


def adjoint_residuals_c(cc, f):
    """(a+ vs a-(f*), a0 vs a0(f*)) residuals of G_t A_{t,s} - B_{s,t}^H G_s."""
    f = cc.coerce(f)
    A = ops_c(cc, f)
    B = ops_c(cc, cc.star_of(f))
    out = {}
    for name, (P, Q) in {"a+ / a-": ("plus", "minus"), "a0": ("zero", "zero")}.items():
        res = 0.0
        for (t, s), blk in A[P].blocks.items():
            lhs = la.matmul(cc.gram(t), blk)
            rhs = la.matmul(la.dagger(B[Q].block(s, t)), cc.gram(s))
            res = max(res, la.max_abs(lhs - rhs))
        out[name] = res
    return out


def apply_x_c(cc, f, vec, top=None):
    """X(f) applied to a level dict {n: array}; levels above ``top`` are dropped."""
    f = cc.coerce(f)
    m = cc.h_dim
    row = cc.lstar_row(f)
    am = _two_factor(cc, f)
    A0 = cc.a0_matrix(f)
    out = {}

    def put(n, v):
        if top is not None and n > top:
            return
        out[n] = la.add(out[n], v) if n in out else v

    for n, v in vec.items():
        if n == 0:
            put(1, f * v[0])
            continue
        put(n + 1, np.multiply.outer(f, v).ravel())
        rest = m ** (n - 1)
        put(n, la.matmul(A0, v.reshape(m, rest)).ravel())
        if n == 1:
            put(0, np.atleast_1d(la.matmul(row, v)))
        else:
            put(n - 1, la.matmul(am, v.reshape(m * m, m ** (n - 2))).ravel())
    return out


def moment_c(cc, fs):
    """<X(f_1) ... X(f_n) Omega, Omega>_C (no truncation needed for vacuum moments)."""
    vec = {0: la.eye(1, cc.exact)[0]}
    k = len(fs)
    for pos in range(k - 1, -1, -1):
        vec = apply_x_c(cc, fs[pos], vec, top=pos)
    if 0 not in vec:
        return Fraction(0) if cc.exact else 0.0
    return vec[0][0]


# ======================================================================
# R' and its generating function
# ======================================================================

def _lstar_c_term(cc, f, x):
    """Matrix of g -> l*(f) C(x (x) g)."""
    m = cc.h_dim
    row = cc.lstar_row(f).reshape(1, m)
    col = np.asarray(x).reshape(m, 1)
    return la.matmul(la.matmul(la.kron_eye(row, m), cc.C), la.kron_eye(col, m))


def _r_prime_rec(cc, f, n):
    f = cc.coerce(f)
    A0 = cc.a0_matrix(f)
    R = [la.eye(cc.h_dim, cc.exact)]
    for k in range(1, n + 1):
        tot = la.matmul(R[k - 1], A0)
        for i in range(k - 1):
            x = la.matmul(R[k - i - 2], f)
            tot = la.add(tot, la.matmul(R[i], _lstar_c_term(cc, f, x)))
        R.append(tot)
    return R


def r_prime_c(cc, f, n):
    """[R'_0[f], ..., R'_n[f]] by the recursion
    R'_n(g) = sum_i R'_i l*(f) C(R'_{n-i-2} f (x) g) + R'_{n-1} Lambda(f (x) g)."""
    if n > cc.N - 2:
        raise ValueError(f"R'_{n} needs N >= {n + 2} (N={cc.N})")
    return _r_prime_rec(cc, f, n)


def r_prime_definitional(cc, f, n):
    """[R'_0..R'_n] from free cumulants of the C-construction by Mobius inversion:
    R'_k[f][a, b] = R[X(e_a*), X(f), ..., X(f), X(e_b)]."""
    if n > cc.N - 2:
        raise ValueError(f"R'_{n} needs N >= {n + 2} (N={cc.N})")
    m = cc.h_dim
    f = cc.coerce(f)
    eye = la.eye(m, cc.exact)
    letters = {("f",): f}
    for a in range(m):
        letters[("h", a)] = cc.star_of(eye[:, a])
        letters[("e", a)] = eye[:, a]
    cache = {}

    def mom(word):
        if word not in cache:
            cache[word] = moment_c(cc, [letters[w] for w in word])
        return cache[word]

    out = []
    for k in range(n + 1):
        R = la.zeros((m, m), cc.exact, cc.cplx)
        for a in range(m):
            for b in range(m):
                word = (("h", a),) + (("f",),) * k + (("e", b),)
                R[a, b] = mobius_free_cumulants(mom, word)
        out.append(R)
    return out


def r_prime_consistency_c(cc, f, n):
    """max_k |recursion - definition| for k <= n."""
    A = r_prime_c(cc, f, n)
    B = r_prime_definitional(cc, f, n)
    return max(la.max_abs(a - b) for a, b in zip(A, B))


def gf_residual_c(cc, f, max_degree):
    """Per-degree residuals of R'(f)(g) = 1 + R'(f) l*(f) C(R'(f) f (x) g) + R'(f) Lambda(f (x) g),
    with the R'_k taken from the Mobius definition (not the recursion)."""
    f = cc.coerce(f)
    R = r_prime_definitional(cc, f, max_degree)
    A0 = cc.a0_matrix(f)
    res = []
    for k in range(max_degree + 1):
        rhs = la.eye(cc.h_dim, cc.exact) if k == 0 else la.matmul(R[k - 1], A0)
        for i in range(k - 1):
            x = la.matmul(R[k - i - 2], f)
            rhs = la.add(rhs, la.matmul(R[i], _lstar_c_term(cc, f, x)))
        res.append(la.max_abs(R[k] - rhs))
    return res


# ======================================================================
# Wick polynomials
# ======================================================================

def wick_c(cc, fs):
    """W(f_1..f_n): X(f_1) W(f_2..) - W(Lambda(f_1 x f_2), f_3..) - W(l*(f_1)(C+I)(f_2 x f_3), f_4..),
    with the scalar l*(f_1) f_2 = <f_2, f_1*> subtracted at n = 2."""
    fs = tuple(tuple(cc.coerce(f)) for f in fs)
    if len(fs) > cc.N:
        raise ValueError(f"W of {len(fs)} letters needs N >= {len(fs)}")
    xs, cache = {}, {}

    def X(f):
        if f not in xs:
            xs[f] = ops_c(cc, np.array(f))["x"]
        return xs[f]

    def W(word):
        if word in cache:
            return cache[word]
        n = len(word)
        if n == 0:
            out = OperatorMatrix.identity(cc.N, cc.h_dim, cc.exact, cc.cplx)
        elif n == 1:
            out = X(word[0])
        else:
            f1, f2 = np.array(word[0]), np.array(word[1])
            lam = tuple(la.matmul(cc.a0_matrix(f1), f2))
            out = X(word[0]) @ W(word[1:]) - W((lam,) + word[2:])
            if n == 2:
                out = out - la.matmul(cc.lstar_row(f1), f2) * W(())
            else:
                g = la.matmul(_two_factor(cc, f1), np.multiply.outer(f2, np.array(word[2])).ravel())
                out = out - W((tuple(g),) + word[3:])
        cache[word] = out
        return out

    return W(fs)


def wick_vacuum_residual_c(cc, fs):
    """max |W(f_1..f_n) Omega - f_1 (x) ... (x) f_n|."""
    W = wick_c(cc, fs)
    got = W.apply(cc.vacuum())
    want = cc.tensor(*fs)
    res = 0.0
    for a, b in zip(got, want):
        if a is None and b is None:
            continue
        diff = a if b is None else (-b if a is None else a - b)
        res = max(res, la.max_abs(diff))
    return res


# ======================================================================
# Norm bounds
# ======================================================================

def h_norm(f):
    return float(np.linalg.norm(la.float_array(f)))


def cplusi_norm(cc):
    return la.spectral_norm(cc.D)


def c_norm(cc):
    return la.spectral_norm(cc.C)


def lambda_norm_c(cc):
    return la.spectral_norm(cc.lam_matrix)


def convergence_radius_c(cc, corrected=False):
    """1/(4L), L = max(sqrt||C+I||, ||Lambda||); ``corrected`` uses sqrt||C||, the
    constant the R' recursion actually involves."""
    a = c_norm(cc) if corrected else cplusi_norm(cc)
    L = max(math.sqrt(a), lambda_norm_c(cc))
    return math.inf if L == 0 else 1 / (4 * L)


def _float_copy(cc):
    fl = getattr(cc, "_float_copy", None)
    if fl is None:
        fl = cc.with_mode(False)
        cc._float_copy = fl
    return fl


def norm_bounds_c(cc, elements=None):
    """Operator-norm estimates for a+, a-, a0 and the convergence radius.

    Literal forms are reported next to the level >= 1 restriction and the
    corrected constant sqrt(max(1, ||C+I||)), since a+(f) Omega = f has norm ||f||.
    """
    m = cc.h_dim
    if elements is None:
        eye = la.eye(m, cc.exact)
        elements = [eye[:, i] for i in range(m)]
        if m > 1:
            elements.append(eye[:, 0] - eye[:, m - 1] * Fraction(1, 2))
    ci = cplusi_norm(cc)
    ln = lambda_norm_c(cc)
    N = cc.N
    out = []
    for idx, f in enumerate(elements):
        f = cc.coerce(f)
        nf = h_norm(f)
        ops = ops_c(cc, f)
        opss = ops_c(cc, cc.star_of(f))
        ap = deformed_norm(cc, ops["plus"], N - 1)
        ap1 = deformed_norm(cc, ops["plus"], N - 1, 1)
        am = deformed_norm(cc, opss["minus"], N)
        az = deformed_norm(cc, ops["zero"], N)
        tags = {"element": idx}
        out += [
            NormReport("||a+(f)|| <= sqrt||C+I|| ||f||", ap, math.sqrt(ci) * nf, dict(tags)),
            NormReport("||a+(f)|| on levels >= 1 <= sqrt||C+I|| ||f||", ap1,
                       math.sqrt(ci) * nf, dict(tags)),
            NormReport("||a+(f)|| <= sqrt(max(1, ||C+I||)) ||f||", ap,
                       math.sqrt(max(1.0, ci)) * nf, dict(tags)),
            NormReport("| ||a-(f*)|| - ||a+(f)|| | = 0", abs(am - ap), 0.0, dict(tags)),
            NormReport("||a0(f)|| <= ||Lambda|| ||f||", az, ln * nf, dict(tags)),
        ]
    return out


def r_prime_growth_c(cc, f, max_degree=10):
    """||R'_n[f]|| against r_n L^n ||f||^n, with L from sqrt||C+I|| (literal) and from
    sqrt||C|| (corrected)."""
    R = _r_prime_rec(_float_copy(cc), la.float_array(cc.coerce(f)), max_degree)
    nf = h_norm(f)
    r = r_sequence(max_degree)
    ln = lambda_norm_c(cc)
    Ls = {"literal": max(math.sqrt(cplusi_norm(cc)), ln),
          "corrected": max(math.sqrt(c_norm(cc)), ln)}
    out = []
    for n in range(max_degree + 1):
        val = la.spectral_norm(R[n])
        for kind, L in Ls.items():
            out.append(NormReport(f"||R'_n|| <= r_n L^n ||f||^n ({kind} L)", val,
                                  r[n] * (L * nf) ** n, {"n": n, "L": kind}))
    return out


def wick_norm_ratio(cc, fs):
    """||W(f_1..f_n)|| / (s^{n-1} prod ||f_i||), s = sqrt||C+I|| + ||Lambda||, over
    the domain of levels 0..N-n."""
    n = len(fs)
    fl = _float_copy(cc)
    W = wick_c(fl, [la.float_array(cc.coerce(f)) for f in fs])
    val = deformed_norm(fl, W, cc.N - n)
    s = math.sqrt(cplusi_norm(cc)) + lambda_norm_c(cc)
    prod = math.prod(h_norm(f) for f in fs)
    return val / (s ** (n - 1) * prod)


def wick_constant_c(cc):
    """K for the Wick bound: 2 sqrt(max(1, ||C+I||)) + ||Lambda||, the provable
    bound on ||X(f)|| / ||f||."""
    return 2 * math.sqrt(max(1.0, cplusi_norm(cc))) + lambda_norm_c(cc)


def fit_wick_alpha(samples):
    """Empirical alpha = max over samples of (ratio / K)^{1/(n-1)}, n >= 2.

    ``samples`` holds (n, ratio, K).  The value is a fit, not a derived constant.
    """
    best = 0.0
    for n, ratio, K in samples:
        if n >= 2 and ratio > 0:
            best = max(best, (ratio / K) ** (1 / (n - 1)))
    return best


def wick_norm_bounds_c(cc, fs, alpha):
    """||W(f_1..f_n)|| <= alpha^{n-1} s^{n-1} K prod ||f_i|| with a fitted alpha."""
    n = len(fs)
    K = wick_constant_c(cc)
    s = math.sqrt(cplusi_norm(cc)) + lambda_norm_c(cc)
    prod = math.prod(h_norm(f) for f in fs)
    val = wick_norm_ratio(cc, fs) * s ** (n - 1) * prod
    return NormReport("||W_n|| <= alpha^{n-1} s^{n-1} K prod||f||", val,
                      alpha ** (n - 1) * s ** (n - 1) * K * prod,
                      {"n": n, "alpha": alpha, "empirical": True})


# ======================================================================
# Orthogonal bases
# ======================================================================

@dataclass
class OrthogonalityReport:
    condition: bool
    orthogonal: bool
    condition_witness: tuple = None
    gram_witness: tuple = None
    residuals: dict = field(default_factory=dict)

    @property
    def agree(self):
        return self.condition == self.orthogonal

    def to_dict(self):
        return {"condition": self.condition, "orthogonal": self.orthogonal,
                "agree": self.agree,
                "condition_witness": None if self.condition_witness is None
                else list(self.condition_witness),
                "gram_witness": None if self.gram_witness is None else list(self.gram_witness),
                "residuals": self.residuals}


def _parallel_residual(M, v):
    """|M v - (<M v, v>/<v, v>) v|."""
    v = la.float_array(v)
    w = la.float_array(M) @ v
    nv = float(np.real(np.vdot(v, v)))
    if nv == 0:
        return 0.0
    return float(np.max(np.abs(w - (np.vdot(v, w) / nv) * v)))


def orthogonal_basis_check(obj, bases, tol=1e-9):
    """Check the eigen-tensor condition for per-level bases F_1..F_L (columns
    f_{n,j}) and whether {f_{n,i(n)} x ... x f_{1,i(1)}} is orthogonal.

    For a :class:`ConstructionC`: C(f_{n,i} x f_{n-1,k}) parallel to f_{n,i} x f_{n-1,k}.
    For a Fock context over B (bases orthonormal in L^2(B, phi)):
    gamma[f_{n,i}* f_{n,k}] = 0 for i != k and gamma[f_{n,i}* f_{n,i}] f_{n-1,j}
    parallel to f_{n-1,j}.
    """
    L = len(bases)
    is_c = isinstance(obj, ConstructionC)
    res_cond = 0.0
    cwit = None
    for n in range(2, L + 1):
        Fn, Fp = bases[n - 1], bases[n - 2]
        d = Fn.shape[0]
        for i in range(d):
            for k in range(d):
                if is_c:
                    v = np.kron(la.float_array(Fn[:, i]), la.float_array(Fp[:, k]))
                    r = _parallel_residual(obj.C, v)
                    if r > tol and cwit is None:
                        cwit = (n, i, k)
                    res_cond = max(res_cond, r)
                else:
                    ctx = obj.ctx
                    g = ctx.pair_gamma(ctx.star_of(Fn[:, i]), Fn[:, k])
                    if i != k:
                        r = la.max_abs(g)
                        if r > tol and cwit is None:
                            cwit = (n, i, k)
                        res_cond = max(res_cond, r)
                    else:
                        for j in range(d):
                            r = _parallel_residual(ctx.left_mult(g), Fp[:, j])
                            if r > tol and cwit is None:
                                cwit = (n, i, j)
                            res_cond = max(res_cond, r)
    res_orth = 0.0
    gwit = None
    V = np.ones((1, 1))
    for n in range(1, L + 1):
        V = np.kron(la.float_array(bases[n - 1]), V)
        G = la.float_array(obj.gram(n))
        M = V.conj().T @ G @ V
        off = M - np.diag(np.diag(M))
        r = float(np.max(np.abs(off))) if off.size else 0.0
        if r > tol and gwit is None:
            a, b = np.unravel_index(np.argmax(np.abs(off)), off.shape)
            d = bases[0].shape[0]
            gwit = (n, tuple(int(x) for x in np.unravel_index(a, (d,) * n)),
                    tuple(int(x) for x in np.unravel_index(b, (d,) * n)))
        res_orth = max(res_orth, r)
    return OrthogonalityReport(res_cond <= tol, res_orth <= tol, cwit, gwit,
                               {"condition": res_cond, "orthogonality": res_orth})
