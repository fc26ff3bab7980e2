"""Truncated Fock space with the (gamma, phi)-deformed inner product.

Level n of the algebraic Fock space is B^{(x) n}; a level-n vector is a flat
array of length d**n indexed by words (i_1, ..., i_n) with the first tensor
factor most significant.  Level 0 is the vacuum line C Omega.  The truncation
keeps levels 0..N; creation out of level N is dropped.

Operators are stored as :class:`OperatorMatrix` (dense blocks indexed by
(target level, source level)).  For vacuum expectations the generators can
also be applied directly to vectors through :class:`Gen` descriptors, which
avoids building any matrix.
"""

import itertools
import warnings
from collections import namedtuple
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import _linalg as la

KINDS = ("plus", "minus", "zero", "x", "gamma_tilde", "phi_tilde")

Gen = namedtuple("Gen", ["kind", "b"])
Gen.__doc__ = "Generator descriptor: kind in KINDS and a coefficient vector b."


class WordTooLong(ValueError):
    pass


class IllConditionedGram(UserWarning):
    pass


# ======================================================================
# Operator matrices
# ======================================================================

class OperatorMatrix:
    """Linear operator on the truncated Fock space, stored by level blocks."""

    def __init__(self, N, d, blocks=None, exact=True, cplx=False):
        self.N, self.d = N, d
        self.exact, self.cplx = exact, cplx
        self.blocks = {} if blocks is None else dict(blocks)

    # -- construction helpers
    def dims(self, level):
        return self.d ** level

    def _like(self, blocks):
        return OperatorMatrix(self.N, self.d, blocks, self.exact, self.cplx)

    @classmethod
    def identity(cls, N, d, exact=True, cplx=False):
        return cls(N, d, {(n, n): la.eye(d ** n, exact) for n in range(N + 1)}, exact, cplx)

    def block(self, t, s):
        if (t, s) in self.blocks:
            return self.blocks[(t, s)]
        return la.zeros((self.d ** t, self.d ** s), self.exact, self.cplx)

    # -- algebra
    def __add__(self, other):
        if not isinstance(other, OperatorMatrix):
            return self + other * OperatorMatrix.identity(self.N, self.d, self.exact, self.cplx)
        out = dict(self.blocks)
        for k, v in other.blocks.items():
            out[k] = la.add(out[k], v) if k in out else v
        return OperatorMatrix(self.N, self.d, out, self.exact and other.exact,
                              self.cplx or other.cplx)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -v for k, v in self.blocks.items()})

    def __sub__(self, other):
        if not isinstance(other, OperatorMatrix):
            return self + (-other)
        out = dict(self.blocks)
        for k, v in other.blocks.items():
            out[k] = la.add(out[k], v, -1) if k in out else -v
        return OperatorMatrix(self.N, self.d, out, self.exact and other.exact,
                              self.cplx or other.cplx)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        if isinstance(c, OperatorMatrix):
            return self @ c
        cplx = self.cplx or isinstance(c, complex)
        return OperatorMatrix(self.N, self.d, {k: v * c for k, v in self.blocks.items()},
                              self.exact, cplx)

    __rmul__ = __mul__

    def __matmul__(self, other):
        out = {}
        by_target = {}
        for (m, s), v in other.blocks.items():
            by_target.setdefault(m, []).append((s, v))
        for (t, m), a in self.blocks.items():
            for s, b in by_target.get(m, ()):
                prod = la.matmul(a, b)
                out[(t, s)] = la.add(out[(t, s)], prod) if (t, s) in out else prod
        return OperatorMatrix(self.N, self.d, out, self.exact and other.exact,
                              self.cplx or other.cplx)

    def dagger(self):
        """Undeformed conjugate transpose."""
        return self._like({(s, t): la.dagger(v) for (t, s), v in self.blocks.items()})

    def restrict_domain(self, max_level):
        return self._like({k: v for k, v in self.blocks.items() if k[1] <= max_level})

    # -- actions and views
    def apply(self, vec):
        out = [None] * (self.N + 1)
        for (t, s), a in self.blocks.items():
            if vec[s] is None:
                continue
            y = la.matmul(a, vec[s])
            out[t] = y if out[t] is None else out[t] + y
        return out

    def offsets(self):
        off = [0]
        for n in range(self.N + 1):
            off.append(off[-1] + self.d ** n)
        return off

    def dense(self):
        off = self.offsets()
        M = la.zeros((off[-1], off[-1]), self.exact, self.cplx)
        for (t, s), v in self.blocks.items():
            M[off[t]:off[t + 1], off[s]:off[s + 1]] = v
        return M

    def max_abs(self):
        return max((la.max_abs(v) for v in self.blocks.values()), default=0.0)

    def is_zero(self, tol=la.DEFAULT_TOL):
        return all(la.is_zero(v, tol) for v in self.blocks.values())

    def to_float(self):
        return OperatorMatrix(self.N, self.d, {k: la.float_array(v) for k, v in self.blocks.items()},
                              False, self.cplx)

    def __repr__(self):
        return f"OperatorMatrix(N={self.N}, d={self.d}, blocks={sorted(self.blocks)})"


# ======================================================================
# Fock context
# ======================================================================

@dataclass(eq=False)
class FockContext:
    ctx: object
    N: int
    kernel_tol: float = la.KERNEL_TOL
    _gram: dict = field(default_factory=dict, repr=False)

    @property
    def d(self):
        return self.ctx.dim

    @property
    def exact(self):
        return self.ctx.exact

    @property
    def cplx(self):
        return self.ctx.is_complex

    def dim(self, level):
        return self.d ** level

    def words(self, level):
        return list(itertools.product(range(self.d), repeat=level))

    @property
    def basis(self):
        return [w for n in range(self.N + 1) for w in self.words(n)]

    # -- Gram matrices by the nested (gamma+phi) recursion
    @cached_property
    def _lstar(self):
        c = self.ctx
        return np.tensordot(c.star, c.mul, axes=(1, 0))  # [j, c, a]: e_j* e_c

    def _gram_level(self, n):
        c = self.ctx
        if n == 0:
            one = la.eye(1, self.exact)
            return one.astype(complex) if self.cplx else one
        T = c.total_pair_tensor
        Y = c.unit.reshape(1, 1, self.d)
        for k in range(1, n + 1):
            Z = la.tensordot(Y, self._lstar, axes=([2], [1]))  # U, V, j, a
            if k == n:
                G = la.tensordot(Z, c.phi_prod, axes=([3], [0]))  # U, V, j, i
                U, V = G.shape[0], G.shape[1]
                return G.transpose(1, 2, 0, 3).reshape(V * self.d, U * self.d)
            Y = la.tensordot(Z, T, axes=([3], [0]))  # U, V, j, i, r
            U, V = Y.shape[0], Y.shape[1]
            Y = Y.transpose(0, 3, 1, 2, 4).reshape(U * self.d, V * self.d, self.d)
        raise AssertionError

    def gram(self, n):
        """Gram matrix G[v, u] = <e_u, e_v> at level n, so <x, y> = y^H G x."""
        if n not in self._gram:
            self._gram[n] = self._gram_level(n)
        return self._gram[n]

    @property
    def grams(self):
        return [self.gram(n) for n in range(self.N + 1)]

    def gram_kernel(self, n):
        """Columns spanning the null space of the level-n Gram matrix."""
        G = self.gram(n)
        if self.exact:
            return la.nullspace(G)
        w, V = np.linalg.eigh(la.hermitian_part(G))
        scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
        return V[:, w <= self.kernel_tol * scale]

    def inner(self, x, y):
        """<x, y> for Fock vectors given as per-level lists (None = 0)."""
        total = 0
        for n in range(self.N + 1):
            if x[n] is None or y[n] is None:
                continue
            total = total + la.matmul(la.conj(y[n]), la.matmul(self.gram(n), x[n]))
        return total

    def gram_dense(self, max_level=None):
        max_level = self.N if max_level is None else max_level
        blocks = [la.float_array(self.gram(n)) for n in range(max_level + 1)]
        import scipy.linalg as sla
        return sla.block_diag(*blocks)

    # -- vectors
    def zero_vector(self):
        return [None] * (self.N + 1)

    def vacuum(self):
        v = self.zero_vector()
        v[0] = la.eye(1, self.exact)[0]
        return v

    def tensor(self, *factors):
        """u_1 (x) ... (x) u_n as a Fock vector."""
        n = len(factors)
        if n > self.N:
            raise WordTooLong(f"level {n} exceeds truncation N={self.N}")
        if n == 0:
            return self.vacuum()
        t = self.ctx.coerce(factors[0])
        for f in factors[1:]:
            t = np.multiply.outer(t, self.ctx.coerce(f)).ravel()
        v = self.zero_vector()
        v[n] = t
        return v


def build_fock(ctx, N, check=False):
    """Truncated Fock space over ``ctx`` keeping levels 0..N.

    Gram matrices are computed on first use; with ``check=True`` they are all
    computed now and a negative eigenvalue raises with the offending level.
    """
    if N < 2:
        raise ValueError("truncation level N must be >= 2")
    fc = FockContext(ctx, N)
    if check:
        for n in range(N + 1):
            G = fc.gram(n)
            if not la.is_psd(G, ctx.tol):
                raise ValueError(f"Fock Gram matrix not positive semidefinite at level {n} "
                                 f"(min eigenvalue {la.min_eigenvalue(G):.3e})")
    return fc


# ======================================================================
# Generators
# ======================================================================

def _coerce(fc, b):
    return fc.ctx.coerce(b)


def _pair_matrix(fc, b, tensor):
    """Am[c, (i1, i2)] = coefficient of e_c in pair(b, e_i1) e_i2."""
    c = fc.ctx
    pb = np.tensordot(b, tensor, axes=(0, 0))          # [i1, r]
    am = np.tensordot(pb, c.mul, axes=([1], [0]))      # [i1, i2, c]
    return am.transpose(2, 0, 1).reshape(fc.d, fc.d * fc.d)


def _gen_pieces(fc, kind, b):
    """Level-independent pieces: (level-1 annihilation row, two-factor matrix)."""
    c = fc.ctx
    if kind == "minus":
        return c.phi_prod.T @ b, _pair_matrix(fc, b, c.total_pair_tensor)
    if kind == "gamma_tilde":
        return None, _pair_matrix(fc, b, c.gamma_pair_tensor)
    if kind == "phi_tilde":
        return c.phi_prod.T @ b, _pair_matrix(fc, b, np.multiply.outer(c.phi_prod, c.unit))
    raise ValueError(kind)


def _operator(fc, kind, b):
    b = _coerce(fc, b)
    d, N = fc.d, fc.N
    blocks = {}
    if kind == "x":
        return _operator(fc, "plus", b) + _operator(fc, "zero", b) + _operator(fc, "minus", b)
    if kind == "plus":
        for n in range(N):
            blocks[(n + 1, n)] = la.kron_eye(b.reshape(d, 1), d ** n)
    elif kind == "zero":
        A0 = fc.ctx.a0_matrix(b)
        for n in range(1, N + 1):
            blocks[(n, n)] = la.kron_eye(A0, d ** (n - 1))
    else:
        row, am = _gen_pieces(fc, kind, b)
        if row is not None:
            blocks[(0, 1)] = row.reshape(1, d)
        for n in range(2, N + 1):
            blocks[(n - 1, n)] = la.kron_eye(am, d ** (n - 2))
    return OperatorMatrix(N, d, blocks, fc.exact, fc.cplx or np.iscomplexobj(b) and b.dtype != object)


def a_plus(fc, b):
    return _operator(fc, "plus", b)


def a_minus(fc, b):
    return _operator(fc, "minus", b)


def a_zero(fc, b):
    return _operator(fc, "zero", b)


def x_op(fc, b):
    return _operator(fc, "x", b)


def a_gamma_tilde(fc, b):
    return _operator(fc, "gamma_tilde", b)


def a_phi_tilde(fc, b):
    return _operator(fc, "phi_tilde", b)


def operator_of(fc, gen):
    if isinstance(gen, OperatorMatrix):
        return gen
    return _operator(fc, gen.kind, gen.b)


# ======================================================================
# Direct vector actions
# ======================================================================

def apply_gen(fc, gen, vec, max_level=None):
    """Apply a generator descriptor to a Fock vector without building matrices."""
    kind, b = gen.kind, _coerce(fc, gen.b)
    top = fc.N if max_level is None else min(max_level, fc.N)
    if kind == "x":
        out = fc.zero_vector()
        for k in ("plus", "zero", "minus"):
            part = apply_gen(fc, Gen(k, b), vec, top)
            out = add_vectors(out, part)
        return out
    d = fc.d
    out = fc.zero_vector()
    if kind == "plus":
        for n in range(min(fc.N, top + 1)):
            if vec[n] is not None and n + 1 <= top:
                out[n + 1] = np.multiply.outer(b, vec[n]).ravel()
        return out
    if kind == "zero":
        A0 = fc.ctx.a0_matrix(b)
        for n in range(1, fc.N + 1):
            if vec[n] is not None and n <= top:
                out[n] = la.matmul(A0, vec[n].reshape(d, -1)).ravel()
        return out
    row, am = _gen_pieces(fc, kind, b)
    if row is not None and vec[1] is not None:
        out[0] = np.atleast_1d(row @ vec[1])
    for n in range(2, fc.N + 1):
        if vec[n] is not None and n - 1 <= top:
            out[n - 1] = la.matmul(am, vec[n].reshape(d * d, -1)).ravel()
    return out


def add_vectors(x, y, cx=1, cy=1):
    out = []
    for a, b in zip(x, y):
        if a is None and b is None:
            out.append(None)
        elif a is None:
            out.append(b * cy)
        elif b is None:
            out.append(a * cx)
        else:
            out.append(a * cx + b * cy)
    return out


def scale_vector(x, c):
    return [None if a is None else a * c for a in x]


def apply_ops(fc, ops, vec=None, prune=True):
    """Apply ops[0] ... ops[-1] (rightmost first) to ``vec`` (default Omega).

    With ``prune`` the levels that cannot return to the vacuum in the remaining
    steps are discarded, which keeps vacuum computations cheap.
    """
    vec = fc.vacuum() if vec is None else vec
    k = len(ops)
    for pos in range(k - 1, -1, -1):
        op = ops[pos]
        top = pos if prune else None
        if isinstance(op, OperatorMatrix):
            vec = op.apply(vec)
            if top is not None:
                vec = [v if n <= top else None for n, v in enumerate(vec)]
        else:
            vec = apply_gen(fc, op, vec, top)
    return vec


def vacuum_expectation(fc, ops):
    """<op_1 ... op_k Omega, Omega>; exact for k <= N."""
    if len(ops) > fc.N:
        raise WordTooLong(f"word of length {len(ops)} exceeds truncation N={fc.N}")
    vec = apply_ops(fc, ops)
    if vec[0] is None:
        return la.zeros(1, fc.exact)[0]
    return vec[0][0]


def moment(fc, us):
    """Mixed moment <X(u_1) ... X(u_n) Omega, Omega>."""
    return vacuum_expectation(fc, [Gen("x", u) for u in us])


# ======================================================================
# Adjoint checks and the quotient by null vectors
# ======================================================================

def adjoint_residual(fc, b):
    """max ||G_t A(b) - A'(b*)^H G_s|| over blocks (t, s), for (A, A') = (a+, a-) and (a0, a0).

    Zero certifies <a+(b) x, y> = <x, a-(b*) y> and <a0(b) x, y> = <x, a0(b*) y>.
    """
    b = _coerce(fc, b)
    bs = fc.ctx.star_of(b)
    res = 0.0
    pairs = [(a_plus(fc, b), a_minus(fc, bs)), (a_zero(fc, b), a_zero(fc, bs))]
    for A, B in pairs:
        for (t, s), blk in A.blocks.items():
            lhs = la.matmul(fc.gram(t), blk)
            rhs = la.matmul(la.dagger(B.block(s, t)), fc.gram(s))
            res = max(res, la.max_abs(lhs - rhs))
    return res


def quotient_projector(fc, level):
    """Euclidean projector onto the orthogonal complement of the level's null space."""
    G = fc.gram(level)
    n = G.shape[0]
    if fc.exact:
        K = la.nullspace(G)
        if K.shape[1] == 0:
            return la.eye(n, True)
        Kh = la.dagger(K)
        return la.eye(n, True) - K @ la.inverse(Kh @ K) @ Kh
    w, V = np.linalg.eigh(la.hermitian_part(G))
    scale = max(1.0, float(np.max(np.abs(w))))
    tol = fc.kernel_tol * scale
    close = (w > tol) & (w <= 10 * tol)
    if np.any(close):
        warnings.warn(f"ill-conditioned Gram at level {level}: eigenvalues within 10x of "
                      f"the kernel tolerance", IllConditionedGram)
    keep = V[:, w > tol]
    return keep @ keep.conj().T


def kernel_preservation_residual(fc, op):
    """max ||G_t A K_s||: zero iff the operator maps null vectors to null vectors."""
    res = 0.0
    kernels = {}
    for (t, s), blk in op.blocks.items():
        if s not in kernels:
            kernels[s] = fc.gram_kernel(s)
        K = kernels[s]
        if K.shape[1] == 0:
            continue
        res = max(res, la.max_abs(la.matmul(la.matmul(fc.gram(t), blk), K)))
    return res
