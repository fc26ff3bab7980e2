"""Finite-dimensional *-algebras carrying the data (phi, gamma, Lambda).

An element of B is a coefficient vector over the basis e_1..e_d.  The algebra
is described by structure constants ``mul[i, j, k]`` (e_i e_j = sum_k mul[i,j,k] e_k),
a star matrix ``star[i, j]`` (e_i* = sum_j star[i,j] e_j, extended anti-linearly),
and the unit's coefficient vector.  On top of that:

* ``phi`` is the vector of values phi[e_i];
* ``gamma`` is the matrix of the map gamma, column i holding gamma[e_i];
* ``lam`` is the order-3 tensor of Lambda(e_i (x) e_j);
* ``gamma_pair`` optionally replaces gamma[x y] by a bilinear map <x, y>_gamma.

Every entry is either an exact ``Fraction`` (object arrays) or a float.
"""

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from . import _linalg as la

LAMBDA_KINDS = ("general", "left-multiplier")


class InvalidAlgebra(ValueError):
    """Raised when algebra data is malformed or violates a standing hypothesis."""


@dataclass(frozen=True, eq=False)
class AlgebraContext:
    mul: np.ndarray
    star: np.ndarray
    unit: np.ndarray
    phi: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    lambda_kind: str = "general"
    lambda_map: np.ndarray = None
    gamma_pair: np.ndarray = None
    name: str = ""
    params: dict = field(default_factory=dict)
    tol: float = la.DEFAULT_TOL

    def __post_init__(self):
        d = self.unit.shape[0] if np.ndim(self.unit) == 1 else None
        if d is None:
            raise InvalidAlgebra("unit must be a coefficient vector")
        shapes = {
            "mul": (self.mul, (d, d, d)),
            "star": (self.star, (d, d)),
            "phi": (self.phi, (d,)),
            "gamma": (self.gamma, (d, d)),
            "lambda": (self.lam, (d, d, d)),
        }
        if self.lambda_map is not None:
            shapes["lambda_map"] = (self.lambda_map, (d, d))
        if self.gamma_pair is not None:
            shapes["gamma_pair"] = (self.gamma_pair, (d, d, d))
        for key, (arr, shape) in shapes.items():
            if np.shape(arr) != shape:
                raise InvalidAlgebra(f"dimension mismatch: {key} has shape "
                                     f"{np.shape(arr)}, expected {shape}")
        if self.lambda_kind not in LAMBDA_KINDS:
            raise InvalidAlgebra(f"unknown lambda_kind {self.lambda_kind!r}")
        if self.lambda_kind == "left-multiplier" and self.lambda_map is None:
            raise InvalidAlgebra("left-multiplier kind needs lambda_map")

    # ------------------------------------------------------------------ basics
    @property
    def dim(self):
        return self.unit.shape[0]

    d = dim

    @property
    def exact(self):
        return la.is_exact(self.mul)

    @cached_property
    def is_complex(self):
        arrs = [self.mul, self.star, self.unit, self.phi, self.gamma, self.lam,
                self.lambda_map, self.gamma_pair]
        return any(a is not None and np.iscomplexobj(a) and a.dtype != object for a in arrs)

    def zeros(self, shape):
        return la.zeros(shape, self.exact, self.is_complex)

    def zero(self):
        return la.zeros(self.dim, self.exact)

    def basis(self, i):
        v = self.zero()
        v[i] = Fraction(1) if self.exact else 1.0
        return v

    def coerce(self, x):
        """Bring a user-supplied coefficient vector into this context's mode."""
        return la.like(np.asarray(x), self.mul)

    def scalar(self, x):
        return la.to_fraction(x) if self.exact else complex(x) if isinstance(x, complex) else float(x)

    # ----------------------------------------------------------- arithmetic
    def prod(self, x, y):
        return np.tensordot(np.tensordot(x, self.mul, axes=(0, 0)), y, axes=(0, 0))

    def star_of(self, x):
        return self.star.T @ la.conj(np.asarray(x))

    def phi_of(self, x):
        return self.phi @ x

    def gamma_of(self, x):
        return self.gamma @ x

    def lam_of(self, x, y):
        return np.tensordot(np.tensordot(x, self.lam, axes=(0, 0)), y, axes=(0, 0))

    def pair_gamma(self, x, y):
        """gamma[x y], or the bilinear replacement <x, y>_gamma when supplied."""
        return np.tensordot(np.tensordot(x, self.gamma_pair_tensor, axes=(0, 0)), y, axes=(0, 0))

    def pair_total(self, x, y):
        """(gamma + phi)[x y] as an element of B."""
        return self.pair_gamma(x, y) + self.phi_of(self.prod(x, y)) * self.unit

    def left_mult(self, a):
        """Matrix of v -> a v on coefficient vectors."""
        return np.tensordot(a, self.mul, axes=(0, 0)).T

    def right_mult(self, a):
        return np.tensordot(self.mul, a, axes=(1, 0)).T

    def a0_matrix(self, b):
        """Matrix of v -> Lambda(b (x) v) on coefficient vectors."""
        return np.tensordot(b, self.lam, axes=(0, 0)).T

    def inner(self, x, y):
        """phi[y* x]: the GNS inner product, linear in x."""
        return self.phi_of(self.prod(self.star_of(y), x))

    def inverse_of(self, x):
        """Two-sided inverse of x in B (raises if x is not invertible)."""
        lm = self.left_mult(x)
        if self.exact:
            if la.exact_rank(lm) < self.dim:
                raise InvalidAlgebra("element is not invertible in B")
        elif abs(np.linalg.det(la.float_array(lm))) < 1e-14:
            raise InvalidAlgebra("element is not invertible in B")
        return la.solve(lm, self.unit)

    # --------------------------------------------------------- cached tensors
    @cached_property
    def phi_prod(self):
        """F[a, i] = phi[e_a e_i]."""
        return np.tensordot(self.mul, self.phi, axes=(2, 0))

    @cached_property
    def gns_gram(self):
        """P[i, j] = phi[e_i* e_j]; <x, y> = y^H P x."""
        return self.star @ self.phi_prod

    @cached_property
    def gamma_pair_tensor(self):
        if self.gamma_pair is not None:
            return self.gamma_pair
        return np.tensordot(self.mul, self.gamma, axes=(2, 1))

    @cached_property
    def total_pair_tensor(self):
        """(gamma+phi) pairing: T[a, i, :] = (gamma+phi)-pair(e_a, e_i)."""
        return self.gamma_pair_tensor + np.multiply.outer(self.phi_prod, self.unit)

    @cached_property
    def is_commutative(self):
        m = self.mul
        if self.exact:
            return all(x == y for x, y in zip(m.flat, np.swapaxes(m, 0, 1).flat))
        return la.max_abs(m - np.swapaxes(m, 0, 1)) <= self.tol

    # -------------------------------------------------------------- modes
    def with_mode(self, exact):
        if exact == self.exact:
            return self
        conv = la.exact_array if exact else la.float_array
        return AlgebraContext(
            mul=conv(self.mul), star=conv(self.star), unit=conv(self.unit),
            phi=conv(self.phi), gamma=conv(self.gamma), lam=conv(self.lam),
            lambda_kind=self.lambda_kind,
            lambda_map=None if self.lambda_map is None else conv(self.lambda_map),
            gamma_pair=None if self.gamma_pair is None else conv(self.gamma_pair),
            name=self.name, params=_convert_params(self.params, conv), tol=self.tol)

    def replace(self, **kw):
        fields = dict(mul=self.mul, star=self.star, unit=self.unit, phi=self.phi,
                      gamma=self.gamma, lam=self.lam, lambda_kind=self.lambda_kind,
                      lambda_map=self.lambda_map, gamma_pair=self.gamma_pair,
                      name=self.name, params=dict(self.params), tol=self.tol)
        fields.update(kw)
        return AlgebraContext(**fields)


def _convert_params(params, conv):
    out = {}
    for k, v in params.items():
        out[k] = conv(v) if isinstance(v, np.ndarray) else v
    return out


# ======================================================================
# Validation
# ======================================================================

@dataclass
class Check:
    name: str
    passed: bool
    residual: float
    detail: str = ""


@dataclass
class ValidationReport:
    checks: list

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"passed": self.passed,
                "checks": [dict(name=c.name, passed=c.passed, residual=c.residual,
                                detail=c.detail) for c in self.checks]}


def _residual_check(name, diffs, ctx, scale=1.0):
    res = max((la.max_abs(x) for x in diffs), default=0.0)
    if ctx.exact:
        ok = all(la.is_zero(x) for x in diffs)
    else:
        ok = res <= ctx.tol * max(1.0, scale)
    return Check(name, ok, res)


def eq23_residuals(ctx):
    """Residuals of the Lambda-adjointness relations, phi part and gamma part."""
    d = ctx.dim
    phi_diffs, gam_diffs = [], []
    for i, j, k in itertools.product(range(d), repeat=3):
        b, u, v = ctx.basis(i), ctx.basis(j), ctx.basis(k)
        lhs_el = ctx.lam_of(b, u)
        rhs_el = ctx.star_of(ctx.lam_of(ctx.star_of(b), v))
        vs = ctx.star_of(v)
        phi_diffs.append(np.asarray(ctx.phi_of(ctx.prod(vs, lhs_el)) - ctx.phi_of(ctx.prod(rhs_el, u))))
        gam_diffs.append(ctx.pair_gamma(vs, lhs_el) - ctx.pair_gamma(rhs_el, u))
    return phi_diffs, gam_diffs


def validate_algebra(ctx, n_cp=3):
    d = ctx.dim
    checks = []
    e = [ctx.basis(i) for i in range(d)]
    scale = max(1.0, la.max_abs(ctx.mul))

    assoc = [ctx.prod(ctx.prod(e[i], e[j]), e[k]) - ctx.prod(e[i], ctx.prod(e[j], e[k]))
             for i, j, k in itertools.product(range(d), repeat=3)]
    checks.append(_residual_check("associativity", assoc, ctx, scale))

    unit = [ctx.prod(ctx.unit, e[i]) - e[i] for i in range(d)]
    unit += [ctx.prod(e[i], ctx.unit) - e[i] for i in range(d)]
    checks.append(_residual_check("unit", unit, ctx))

    invol = [ctx.star_of(ctx.star_of(e[i])) - e[i] for i in range(d)]
    checks.append(_residual_check("star involution", invol, ctx))
    anti = [ctx.star_of(ctx.prod(e[i], e[j])) - ctx.prod(ctx.star_of(e[j]), ctx.star_of(e[i]))
            for i, j in itertools.product(range(d), repeat=2)]
    checks.append(_residual_check("star anti-homomorphism", anti, ctx, scale))

    phistar = [np.asarray(ctx.phi_of(ctx.star_of(e[i])) - la.conj(np.asarray(ctx.phi_of(e[i]))))
               for i in range(d)]
    checks.append(_residual_check("phi star-linear", phistar, ctx))

    P = ctx.gns_gram
    herm = [P - la.dagger(P)]
    checks.append(_residual_check("phi positive (Gram Hermitian)", herm, ctx))
    faithful = la.is_positive_definite(P, ctx.tol)
    checks.append(Check("phi faithful (Gram positive definite)", faithful,
                        la.min_eigenvalue(P),
                        "" if faithful else "phi-Gram matrix P is not positive definite"))

    gstar = [ctx.gamma_of(ctx.star_of(e[i])) - ctx.star_of(ctx.gamma_of(e[i])) for i in range(d)]
    if ctx.gamma_pair is not None:
        gstar += [ctx.star_of(ctx.pair_gamma(e[i], e[j]))
                  - ctx.pair_gamma(ctx.star_of(e[j]), ctx.star_of(e[i]))
                  for i, j in itertools.product(range(d), repeat=2)]
    checks.append(_residual_check("gamma star-linear", gstar, ctx))

    cp = check_cp_level(ctx, ctx.total_pair_tensor, n_cp)
    checks.append(Check(f"gamma+phi completely positive (level {n_cp})", cp.passed,
                        cp.min_eigenvalue))

    phi_d, gam_d = eq23_residuals(ctx)
    lam_scale = max(1.0, la.max_abs(ctx.lam)) * scale
    checks.append(_residual_check("Lambda adjointness (phi part)", phi_d, ctx, lam_scale))
    checks.append(_residual_check("Lambda adjointness (gamma part)", gam_d, ctx, lam_scale))

    if ctx.lambda_kind == "left-multiplier":
        lm = [ctx.lam[i, j] - ctx.prod(ctx.lambda_map @ e[i], e[j])
              for i, j in itertools.product(range(d), repeat=2)]
        checks.append(_residual_check("left-multiplier consistency", lm, ctx, lam_scale))
    return ValidationReport(checks)


# ======================================================================
# Complete positivity
# ======================================================================

@dataclass
class CPCheck:
    passed: bool
    min_eigenvalue: float
    level: int

    def __bool__(self):
        return self.passed


def map_to_pair(ctx, T):
    """Turn a d x d map matrix into the pairing tensor (x, y) -> T(x y)."""
    T = np.asarray(T)
    if T.ndim == 3:
        return T
    return np.tensordot(ctx.mul, T, axes=(2, 1))


def gamma_plus_t_phi(ctx, t):
    """Pairing tensor of gamma + t*phi (as a B-valued map)."""
    t = ctx.scalar(t)
    return ctx.gamma_pair_tensor + t * np.multiply.outer(ctx.phi_prod, ctx.unit)


def cp_form(ctx, T):
    """Hermitian form of the block element [T(e_p*, e_q)] of M_d(B) in the GNS picture.

    Q[(p, a), (q, b)] = phi[e_a* T(e_p*, e_q) e_b].  The element is positive in
    M_d(B) exactly when Q is positive semidefinite.
    """
    T = map_to_pair(ctx, T)
    d = ctx.dim
    Q = ctx.zeros((d, d, d, d))
    for p, q in itertools.product(range(d), repeat=2):
        el = np.tensordot(np.tensordot(ctx.star[p], T, axes=(0, 0)), ctx.basis(q), axes=(0, 0))
        # phi[e_a* el e_b] for all a, b
        left = np.tensordot(ctx.star, ctx.mul, axes=(1, 0))          # [a, c, r] e_a* e_c
        sand = np.tensordot(np.tensordot(left, el, axes=(1, 0)), ctx.mul, axes=(1, 0))  # [a, b, s]
        Q[p, :, q, :] = sand @ ctx.phi
    return Q.reshape(d * d, d * d)


def check_cp_level(ctx, T, n, tol=None):
    """Test n-positivity of a map (d x d matrix) or pairing (order-3 tensor).

    For every choice of n basis elements x_1..x_n the matrix [T(x_i* x_j)] is
    tested for positivity in M_n(B) through its GNS Hermitian form, an
    (n d) x (n d) matrix.  Failure at level n implies failure at all higher
    levels.  For n >= d the test uses all basis elements at once, and since
    every positive element of M_k(B) is a sum of scalar compressions of
    [e_p* e_q], that single test certifies complete positivity.
    """
    if n < 1:
        raise ValueError("level must be >= 1")
    tol = ctx.tol if tol is None else tol
    d = ctx.dim
    Q = cp_form(ctx, T).reshape(d, d, d, d)
    subsets = [tuple(range(d))] if n >= d else list(itertools.combinations(range(d), n))
    worst = np.inf
    ok = True
    for S in subsets:
        sub = Q[np.ix_(S, range(d), S, range(d))].reshape(len(S) * d, len(S) * d)
        worst = min(worst, la.min_eigenvalue(sub))
        if not la.is_psd(sub, tol):
            ok = False
    return CPCheck(ok, float(worst), n)


def map_matrix_of_pair(ctx, T):
    """Map x -> T-pair(x, 1) as a d x d matrix (inverse of map_to_pair on maps)."""
    T = map_to_pair(ctx, T)
    return np.tensordot(T, ctx.unit, axes=(1, 0)).T


# ======================================================================
# Norms on B (C*-norm realized by left multiplication in the GNS space)
# ======================================================================

def _gns_factor(ctx):
    P = la.float_array(ctx.gns_gram)
    P = (P + P.conj().T) / 2
    return np.linalg.cholesky(P).conj().T  # P = R^H R


def gns_operator_norm(ctx, M):
    """Operator norm of a linear map on B with respect to the phi-GNS norm."""
    R = _gns_factor(ctx)
    return la.spectral_norm(R @ la.float_array(M) @ np.linalg.inv(R))


def gns_norm(ctx, x):
    return float(np.sqrt(max(0.0, np.real(la.float_array(ctx.inner(x, x))))))


def cstar_norm(ctx, x):
    """C*-norm of x: the norm of left multiplication on the GNS space."""
    return gns_operator_norm(ctx, ctx.left_mult(x))


def minimal_idempotents(ctx):
    """Columns: coefficient vectors of the minimal projections of a commutative B."""
    if not ctx.is_commutative:
        raise InvalidAlgebra("minimal idempotents requested for a noncommutative algebra")
    rng = np.random.default_rng(12345)
    d = ctx.dim
    fctx = ctx.with_mode(False)
    g = sum(rng.normal() * fctx.basis(i) for i in range(d))
    g = g + fctx.star_of(g)
    w, V = np.linalg.eig(fctx.left_mult(g))
    cols = []
    for k in range(d):
        v = V[:, k]
        sq = fctx.prod(v, v)
        # v^2 = mu v
        idx = np.argmax(np.abs(v))
        mu = sq[idx] / v[idx]
        cols.append(v / mu)
    E = np.array(cols).T
    if np.max(np.abs(E.imag)) < 1e-10:
        E = E.real
    return E


def map_norm(ctx, T):
    """C*-to-C* operator norm of a linear map on B.

    Returns ``(value, exact)``.  For commutative B the value is exact (max row
    sum in minimal-idempotent coordinates).  Otherwise an upper bound obtained
    from the basis expansion is returned with ``exact = False``.
    """
    T = la.float_array(T)
    fctx = ctx.with_mode(False)
    if fctx.is_commutative:
        E = minimal_idempotents(fctx)
        Tc = np.linalg.solve(E, T @ E)
        return float(np.max(np.sum(np.abs(Tc), axis=1))), True
    return _basis_bound(fctx, [T @ fctx.basis(p) for p in range(fctx.dim)],
                        lambda el: cstar_norm(fctx, el)), False


def _basis_bound(fctx, images, norm):
    P = la.float_array(fctx.gns_gram)
    phi1 = float(np.real(fctx.phi_of(fctx.unit)))
    total = 0.0
    for p, img in enumerate(images):
        # coefficient functional x -> x_p equals <x, y_p> with y_p = P^{-1}-dual
        y = np.linalg.solve(P.conj().T, np.eye(fctx.dim)[p])
        kappa = np.sqrt(max(0.0, np.real(y.conj() @ P @ y))) * np.sqrt(phi1)
        total += kappa * norm(img)
    return float(total)


def lambda_norm(ctx):
    """Norm of Lambda: sup ||a0(b)||_GNS-op / ||b||.  Returns ``(value, exact)``."""
    fctx = ctx.with_mode(False)
    if ctx.lambda_kind == "left-multiplier":
        return map_norm(fctx, fctx.lambda_map)
    if fctx.is_commutative:
        E = minimal_idempotents(fctx)
        return float(sum(gns_operator_norm(fctx, fctx.a0_matrix(E[:, k]))
                         for k in range(fctx.dim))), False
    return _basis_bound(fctx, [fctx.a0_matrix(fctx.basis(p)) for p in range(fctx.dim)],
                        lambda M: gns_operator_norm(fctx, M)), False


def gamma_phi_norm(ctx):
    """||gamma + phi|| as a map on B.  For a completely positive map this is
    ||(gamma+phi)(1)|| (Russo-Dye), which is what is returned when the map
    passes the CP test; otherwise the general map norm."""
    fctx = ctx.with_mode(False)
    if check_cp_level(fctx, fctx.total_pair_tensor, fctx.dim):
        return cstar_norm(fctx, fctx.pair_total(fctx.unit, fctx.unit))
    T = map_matrix_of_pair(fctx, fctx.total_pair_tensor)
    return map_norm(fctx, T)[0]


def gamma_phi_gns_norm(ctx):
    """Operator norm of gamma+phi between phi-GNS norms (reported alongside)."""
    fctx = ctx.with_mode(False)
    return gns_operator_norm(fctx, map_matrix_of_pair(fctx, fctx.total_pair_tensor))


# ======================================================================
# Constructors
# ======================================================================

def _num(x, exact):
    return la.exact_array(x) if exact else la.float_array(x)


def commutative_algebra(weights, exact=True):
    """B = C^d with minimal projections as basis and phi[p_k] = weights[k].

    Returns ``(mul, star, unit, phi)``.
    """
    w = _num(weights, exact)
    d = len(w)
    mul = la.zeros((d, d, d), exact)
    for k in range(d):
        mul[k, k, k] = 1
    star = la.eye(d, exact)
    unit = _num([1] * d, exact)
    return mul, star, unit, w


def matrix_algebra(k, rho=None, exact=True):
    """B = M_k with matrix units E_ab (index a*k + b), phi = Tr(rho .)."""
    rho = [[Fraction(int(i == j), k) for j in range(k)] for i in range(k)] if rho is None else rho
    rho = _num(rho, exact)
    d = k * k
    mul = la.zeros((d, d, d), exact)
    star = la.zeros((d, d), exact)
    unit = la.zeros(d, exact)
    phi = la.zeros(d, exact, np.iscomplexobj(rho) and not exact)
    for a, b in itertools.product(range(k), repeat=2):
        i = a * k + b
        star[i, b * k + a] = 1
        phi[i] = rho[b, a]
        if a == b:
            unit[i] = 1
        for c in range(k):
            mul[i, b * k + c, a * k + c] = 1
    return mul, star, unit, phi


def make_context(mul, star, unit, phi, gamma=None, lam=None, lambda_map=None,
                 gamma_pair=None, name="", params=None, exact=None, tol=la.DEFAULT_TOL):
    """Assemble a context; ``lambda_map`` given without ``lam`` means left-multiplier."""
    if exact is None:
        exact = la.is_exact(mul)
    conv = (lambda a: _num(a, exact))
    mul, star, unit, phi = conv(mul), conv(star), conv(unit), conv(phi)
    d = len(unit)
    gamma = la.zeros((d, d), exact) if gamma is None else conv(gamma)
    kind = "general"
    if lambda_map is not None:
        lambda_map = conv(lambda_map)
        kind = "left-multiplier"
        lam_built = _lm_tensor(mul, lambda_map)
        if lam is not None and not la.is_zero(conv(lam) - lam_built):
            raise InvalidAlgebra("lambda tensor disagrees with lambda_map")
        lam = lam_built
    lam = la.zeros((d, d, d), exact) if lam is None else conv(lam)
    if gamma_pair is not None:
        gamma_pair = conv(gamma_pair)
    return AlgebraContext(mul=mul, star=star, unit=unit, phi=phi, gamma=gamma, lam=lam,
                          lambda_kind=kind, lambda_map=lambda_map, gamma_pair=gamma_pair,
                          name=name, params=params or {}, tol=tol)


def _lm_tensor(mul, lambda_map):
    # Lambda(e_i (x) e_j) = Lambda(e_i) e_j
    return np.tensordot(lambda_map.T, mul, axes=(1, 0))


def transform_basis(ctx, A):
    """Re-express ``ctx`` in the basis f_i = sum_k A[i, k] e_k."""
    A = ctx.coerce(A)
    Ainv_T = la.inverse(A).T
    d = ctx.dim

    def new(v):
        return Ainv_T @ v

    mul = la.zeros((d, d, d), ctx.exact)
    lam = la.zeros((d, d, d), ctx.exact)
    gp = None if ctx.gamma_pair is None else la.zeros((d, d, d), ctx.exact)
    star = la.zeros((d, d), ctx.exact)
    for i in range(d):
        star[i] = new(ctx.star_of(A[i]))
        for j in range(d):
            mul[i, j] = new(ctx.prod(A[i], A[j]))
            lam[i, j] = new(ctx.lam_of(A[i], A[j]))
            if gp is not None:
                gp[i, j] = new(ctx.pair_gamma(A[i], A[j]))
    lm = None if ctx.lambda_map is None else Ainv_T @ ctx.lambda_map @ A.T
    params = dict(ctx.params)
    for key in ("eta", "lam_el"):
        if key in params:
            params[key] = new(params[key])
    return AlgebraContext(mul=mul, star=star, unit=new(ctx.unit), phi=A @ ctx.phi,
                          gamma=Ainv_T @ ctx.gamma @ A.T, lam=lam,
                          lambda_kind=ctx.lambda_kind, lambda_map=lm, gamma_pair=gp,
                          name=ctx.name, params=params, tol=ctx.tol)


def scalar_context(t, lam, exact=True):
    """The one-dimensional algebra with phi[1] = 1, gamma[1] = t, Lambda(1 (x) 1) = lam."""
    mul, star, unit, phi = commutative_algebra([1], exact)
    return make_context(mul, star, unit, phi, gamma=[[t]], lambda_map=[[lam]],
                        name=f"scalar(t={t}, lambda={lam})",
                        params={"family": "bozejko", "eta": _num([t], exact),
                                "lam_el": _num([lam], exact)})


# ======================================================================
# Catalog
# ======================================================================

CATALOG = ("bozejko", "lenczewski_discrete", "ma", "scalar_gamma", "poisson")


def _weights(params, m, exact):
    if "phi" in params:
        w = _num(params["phi"], exact)
        if len(w) != m:
            raise InvalidAlgebra("phi weights have wrong length")
        return w
    return _num([Fraction(1, m)] * m, exact) if exact else np.full(m, 1.0 / m)


def load_example(name, params=None, validate=True):
    """Build a catalog context.

    ``params`` may contain ``mode`` ('rational' or 'float').  Parameters are
    rationals/strings in rational mode.  The returned context is validated
    unless ``validate=False`` (used to build deliberate counterexamples).
    """
    params = dict(params or {})
    exact = params.pop("mode", "rational") != "float"
    conv = (lambda a: _num(a, exact))
    if name == "bozejko":
        eta = conv(np.atleast_1d(params.get("eta", [1])))
        lam = conv(np.atleast_1d(params.get("lam", [0])))
        m = len(eta)
        if len(lam) != m:
            raise InvalidAlgebra("eta and lam must have the same length")
        if any(x < 0 for x in la.float_array(eta).real):
            raise InvalidAlgebra("eta must be positive (entrywise >= 0)")
        mul, star, unit, phi = commutative_algebra(_weights(params, m, exact), exact)
        ctx = make_context(mul, star, unit, phi, gamma=np.diag(eta), lambda_map=np.diag(lam),
                           name="bozejko", params={"family": "bozejko", "eta": eta,
                                                   "lam_el": lam}, exact=exact)
    elif name == "lenczewski_discrete":
        w = conv(params["w"])
        m = int(params.get("m", w.shape[0]))
        if w.shape != (m, m):
            raise InvalidAlgebra("w must be an m x m array")
        if any(x < -1 for x in la.float_array(w).flat):
            raise InvalidAlgebra("w + 1 must be entrywise >= 0")
        lk = conv(params["lam"]) if "lam" in params else la.zeros((m, m), exact)
        step = Fraction(1, m) if exact else 1.0 / m
        mul, star, unit, phi = commutative_algebra(_weights({}, m, exact), exact)
        ctx = make_context(mul, star, unit, phi, gamma=w * step, lambda_map=lk * step,
                           name="lenczewski_discrete", exact=exact,
                           params={"family": "lenczewski", "w": w})
    elif name == "ma":
        C = conv(params.get("C", [[0, 0], [0, 0]]))
        d = C.shape[0]
        B = conv(params["B"]) if "B" in params else la.zeros((d, d, d), exact)
        mul, star, unit, _ = commutative_algebra([1] * d, exact)
        ctx = make_context(mul, star, unit, conv([1] * d), gamma=C, lam=B, name="ma",
                           exact=exact, params={"family": "ma"})
    elif name == "scalar_gamma":
        psi = conv(np.atleast_1d(params.get("psi", [0])))
        m = len(psi)
        w = _weights(params, m, exact) if m > 1 or "phi" in params else conv([1])
        mul, star, unit, phi = commutative_algebra(w, exact)
        lm = params.get("lam")
        lam_map = None
        if lm is not None:
            lm = conv(lm)
            lam_map = np.diag(lm) if lm.ndim == 1 else lm
        ctx = make_context(mul, star, unit, phi, gamma=np.outer(unit, psi),
                           lambda_map=lam_map, name="scalar_gamma", exact=exact,
                           params={"family": "scalar_gamma", "psi": psi})
    elif name == "poisson":
        if params.get("algebra") == "matrix":
            k = int(params.get("k", 2))
            mul, star, unit, phi = matrix_algebra(k, params.get("rho"), exact)
        else:
            d = int(params.get("d", 1))
            mul, star, unit, phi = commutative_algebra(_weights(params, d, exact), exact)
        d = len(unit)
        ctx = make_context(mul, star, unit, phi, lambda_map=la.eye(d, exact), name="poisson",
                           exact=exact, params={"family": "poisson"})
    else:
        raise InvalidAlgebra(f"unknown example {name!r}; choose from {CATALOG}")
    if validate:
        rep = validate_algebra(ctx)
        if not rep.passed:
            names = ", ".join(c.name for c in rep.failures())
            raise InvalidAlgebra(f"{name}: invalid parameters ({names})")
    return ctx


def kesten_kernel(p, q, m, exact=True):
    """Step kernel with value p above the diagonal, q below, 1 on it."""
    w = [[p if s < t else q if t < s else 1 for t in range(m)] for s in range(m)]
    return _num(w, exact)


# ======================================================================
# Random contexts (test sweeps)
# ======================================================================

def _rand_rat(rng, lo, hi, den=4):
    return Fraction(int(rng.integers(lo * den, hi * den + 1)), den)


def random_context(rng, d, exact=True, kind="left", cp_margin=Fraction(9, 10)):
    """Random commutative context of dimension d in a random rational basis.

    kind='left': left-multiplier Lambda and a general gamma;
    kind='general': general Lambda satisfying the adjointness relations, with
    gamma = phi(.) g.  In both cases gamma + cp_margin*phi is positive, so the
    Fock inner product is non-degenerate.
    """
    r = (lambda lo, hi: _rand_rat(rng, lo, hi)) if exact else (lambda lo, hi: float(rng.uniform(lo, hi)))
    w = [r(1, 3) / 2 for _ in range(d)]
    mul, star, unit, phi = commutative_algebra(w, exact)
    wv = _num(w, exact)
    if kind == "left":
        G = np.array([[r(-1, 1) for _ in range(d)] for _ in range(d)], dtype=object)
        for k, l in itertools.product(range(d), repeat=2):
            floor = -cp_margin * wv[l]
            if G[k, l] < floor:
                G[k, l] = floor
        G = _num(G, exact)
        lm = _num([[r(-1, 1) for _ in range(d)] for _ in range(d)], exact)
        ctx = make_context(mul, star, unit, phi, gamma=G, lambda_map=lm, exact=exact,
                           name=f"random-left-{d}")
    elif kind == "general":
        g = [max(r(-1, 1), -cp_margin) for _ in range(d)]
        G = np.outer(_num(g, exact), wv)
        Ssym = np.empty((d, d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                for l in range(j, d):
                    Ssym[i, j, l] = Ssym[i, l, j] = r(-1, 1)
        L = np.empty((d, d, d), dtype=object)
        for i, j, l in itertools.product(range(d), repeat=3):
            L[i, j, l] = Ssym[i, j, l] / wv[l]
        ctx = make_context(mul, star, unit, phi, gamma=G, lam=_num(L, exact), exact=exact,
                           name=f"random-general-{d}")
    else:
        raise ValueError(kind)
    while True:
        A = _num([[int(rng.integers(-2, 3)) for _ in range(d)] for _ in range(d)], exact)
        if abs(np.linalg.det(la.float_array(A))) > 0.5:
            break
    return transform_basis(ctx, A)


def random_matrix_context(rng, k=2, tracial=False):
    """Random float context on M_k: gamma = Kraus map - s*phi, Lambda left-multiplier."""
    if tracial:
        rho = np.eye(k) / k
    else:
        x = rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k))
        rho = x @ x.conj().T + 0.5 * np.eye(k)
        rho /= np.trace(rho).real
    mul, star, unit, phi = matrix_algebra(k, rho, exact=False)
    d = k * k
    Ks = [rng.normal(size=(k, k)) * 0.5 for _ in range(2)]
    s = 0.5

    def mat(i):
        M = np.zeros((k, k))
        M[divmod(i, k)] = 1
        return M

    def vec(M):
        return M.reshape(-1)

    G = np.zeros((d, d), dtype=complex)
    for i in range(d):
        Ei = mat(i)
        img = sum(K @ Ei @ K.T for K in Ks) - s * np.trace(rho @ Ei) * np.eye(k)
        G[:, i] = vec(img)
    # Lambda: a *-preserving map, b -> A b A^* + (A^* b A)
    A = rng.normal(size=(k, k)) * 0.5
    LM = np.zeros((d, d))
    for i in range(d):
        LM[:, i] = vec(A @ mat(i) @ A.T + A.T @ mat(i) @ A)
    return make_context(mul, star, unit, phi.astype(complex), gamma=G, lambda_map=LM,
                        exact=False, name=f"random-matrix-{k}")


# ======================================================================
# JSON
# ======================================================================

def _parse_entry(x, exact):
    if exact:
        return la.to_fraction(x)
    if isinstance(x, str):
        return float(Fraction(x))
    return x


def _parse_array(a, exact):
    a = np.array(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        out[idx] = _parse_entry(x, exact)
    return out if exact else la.float_array(out)


def _has_float(obj):
    if isinstance(obj, float):
        return True
    if isinstance(obj, list):
        return any(_has_float(x) for x in obj)
    return False


def from_dict(spec, mode=None):
    required = ("dim", "mul", "star", "unit", "phi", "gamma", "lambda")
    missing = [k for k in required if k not in spec]
    if missing:
        raise InvalidAlgebra(f"spec missing fields: {missing}")
    if mode is None:
        mode = "float" if any(_has_float(spec[k]) for k in required[1:]) else "rational"
    exact = mode == "rational"
    try:
        arrays = {k: _parse_array(spec[k], exact) for k in required[1:]}
    except ValueError as exc:
        raise InvalidAlgebra(f"ragged or malformed tensor: {exc}") from exc
    d = int(spec["dim"])
    if arrays["unit"].shape != (d,):
        raise InvalidAlgebra("dimension mismatch: unit length differs from dim")
    kind = spec.get("lambda_kind", "general")
    lm = spec.get("lambda_map")
    lm = _parse_array(lm, exact) if lm is not None else None
    if kind == "left-multiplier" and lm is None:
        # recover the map from Lambda(e_i (x) 1)
        unit = arrays["unit"]
        lm = np.tensordot(arrays["lambda"], unit, axes=(1, 0)).T
    gp = spec.get("gamma_pair")
    gp = _parse_array(gp, exact) if gp is not None else None
    return AlgebraContext(mul=arrays["mul"], star=arrays["star"], unit=arrays["unit"],
                          phi=arrays["phi"], gamma=arrays["gamma"], lam=arrays["lambda"],
                          lambda_kind=kind, lambda_map=lm if kind == "left-multiplier" else None,
                          gamma_pair=gp, name=spec.get("name", ""),
                          tol=float(spec.get("tol", la.DEFAULT_TOL)))


def _encode(a):
    a = np.asarray(a)
    if a.dtype == object:
        return np.vectorize(lambda x: str(x), otypes=[object])(a).tolist()
    if np.iscomplexobj(a):
        if np.max(np.abs(a.imag)) > 0:
            raise InvalidAlgebra("complex entries cannot be written to JSON")
        a = a.real
    return a.tolist()


def to_dict(ctx):
    out = {"dim": ctx.dim, "mul": _encode(ctx.mul), "star": _encode(ctx.star),
           "unit": _encode(ctx.unit), "phi": _encode(ctx.phi), "gamma": _encode(ctx.gamma),
           "lambda": _encode(ctx.lam), "lambda_kind": ctx.lambda_kind}
    if ctx.lambda_map is not None:
        out["lambda_map"] = _encode(ctx.lambda_map)
    if ctx.gamma_pair is not None:
        out["gamma_pair"] = _encode(ctx.gamma_pair)
    if ctx.name:
        out["name"] = ctx.name
    return out


def load_spec(path, mode=None):
    with open(path) as fh:
        text = fh.read()
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidAlgebra(f"spec parse error at line {exc.lineno}, column {exc.colno}: "
                             f"{exc.msg}") from exc
    return from_dict(spec, mode)
