"""Deformed operator norms on the truncated Fock space and the norm
inequalities for creation/annihilation/preservation operators, Wick
polynomials, band matrices and the R' generating function.

Norms on B are C*-norms (left multiplication in the GNS representation); map
norms are C*-to-C* operator norms, exact for commutative B and upper bounds
otherwise (see :func:`nnfock.algebra.map_norm`).
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import _linalg as la
from .algebra import (cstar_norm, gamma_phi_gns_norm, gamma_phi_norm, lambda_norm, map_norm)
from .cumulants import r_prime_series
from .fock import OperatorMatrix, a_minus, a_plus, a_zero
from .partitions import catalan
from .wick import matricial_cumulants, wick_poly

SLACK_TOL = 1e-9


@dataclass
class NormReport:
    name: str
    computed: float
    bound: float
    tags: dict = field(default_factory=dict)

    @property
    def slack(self):
        return self.bound - self.computed

    def ok(self, tol=SLACK_TOL):
        return self.slack >= -tol * max(1.0, abs(self.bound))

    def to_dict(self):
        return {"name": self.name, "computed": self.computed, "bound": self.bound,
                "slack": self.slack, "ok": self.ok(), **self.tags}


# ======================================================================
# Deformed norms
# ======================================================================

def _dense(op, fc, domain_max, domain_min=0):
    off = op.offsets()
    lo = off[domain_min]
    M = np.zeros((off[-1], off[domain_max + 1] - lo), dtype=complex if fc.cplx else float)
    for (t, s), blk in op.blocks.items():
        if domain_min <= s <= domain_max:
            M[off[t]:off[t + 1], off[s] - lo:off[s + 1] - lo] = la.float_array(blk)
    return M


def _positive_part(G, tol):
    w, V = np.linalg.eigh(la.hermitian_part(G))
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 1.0)
    keep = w > tol * scale
    return V[:, keep] / np.sqrt(w[keep])


def _top_pencil(H, G, tol):
    """Largest eigenpair of the pencil (H, G) on the positive eigenspace of G.

    A positive definite G goes to the Cholesky-based generalized solver, which
    stays accurate for badly conditioned Grams; otherwise G is whitened on its
    positive eigenspace, which quotients out the null vectors.
    """
    H = (H + H.conj().T) / 2
    G = (G + G.conj().T) / 2
    w = np.linalg.eigvalsh(G)
    if w.size == 0:
        return 0.0, None
    if w[0] > tol * max(1.0, w[-1]):
        try:
            k = len(w) - 1
            top, vec = sla.eigh(H, G, subset_by_index=[k, k])
            return max(0.0, float(top[-1])), vec[:, -1]
        except np.linalg.LinAlgError:
            pass
    Q = _positive_part(G, tol)
    if Q.shape[1] == 0:
        return 0.0, None
    top, vec = np.linalg.eigh(Q.conj().T @ H @ Q)
    return max(0.0, float(top[-1])), Q @ vec[:, -1]


def deformed_norm(fc, op, domain_max=None, domain_min=0):
    """sup ||A xi|| / ||xi|| in the deformed norm over xi in levels domain_min..domain_max,
    the square root of the top eigenvalue of the pencil (M^H G M, G_domain) with
    Gram null vectors quotiented out.  The default domain stops at N-1 so that
    no creation out of level N is lost.

    With an exact real Gram the float eigenvalue is replaced by the exact
    Rayleigh quotient at the float eigenvector, which is accurate to second order.
    """
    domain_max = fc.N - 1 if domain_max is None else domain_max
    M = _dense(op, fc, domain_max, domain_min) if isinstance(op, OperatorMatrix) else la.float_array(op)
    H = M.conj().T @ fc.gram_dense() @ M
    lo = OperatorMatrix(fc.N, fc.d).offsets()[domain_min]
    Gd = fc.gram_dense(domain_max)[lo:, lo:]
    val, vec = _top_pencil(H, Gd, fc.kernel_tol)
    if val > 0 and fc.exact and not fc.cplx and isinstance(op, OperatorMatrix):
        val = _exact_rayleigh(fc, op, domain_max, domain_min, np.real(vec))
    return math.sqrt(val)


def _exact_rayleigh(fc, op, domain_max, domain_min, v):
    off = op.offsets()
    lo = off[domain_min]
    v = v / np.max(np.abs(v))
    x = fc.zero_vector()
    for n in range(domain_min, domain_max + 1):
        x[n] = la.exact_array(v[off[n] - lo:off[n + 1] - lo])
    if op.exact:
        y = op.apply(x)
    else:
        y = op.apply([None if z is None else la.float_array(z) for z in x])
        y = [None if z is None else la.exact_array(z) for z in y]
    den = fc.inner(x, x)
    return max(0.0, float(fc.inner(y, y) / den)) if den else 0.0


def undeformed_norm(op, domain_max=None, N=None):
    M = op.dense() if isinstance(op, OperatorMatrix) else op
    return la.spectral_norm(M)


def undeformed_bound(K, X):
    """Compare ||X||_K with sqrt(||X|| ||X*||), X* the adjoint for <., K .>.

    ``K`` positive definite; X* = K^{-1} X^H K.
    """
    K = la.float_array(K)
    X = la.float_array(X)
    Xs = np.linalg.solve(K, X.conj().T @ K)
    R = np.linalg.cholesky((K + K.conj().T) / 2).conj().T
    computed = la.spectral_norm(R @ X @ np.linalg.inv(R))
    bound = math.sqrt(la.spectral_norm(X) * la.spectral_norm(Xs))
    return NormReport("deformed norm <= sqrt(||X|| ||X*||)", computed, bound)


def float_fock(fc):
    """Float copy of an exact Fock context, cached on it.  Norms are computed
    in float anyway, and float operators are much cheaper to build."""
    if not fc.exact:
        return fc
    if getattr(fc, "_float_copy", None) is None:
        fc._float_copy = type(fc)(fc.ctx.with_mode(False), fc.N, fc.kernel_tol)
    return fc._float_copy


# ======================================================================
# Estimates for the generators
# ======================================================================

def verify_estimates(fc, elements=None):
    """Norm reports for a+, a-, a0 of each basis element (or the given elements)."""
    ctx = fc.ctx
    fctx = ctx.with_mode(False)
    gp = gamma_phi_norm(ctx)
    elements = [ctx.basis(i) for i in range(ctx.dim)] if elements is None else elements
    out = []
    N = fc.N
    lam_norm = lambda_norm(ctx)[0] if ctx.lambda_kind == "left-multiplier" else None
    for b in elements:
        b = ctx.coerce(b)
        fb = la.float_array(b)
        bn = cstar_norm(fctx, fb)
        bs = ctx.star_of(b)
        elem = cstar_norm(fctx, fctx.pair_total(fctx.star_of(fb), fb))
        phibb = float(np.real(fctx.phi_of(fctx.prod(fctx.star_of(fb), fb))))
        ap = deformed_norm(fc, a_plus(fc, b), N - 1)
        am = deformed_norm(fc, a_minus(fc, bs), N)
        tag = {"element": [str(x) for x in b]}
        out.append(NormReport("||a+(b)|| <= sqrt||(gamma+phi)[b*b]||", ap, math.sqrt(elem), tag))
        out.append(NormReport("||a+(b)|| on levels >= 1 <= sqrt||(gamma+phi)[b*b]||",
                              deformed_norm(fc, a_plus(fc, b), N - 1, 1), math.sqrt(elem), tag))
        out.append(NormReport("||a+(b)|| <= max(sqrt phi[b*b], sqrt||(gamma+phi)[b*b]||)", ap,
                              math.sqrt(max(elem, phibb)), tag))
        out.append(NormReport("sqrt||(gamma+phi)[b*b]|| <= sqrt||gamma+phi|| ||b||",
                              math.sqrt(elem), math.sqrt(gp) * bn, tag))
        out.append(NormReport("| ||a-(b*)|| - ||a+(b)|| | = 0", abs(am - ap), 0.0, tag))
        if lam_norm is not None:
            a0 = deformed_norm(fc, a_zero(fc, b), N)
            out.append(NormReport("||a0(b)|| <= ||Lambda|| ||b||", a0, lam_norm * bn, tag))
    return out


# ======================================================================
# Band matrices over ell^2
# ======================================================================

def first_factor_mult(fc, c):
    """Left multiplication by c on the first tensor factor (0 on Omega)."""
    ctx = fc.ctx
    L = ctx.left_mult(ctx.coerce(c))
    blocks = {(n, n): la.kron_eye(L, fc.d ** (n - 1)) for n in range(1, fc.N + 1)}
    return OperatorMatrix(fc.N, fc.d, blocks, fc.exact, fc.cplx)


def band_norm(fc, T, size, domain_max=None):
    """Deformed norm of the block operator with entries T[(i, k)] on F (x) C^size."""
    domain_max = fc.N - 1 if domain_max is None else domain_max
    off = OperatorMatrix(fc.N, fc.d).offsets()
    nt, nd = off[-1], off[domain_max + 1]
    dt = complex if fc.cplx else float
    M = np.zeros((size * nt, size * nd), dtype=dt)
    for (i, k), op in T.items():
        M[i * nt:(i + 1) * nt, k * nd:(k + 1) * nd] = _dense(op, fc, domain_max)
    H = M.conj().T @ np.kron(np.eye(size), fc.gram_dense()) @ M
    val, _ = _top_pencil(H, np.kron(np.eye(size), fc.gram_dense(domain_max)), fc.kernel_tol)
    return math.sqrt(val)


def diagonal_bound(fc, T, size, domain_max=None):
    """sum over diagonals of the sup of entry norms, against the computed norm."""
    diags = {}
    for (i, k), op in T.items():
        diags.setdefault(k - i, []).append(deformed_norm(fc, op, domain_max))
    bound = sum(max(v) for v in diags.values())
    return NormReport("||T|| <= sum_i sup_k ||T_{k,k+i}||", band_norm(fc, T, size, domain_max),
                      bound, {"diagonals": sorted(diags)})


def y_matrix(fc, us):
    """Y = B - X - I in left-multiplier mode: -(a+ + a-)(u_i) at (i, i+1) and
    (gamma+phi)[u_i u_{i+1}] acting on the first factor at (i, i+2)."""
    ctx = fc.ctx
    us = [ctx.coerce(u) for u in us]
    T = {}
    for i, u in enumerate(us):
        T[(i, i + 1)] = -(a_plus(fc, u) + a_minus(fc, u))
        if i + 1 < len(us):
            T[(i, i + 2)] = first_factor_mult(fc, ctx.pair_total(u, us[i + 1]))
    return T, len(us) + 1


def y_bound_reports(fc, us):
    """Lemma bound and the closed-form 2 sqrt||g+p|| s + ||g+p|| s^2 for Y."""
    fctx = fc.ctx.with_mode(False)
    T, size = y_matrix(fc, us)
    lemma = diagonal_bound(fc, T, size)
    gp = gamma_phi_norm(fc.ctx)
    s = max(cstar_norm(fctx, la.float_array(u)) for u in us)
    closed = 2 * math.sqrt(gp) * s + gp * s * s
    return [lemma, NormReport("||Y|| <= 2 sqrt||g+p|| s + ||g+p|| s^2", lemma.computed, closed,
                              {"lemma_bound": lemma.bound}),
            NormReport("lemma bound <= 2 sqrt||g+p|| s + ||g+p|| s^2", lemma.bound, closed)]


# ======================================================================
# Wick polynomial norms
# ======================================================================

def alpha(j):
    a, b = 0, 1
    if j == 0:
        return 0
    for _ in range(j - 1):
        a, b = b, 2 * b + a
    return b


def alpha_closed(j):
    r = math.sqrt(2)
    return ((1 + r) ** j - (1 - r) ** j) / (2 * r)


def phi_norm(ctx):
    """||phi|| = phi(1) for a positive functional."""
    return float(np.real(ctx.with_mode(False).phi_of(ctx.with_mode(False).unit)))


def wick_norm_bounds(fc, us, corrected=False):
    """||W(u_1..u_n)|| against alpha_n c^{n/2} K prod ||u_i|| (left-multiplier Lambda),
    K = 2 + ||Lambda|| / sqrt(c) + 1 / (2c).

    For n = 1 the bound is (2 sqrt(c) + ||Lambda||) ||u||.  The literal constant is
    c = ||gamma+phi||; ``corrected`` uses c = max(||gamma+phi||, ||phi||), which also
    covers creation out of the vacuum, where ||a+(b) Omega||^2 = phi[b*b].  The norm
    is taken on levels 0..N-n so that no part of W is cut by the truncation.
    """
    ctx = fc.ctx
    if ctx.lambda_kind != "left-multiplier":
        raise ValueError("Wick norm bounds need Lambda(u (x) v) = Lambda(u) v")
    fctx = ctx.with_mode(False)
    n = len(us)
    gp = gamma_phi_norm(ctx)
    if corrected:
        gp = max(gp, phi_norm(ctx))
    label = "max(||g+p||, ||phi||)" if corrected else "||g+p||"
    name = f"||W(u_1..u_{n})|| <= alpha_n {label}^(n/2) K prod||u_i||"
    if gp <= 0:
        return NormReport(name, float("nan"), float("nan"), {"n": n, "skipped": "||g+p|| = 0"})
    lam = lambda_norm(ctx)[0]
    norms = [cstar_norm(fctx, la.float_array(ctx.coerce(u))) for u in us]
    computed = deformed_norm(fc, wick_poly(float_fock(fc), us), fc.N - n)
    prod = float(np.prod(norms))
    if n == 1:
        bound = (2 * math.sqrt(gp) + lam) * prod
    else:
        K = 2 + lam / math.sqrt(gp) + 1 / (2 * gp)
        bound = alpha(n) * gp ** (n / 2) * K * prod
    return NormReport(name, computed, bound, {"n": n})


# ======================================================================
# Convergence of the R' series
# ======================================================================

def r_sequence(n):
    r = [1, 1]
    for k in range(2, n + 1):
        r.append(sum(r[i] * r[k - i - 2] for i in range(k - 1)) + r[k - 1])
    return r[:n + 1]


def k_prime(ctx):
    fctx = ctx.with_mode(False)
    g = map_norm(fctx, la.float_array(fctx.gamma))[0]
    return max(math.sqrt(g), lambda_norm(ctx)[0])


def convergence_radius(ctx):
    """1/(4K') with K' = max(sqrt||gamma||, ||Lambda||); inf when K' = 0."""
    K = k_prime(ctx)
    return math.inf if K == 0 else 1 / (4 * K)


def r_prime_norm(ctx, R):
    """Norm of an R' coefficient: C*-norm of R'[..] 1 in left-multiplier mode
    (R' is then left multiplication by that element), else the map norm."""
    fctx = ctx.with_mode(False)
    if ctx.lambda_kind == "left-multiplier":
        return cstar_norm(fctx, la.float_array(R) @ la.float_array(fctx.unit))
    return map_norm(fctx, R)[0]


def r_prime_growth(ctx, u, max_degree=12):
    """Per-degree ||R'_n[u]|| against r_n K'^n ||u||^n, plus partial sums."""
    fctx = ctx.with_mode(False)
    K = k_prime(ctx)
    un = cstar_norm(fctx, la.float_array(ctx.coerce(u)))
    R = r_prime_series(fctx, la.float_array(ctx.coerce(u)), max_degree)
    r = r_sequence(max_degree)
    reports = []
    for n in range(max_degree + 1):
        reports.append(NormReport(f"||R'_{n}[u]|| <= r_n K'^n ||u||^n", r_prime_norm(fctx, R[n]),
                                  r[n] * K ** n * un ** n, {"n": n}))
    partial = sum(rep.computed for rep in reports)
    bound = sum(rep.bound for rep in reports)
    reports.append(NormReport("sum ||R'_n[u]|| <= sum r_n K'^n ||u||^n", partial, bound))
    return reports


def matricial_gf_bound(fc, us, max_degree=None):
    """sum_{n>=2} ||phi|| r_{n-2} K'^{n-2} s^n against the computed norm of the
    finite-section matrix of scalar cumulants."""
    ctx = fc.ctx
    fctx = ctx.with_mode(False)
    m = len(us)
    max_degree = min(m, fc.N) if max_degree is None else max_degree
    K = k_prime(ctx)
    s = max(cstar_norm(fctx, la.float_array(ctx.coerce(u))) for u in us)
    phi_norm = float(np.real(fctx.phi_of(fctx.unit)))
    r = r_sequence(max_degree)
    bound = sum(phi_norm * r[n - 2] * K ** (n - 2) * s ** n for n in range(2, max_degree + 1))
    Mtot = np.zeros((m + 1, m + 1), dtype=complex if fc.cplx else float)
    for n in range(2, max_degree + 1):
        Mtot = Mtot + la.float_array(matricial_cumulants(fc, us, n))
    return NormReport("||R[U]|| <= sum ||phi|| r_{n-2} K'^{n-2} s^n", la.spectral_norm(Mtot),
                      bound, {"max_degree": max_degree})


def sequences_report(n=12):
    """alpha and r sequences with their closed form / Catalan comparisons."""
    al = [alpha(j) for j in range(n + 1)]
    closed = [alpha_closed(j) for j in range(n + 1)]
    r = r_sequence(n)
    cat = [catalan(k) for k in range(n + 1)]
    return {"alpha": al, "alpha_closed_max_err": max(abs(a - c) for a, c in zip(al, closed)),
            "r": r, "catalan": cat, "r_le_catalan": all(x <= c for x, c in zip(r, cat))}


def norm_reports(fc, family=None):
    """All reports used by the CLI ``norms`` subcommand."""
    ctx = fc.ctx
    out = list(verify_estimates(fc))
    out.append(NormReport("||gamma+phi|| (phi-GNS operator norm, reported)",
                          gamma_phi_gns_norm(ctx), math.inf))
    if ctx.lambda_kind == "left-multiplier":
        fam = family or [ctx.unit, ctx.basis(0)]
        for k in range(1, min(4, fc.N - 1) + 1):
            word = [fam[i % len(fam)] for i in range(k)]
            out.append(wick_norm_bounds(fc, word))
            out.append(wick_norm_bounds(fc, word, corrected=True))
        out.extend(y_bound_reports(fc, fam))
    return out


def warn_if_degenerate(fc):
    for n in range(fc.N + 1):
        if fc.gram_kernel(n).shape[1]:
            warnings.warn(f"degenerate Gram at level {n}: norms computed on the quotient")
