"""Small numeric helpers shared by exact (Fraction) and float arithmetic.

Exact arrays are numpy arrays of dtype ``object`` holding ``fractions.Fraction``
entries; float arrays are ``float64`` or ``complex128``.  Most routines in the
package are written once against numpy's generic array operations and work in
either mode.
"""

from fractions import Fraction

import math

import numpy as np
import scipy.linalg as sla

DEFAULT_TOL = 1e-9
KERNEL_TOL = 1e-10


def to_fraction(x):
    """Parse ints, Fractions and strings such as ``"3/2"`` into a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x)).limit_denominator(10**12)
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def exact_array(a):
    a = np.asarray(a, dtype=object)
    out = np.empty(a.shape, dtype=object)
    for idx, x in np.ndenumerate(a):
        out[idx] = to_fraction(x)
    return out


def float_array(a):
    a = np.asarray(a)
    if a.dtype == object:
        if any(isinstance(x, complex) for x in a.flat):
            return a.astype(complex)
        return a.astype(float)
    if np.iscomplexobj(a):
        return a.astype(complex)
    return a.astype(float)


def is_exact(a):
    return np.asarray(a).dtype == object


def like(value, ref):
    """Coerce ``value`` to the arithmetic mode of ``ref``."""
    return exact_array(value) if is_exact(ref) else float_array(value)


def zeros(shape, exact, cplx=False):
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=complex if cplx else float)


def eye(n, exact):
    out = zeros((n, n), exact)
    for i in range(n):
        out[i, i] = Fraction(1) if exact else 1.0
    return out


def conj(a):
    a = np.asarray(a)
    if a.dtype == object or not np.iscomplexobj(a):
        return a
    return np.conj(a)


def dagger(a):
    return conj(np.asarray(a)).T


def max_abs(a):
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    if a.dtype == object:
        return float(max(abs(x) for x in a.flat))
    return float(np.max(np.abs(a)))


def is_zero(a, tol=DEFAULT_TOL, scale=1.0):
    a = np.asarray(a)
    if a.dtype == object:
        return all(x == 0 for x in a.flat)
    return max_abs(a) <= tol * max(1.0, scale)


def hermitian_part(a):
    a = float_array(a)
    return (a + dagger(a)) / 2


def min_eigenvalue(a):
    a = hermitian_part(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(a)[0])


def psd_exact(a):
    """Exact positive-semidefiniteness test for a symmetric rational matrix.

    Symmetric Gaussian elimination: a negative pivot refutes PSD, a zero
    diagonal forces the whole row to vanish.
    """
    m = [list(row) for row in np.asarray(a, dtype=object)]
    n = len(m)
    for i in range(n):
        for j in range(n):
            if m[i][j] != m[j][i]:
                return False
    active = list(range(n))
    while active:
        if any(m[i][i] < 0 for i in active):
            return False
        piv = next((i for i in active if m[i][i] > 0), None)
        if piv is None:
            return all(m[i][j] == 0 for i in active for j in active)
        active.remove(piv)
        p = m[piv][piv]
        for i in active:
            f = m[i][piv] / p
            if f == 0:
                continue
            for j in active:
                m[i][j] -= f * m[piv][j]
    return True


def is_psd(a, tol=DEFAULT_TOL):
    if is_exact(a):
        return psd_exact(a)
    a = float_array(a)
    scale = max(1.0, max_abs(a))
    return min_eigenvalue(a) >= -tol * scale


def is_positive_definite(a, tol=DEFAULT_TOL):
    if is_exact(a):
        n = np.asarray(a).shape[0]
        return psd_exact(a) and exact_rank(a) == n
    a = float_array(a)
    scale = max(1.0, max_abs(a))
    return min_eigenvalue(a) > tol * scale


def _sympy_matrix(a):
    import sympy

    a = np.asarray(a, dtype=object)
    return sympy.Matrix(a.shape[0], a.shape[1],
                        [sympy.Rational(x.numerator, x.denominator) for x in a.flat])


def _from_sympy(m):
    return np.array([[Fraction(int(x.p), int(x.q)) for x in row]
                     for row in m.tolist()], dtype=object).reshape(m.shape)


def exact_rank(a):
    a = np.asarray(a, dtype=object)
    if a.size == 0:
        return 0
    return int(_sympy_matrix(a).rank())


def nullspace(a, tol=KERNEL_TOL):
    """Columns spanning the right kernel of ``a``."""
    a = np.asarray(a)
    n = a.shape[1]
    if a.dtype == object:
        if a.shape[0] == 0:
            return eye(n, True)
        vecs = _sympy_matrix(a).nullspace()
        if not vecs:
            return zeros((n, 0), True)
        return np.hstack([_from_sympy(v) for v in vecs])
    if a.shape[0] == 0:
        return np.eye(n)
    return sla.null_space(float_array(a), rcond=tol)


def column_space(a, tol=KERNEL_TOL):
    a = np.asarray(a)
    if a.dtype == object:
        if a.size == 0:
            return zeros((a.shape[0], 0), True)
        cols = _sympy_matrix(a).columnspace()
        if not cols:
            return zeros((a.shape[0], 0), True)
        return np.hstack([_from_sympy(v) for v in cols])
    if a.size == 0:
        return np.zeros((a.shape[0], 0))
    return sla.orth(float_array(a), rcond=tol)


def solve(a, b):
    if is_exact(a) or is_exact(b):
        sol = _sympy_matrix(exact_array(a)).LUsolve(_sympy_matrix(exact_array(b).reshape(len(b), -1)))
        return _from_sympy(sol).reshape(np.asarray(b).shape)
    return np.linalg.solve(float_array(a), float_array(b))


def inverse(a):
    if is_exact(a):
        return _from_sympy(_sympy_matrix(a).inv())
    return np.linalg.inv(float_array(a))


_NUM = np.frompyfunc(lambda x: x.numerator, 1, 1)
_DEN = np.frompyfunc(lambda x: x.denominator, 1, 1)


def _scaled_ints(a):
    """Integer array and common denominator with a == ints / den."""
    dens = _DEN(a)
    den = math.lcm(*set(dens.flat)) if a.size else 1
    return _NUM(a) * (den // dens), den


def matmul(a, b):
    """a @ b; exact operands are multiplied as scaled integers, which is much
    faster than elementwise Fraction arithmetic."""
    if not (is_exact(a) and is_exact(b)):
        if is_exact(a):
            a = float_array(a)
        if is_exact(b):
            b = float_array(b)
        return a @ b
    if a.size == 0 or b.size == 0:
        return zeros(a.shape[:-1] + b.shape[1:], True)
    ai, da = _scaled_ints(a)
    bi, db = _scaled_ints(b)
    amax = max(abs(x) for x in ai.flat)
    bmax = max(abs(x) for x in bi.flat)
    if amax < 2 ** 62 and bmax < 2 ** 62 and amax * bmax * a.shape[-1] < 2 ** 62:
        ci = ai.astype(np.int64) @ bi.astype(np.int64)
    else:
        ci = ai @ bi
    return _from_ints(ci, da * db)


def _from_ints(ci, den):
    if np.ndim(ci) == 0:
        return Fraction(int(ci), den)
    return np.frompyfunc(lambda x: Fraction(int(x), den), 1, 1)(ci).astype(object)


def add(a, b, cb=1):
    """a + cb * b for an integer cb, through scaled integers in exact mode."""
    if not (is_exact(a) and is_exact(b)):
        return float_array(a) + cb * float_array(b) if (is_exact(a) or is_exact(b)) else a + cb * b
    ai, da = _scaled_ints(a)
    bi, db = _scaled_ints(b)
    den = da * db // math.gcd(da, db)
    return _from_ints(ai * (den // da) + bi * (cb * (den // db)), den)


def kron_eye(small, n):
    """np.kron(small, eye(n)) without arithmetic (entries are placed, not multiplied)."""
    small = np.asarray(small)
    r, c = small.shape
    if not is_exact(small):
        return np.kron(small, np.eye(n))
    out = zeros((r * n, c * n), True)
    idx = np.arange(n)
    for i in range(r):
        for j in range(c):
            if small[i, j] != 0:
                out[i * n + idx, j * n + idx] = small[i, j]
    return out


def spectral_norm(a):
    a = float_array(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def tensordot(a, b, axes):
    """np.tensordot with the fast exact product; ``axes`` is (list, list) or (int, int)."""
    if not (is_exact(a) and is_exact(b)):
        return np.tensordot(a, b, axes=axes)
    ax_a, ax_b = axes
    ax_a = [ax_a] if np.isscalar(ax_a) else list(ax_a)
    ax_b = [ax_b] if np.isscalar(ax_b) else list(ax_b)
    ax_a = [x % a.ndim for x in ax_a]
    ax_b = [x % b.ndim for x in ax_b]
    free_a = [i for i in range(a.ndim) if i not in ax_a]
    free_b = [i for i in range(b.ndim) if i not in ax_b]
    at = np.transpose(a, free_a + ax_a)
    bt = np.transpose(b, ax_b + free_b)
    k = int(np.prod([a.shape[i] for i in ax_a]))
    shape = [a.shape[i] for i in free_a] + [b.shape[i] for i in free_b]
    prod = matmul(at.reshape(-1, k), bt.reshape(k, -1))
    return prod.reshape(shape)
