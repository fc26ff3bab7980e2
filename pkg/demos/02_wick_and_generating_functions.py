"""
Wick polynomials, R' and generating functions
=============================================

Wick polynomials send the vacuum to simple tensors.  The B-valued series R'
organizes the free cumulants, and both satisfy recursions that are checked
degree by degree.
"""

# %%
from fractions import Fraction as F

from nnfock.algebra import load_example, scalar_context
from nnfock.cumulants import cumulant_gf_residual, r_prime_recursive, r_prime_series
from nnfock.fock import OperatorMatrix, build_fock, x_op
from nnfock.wick import (pseudo_orthogonality_residual, resolvent_residual,
                         vacuum_property_residual, wick_expansion, wick_poly)

t, lam = F(1, 3), F(2, 5)
ctx = scalar_context(t, lam)
fc = build_fock(ctx, 7)

# %%
# W(1, 1) = X^2 - lam X - 1 in the scalar case.
X = x_op(fc, [1])
W2 = wick_poly(fc, [[1], [1]])
print((W2 - (X @ X - lam * X - OperatorMatrix.identity(7, 1))).max_abs())
for coef, word in wick_expansion(ctx, [[1]] * 3):
    print(coef, len(word))

# %%
# W(u_1..u_n) Omega = u_1 (x) ... (x) u_n, and words of different length give
# orthogonal vectors.
boz = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "-1/3"]})
fb = build_fock(boz, 4)
e = [boz.basis(0), boz.basis(1)]
print(vacuum_property_residual(fb, [e[0], e[1], e[1]]))
print(pseudo_orthogonality_residual(fb, [[], [e[0]], [e[1], e[0]], [e[0], e[0], e[1]]]))

# %%
# The resolvent identity for sum_n W_n(u), checked degree by degree.
rep = resolvent_residual(fc, [1], 6)
print("residuals", rep.residuals, "b(u) =", rep.b)

# %%
# R'_n[u] from its definition and from the recursion, and the generating
# function residuals up to degree 8.
D = r_prime_series(ctx, [1], 6)
print([D[n][0, 0] for n in range(7)])
print([r_prime_recursive(ctx, [1], n)[0, 0] for n in range(7)])
print(cumulant_gf_residual(ctx, [1], 8).main)
