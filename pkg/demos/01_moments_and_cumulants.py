"""
Moments and cumulants on a deformed Fock space
==============================================

Build a small context, compute vacuum moments two ways, and read off free
and Boolean cumulants.
"""

# %%
# The one-dimensional algebra: phi[1] = 1, gamma[1] = t, Lambda(1 (x) 1) = lam.
# X(1) is then a tridiagonal (Jacobi) operator on the truncated Fock space.
from fractions import Fraction as F

import numpy as np

from nnfock.algebra import load_example, random_context, scalar_context
from nnfock.cumulants import boolean_cumulant, free_cumulant, moment_partition_sum
from nnfock.fock import build_fock, moment, x_op

t, lam = F(1, 3), F(2, 5)
fc = build_fock(scalar_context(t, lam), 6)
print(x_op(fc, [1]).dense()[:4, :4])

# %%
# Vacuum moments <X^n Omega, Omega> from operator products, next to the sum
# over non-crossing partitions without singletons.
for n in range(7):
    print(n, moment(fc, [[1]] * n), moment_partition_sum(fc, [[1]] * n))

# %%
# Cumulants in closed form: R_4 = lam^2 + t and B_4 = lam^2 + 1 + t.
print("R_4", free_cumulant(fc, [[1]] * 4), lam ** 2 + t)
print("B_4", boolean_cumulant(fc, [[1]] * 4), lam ** 2 + 1 + t)

# %%
# lam = 1, t = 0 gives the centered free Poisson law: every free cumulant of
# order >= 2 equals 1.
poisson = build_fock(load_example("poisson"), 6)
print([moment(poisson, [[1]] * n) for n in range(7)])
print([free_cumulant(poisson, [[1]] * n) for n in range(2, 7)])

# %%
# A two-dimensional commutative algebra in a random rational basis, with a
# general Lambda.  Mixed moments of X(e_1), X(e_2) still agree between the two
# routes.
ctx = random_context(np.random.default_rng(0), 2, kind="general")
fc2 = build_fock(ctx, 5)
e = [ctx.basis(0), ctx.basis(1)]
word = [e[0], e[1], e[1], e[0], e[1]]
print(moment(fc2, word), moment_partition_sum(fc2, word))
print("free cumulant", free_cumulant(fc2, word))
