"""
Norms, traciality and the C-deformed construction
=================================================

Operator norms in the deformed inner product, the trace conditions on the
vacuum state, and the Fock space built from an operator C on H (x) H.
"""

# %%
from fractions import Fraction as F

import numpy as np

from nnfock import appendix_c as ac
from nnfock.algebra import commutative_algebra, load_example, make_context, scalar_context
from nnfock.fock import build_fock
from nnfock.norms import convergence_radius, r_prime_growth, verify_estimates
from nnfock.trace import check_trace_conditions, poisson_decomposition

# %%
# Creation, annihilation and preservation norms against their bounds.  With
# gamma = -phi/2 the creation operator has norm 1 on the vacuum, above
# sqrt||(gamma+phi)[1]|| = sqrt(1/2); from level 1 on the bound holds.
for r in verify_estimates(build_fock(scalar_context(F(-1, 2), 1), 5)):
    print(f"{r.name:62s} {r.computed:.4f} {r.bound:.4f} {r.ok()}")

# %%
# Growth of R'_n[u] against r_n K'^n ||u||^n and the radius 1/(4K').
ctx = scalar_context(F(1, 2), F(1, 3))
print("radius", convergence_radius(ctx))
for r in r_prime_growth(ctx, [1], 6)[:7]:
    print(r.tags["n"], round(r.computed, 5), round(r.bound, 5))

# %%
# Bozejko contexts have a tracial vacuum state; a left-multiplier Lambda that is
# not a multiple of the product breaks it.
boz = load_example("bozejko", {"eta": ["1/2", "2"], "lam": ["1", "-1/3"]})
print(check_trace_conditions(build_fock(boz, 5), 5).to_dict())
mul, star, unit, phi = commutative_algebra([F(1, 3), F(2, 3)], True)
bad = make_context(mul, star, unit, phi, lambda_map=[[1, 2], [0, -1]])
rep = check_trace_conditions(build_fock(bad, 5), 5)
print(rep.conditions_hold, rep.commute, rep.cyclicity)

# %%
# gamma = 0 with Lambda the product on e_1 only: B splits into a semicircular
# part and a Poisson part.
split = make_context(*commutative_algebra([F(1, 2), F(1, 2)], True), lambda_map=[[1, 0], [0, 0]])
Z, P, rep = poisson_decomposition(build_fock(split, 5), 5)
print(rep.dims, rep.passed)

# %%
# The C-construction with a diagonal C: Grams are products of (1 + C_ij).
cc = ac.diagonal_c([[F(1, 2), F(-1, 3)], [F(1, 4), 0]], N=4)
print(np.diag(cc.gram(3)))
f = np.array([F(1), F(1, 2)])
print("moments", [ac.moment_c(cc, [f] * k) for k in range(7)])
print("R' recursion vs definition", ac.r_prime_consistency_c(cc, f, 2))

# %%
# A Lenczewski kernel seen as a C-construction: same Grams, same moments.
lz = load_example("lenczewski_discrete", {"w": [["1/2", "1/4"], ["1/4", "1"]]})
cl, Q = ac.from_algebra_context(lz, N=4)
print("Gram residual", ac.bridge_gram_residual(lz, cl, Q))
