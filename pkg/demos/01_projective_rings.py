# %% [markdown]
# # Quantum rings of projective spaces and products
#
# A fan plus a convex piecewise linear function gives a q-deformed product on
# the group algebra of the lattice.  Quotienting by the linear relations
# leaves a finite-dimensional ring.  For projective space the class `T` of the
# last ray should satisfy `T^(N+1) = q^(N+1)`.

# %%
from fractions import Fraction

from toricqh.koszul_qh import check_ring_axioms, quotient_ring
from toricqh.lattice_fan import PLFunction, height_function, product_fan, projective_fan, validate_fan
from toricqh.scalars import Q, poly_str
from toricqh.semigroup_ring import RingElem, deformed_product, presentation_witness

# %%
fan = projective_fan(2)
print(validate_fan(fan))
h = height_function(fan)
print("rays:", fan.rays)

# %% [markdown]
# The deformed product only differs from the plain one when the two
# exponents lie in different cones.

# %%
x1, x2, T = (RingElem.exp(r) for r in fan.rays)
print("x1 * x2 =", deformed_product(x1, x2, h, Q))
print("x1 * T  =", deformed_product(x1, T, h, Q))
print(presentation_witness(fan, h, Q))

# %%
for N in range(1, 5):
    f = projective_fan(N)
    p = quotient_ring(f, height_function(f), Q)
    print(f"P^{N}: dim {p.dim}, basis {p.basis_labels()}, minpoly(T) {poly_str(p.minpolys['T'])}")

# %% [markdown]
# Specializing q.  At q = 0 the ring is the ordinary cohomology ring.

# %%
for q in (0, 2, Fraction(1, 2)):
    f = projective_fan(3)
    print(q, poly_str(quotient_ring(f, height_function(f), q).minpolys["T"]))

# %% [markdown]
# ## Products of projective spaces

# %%
for f in (product_fan(projective_fan(1), projective_fan(1)), product_fan(projective_fan(1), projective_fan(2))):
    p = quotient_ring(f, PLFunction(f, (1,) * len(f.rays)), Q)
    print(len(f.max_cones), "maximal cones; dim", p.dim, "; axiom failures:", check_ring_axioms(p))
    for name, mp in p.minpolys.items():
        print("  ", name, poly_str(mp, "x"))
