# %% [markdown]
# # Hypersurfaces in projective space
#
# One extra lattice direction `u` encodes the degree.  The element
# `T = e^{n A^u - sum A^j}` generates a subalgebra whose minimal polynomial
# should divide `T^(N+1) - q^(N+1-n) n^n T^n`.

# %%
from toricqh.hypersurface import (
    FanoGuardError,
    aq_presentation,
    delta_star,
    experimental_dims,
    givental_compare,
    kg_annihilates_T,
    prop34_checks,
    relation_poly,
)
from toricqh.scalars import Q, poly_str

# %%
d = delta_star(3, 2)
print(len(d), "points:", d.exponents())

# %%
try:
    delta_star(2, 3)
except FanoGuardError as e:
    print("guard:", e)

# %%
for N, n in [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)]:
    pres = aq_presentation(N, n, Q)
    print(f"N={N} n={n}: minpoly {poly_str(pres.minpolys['T'])}  relation {poly_str(relation_poly(N, n, Q))}")

# %% [markdown]
# The quadric surface at q = 1, and `(D + K_g)` on the class of `T`.

# %%
rep = prop34_checks(3, 2, 1)
for name, ok, detail in rep.checks:
    print("ok " if ok else "BAD", name, poly_str(detail) if isinstance(detail, tuple) else detail)
print("(D+K_g) e^T =", kg_annihilates_T(3, 2, 1))

# %% [markdown]
# Two candidate closed forms differ by a factor of `T`.  This only reports
# which one the computed polynomial matches.

# %%
for N, n in [(2, 1), (3, 2), (4, 3)]:
    g = givental_compare(N, n, 1)
    print(N, n, g["verdict"], "T-power", g["t_power"])

# %% [markdown]
# Rank data of `D + K_g` on a small window; images may leave the window, so
# these are not cohomology dimensions.

# %%
for row in experimental_dims(2, 1, 1):
    print(row)
