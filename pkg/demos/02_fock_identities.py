# %% [markdown]
# # The lattice Fock model
#
# States are sparse combinations of basis monomials: a lattice point, some
# boson modes and an ordered set of fermion modes.  The differential `D`,
# the charge `Q0` and friends act exactly, so identities can be checked on a
# finite sample with no tolerance.

# %%
from toricqh.lattice_fan import LatticeModel, height_function, projective_fan
from toricqh.vertex_fock import (
    FockContext,
    FockState,
    OperatorSpec,
    build_operator,
    build_state,
    enumerate_basis,
    height_decompose_D,
    lemma26_pipeline,
    operator_sample,
    run_fock_check,
    vertex_op_coeff,
)

# %%
M = LatticeModel(1)
for m in enumerate_basis(M, 1, (-1, 1), [M.zero()]):
    print(m, "weight", m.weight, "charge", m.charge)

# %% [markdown]
# Lattice vertex operators: the z^0 coefficient of `e^A(z)` on the vacuum is
# `e^A`, and the z^1 coefficient carries one boson mode.

# %%
vac = FockState.vacuum(M.zero())
print(vertex_op_coeff(M.A(0), 0, vac))
print(vertex_op_coeff(M.A(0), 1, vac))

# %%
N = 2
fan = projective_fan(N)
ctx = FockContext(LatticeModel(N), fan, height_function(fan), 1)
D = build_operator(OperatorSpec("D"), ctx)
phi0 = build_state(ctx.model.zero(), [("F", 0, 0)])
print("D(Phi^1_0 e^0) =", D(phi0))
print("D^2 of that    =", D(D(phi0)))

# %% [markdown]
# Splitting `D` by how it changes the height.

# %%
d_plus, d_minus = height_decompose_D(ctx)
print("d+ :", d_plus(phi0))
print("d- :", d_minus(phi0))

# %%
sample = operator_sample(N)
print(len(sample), "sampled monomials")
for name in ("d2", "q02", "dq", "brackets", "dpm", "koszul-match"):
    for r in run_fock_check(name, N, 1, sample):
        print(f"{'ok ' if r.ok else 'BAD'} {r.name} ({r.checked})")

# %% [markdown]
# The kernel computation for N = 3, step by step.

# %%
for cp in lemma26_pipeline(3):
    print(cp.name, "| exact:", cp.exact, "| sign:", cp.sign)
