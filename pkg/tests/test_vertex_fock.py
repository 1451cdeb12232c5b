from collections import Counter
from fractions import Fraction

import pytest

from toricqh.lattice_fan import LatticeModel, height_function, projective_fan
from toricqh.scalars import Q
from toricqh.vertex_fock import (
    BasisMonomial,
    ChiralAlphabetError,
    FockContext,
    FockState,
    OperatorSpec,
    apply_free_mode,
    build_operator,
    build_state,
    cohomology_dims,
    composite_zero_mode,
    embed_chiral,
    enumerate_basis,
    height_decompose_D,
    koszul_match,
    lattice_ball,
    lemma26_pipeline,
    operator_sample,
    run_fock_check,
    undeformed_minus,
    vertex_op_coeff,
)


def ctx_for(N, q=1):
    f = projective_fan(N)
    return FockContext(LatticeModel(N), f, height_function(f), q)


def op(ctx, kind, **kw):
    return build_operator(OperatorSpec.make(kind, **kw), ctx)


M1 = LatticeModel(1)
E0 = FockState.vacuum(M1.zero())


def test_weight_zero_enumeration():
    got = enumerate_basis(M1, 0, (0, 1), [M1.zero()])
    assert got == [BasisMonomial(M1.zero()), BasisMonomial(M1.zero(), (), (("F", 0, 0),))]


def test_weight_one_contains_free_creators():
    got = set(enumerate_basis(M1, 1, None, [M1.zero()]))
    for sp in ("A", "B", "F", "P"):
        s = build_state(M1.zero(), [(sp, 0, -1)])
        (m,) = s.terms
        assert m in got
        dressed = build_state(M1.zero(), [("F", 0, 0), (sp, 0, -1)])
        assert set(dressed.terms) <= got


@pytest.mark.parametrize("r", [1, 2])
def test_enumeration_matches_character_oracle(frozen, r):
    M = LatticeModel(r)
    counts = Counter(f"{m.weight},{m.charge}" for m in enumerate_basis(M, 3, None, [M.zero()]))
    assert dict(counts) == frozen["fock_characters"][str(r)]


def test_lattice_weight():
    m = BasisMonomial(M1.point((1,), (1,)))
    assert m.weight == 1


def test_free_mode_examples():
    s = build_state(M1.zero(), [("A", 0, -1)])
    assert apply_free_mode(("B", 0, 1), s) == E0
    assert not apply_free_mode(("A", 0, 1), s)
    eb = FockState.vacuum(M1.B(0))
    assert apply_free_mode(("A", 0, 0), eb) == eb


def test_fermion_anticommutation():
    s = build_state(M1.zero(), [("F", 0, -1), ("F", 0, 0)])
    t = build_state(M1.zero(), [("F", 0, 0), ("F", 0, -1)])
    assert s == -t
    assert not build_state(M1.zero(), [("F", 0, 0), ("F", 0, 0)])


def test_vertex_operator_coefficients():
    a = M1.A(0)
    assert vertex_op_coeff(a, 0, E0) == FockState.vacuum(a)
    assert vertex_op_coeff(a, 1, E0) == build_state(a, [("A", 0, -1)])
    assert not vertex_op_coeff(a, 0, FockState.vacuum(M1.B(0)))


def test_composite_zero_mode_examples():
    a = M1.A(0)
    phi0 = build_state(M1.zero(), [("F", 0, 0)])
    assert composite_zero_mode({("P", 0): 1}, a, phi0) == FockState.vacuum(a)
    assert not composite_zero_mode({("P", 0): 1}, a, E0)
    b = M1.B(0)
    src = build_state(M1.zero(), [("P", 0, -1)])
    # Phi_1 contracts Psi_{-1}; the composite has weight 0, so its residue drops weight by one
    assert composite_zero_mode({("F", 0): 1}, b, src) == FockState.vacuum(b)


def test_q0_vanishes_on_phi_free_weight_zero_states():
    ctx = ctx_for(2)
    Q0 = op(ctx, "Q0")
    M = ctx.model
    for g in lattice_ball(M, 2, a_only=True):
        assert not Q0(FockState.vacuum(g))


def test_l0_on_pairing_weight():
    ctx = ctx_for(1)
    g = M1.point((1,), (1,))
    assert op(ctx, "L0")(FockState.vacuum(g)) == FockState.vacuum(g)


@pytest.mark.parametrize("N", [1, 2])
def test_l0_and_j0_are_the_gradings(N):
    ctx = ctx_for(N)
    L0, J0 = op(ctx, "L0"), op(ctx, "J0")
    for m in operator_sample(N, stride=3):
        s = FockState.of(m)
        assert L0(s) == s.scale(m.weight)
        assert J0(s) == s.scale(m.charge)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_d_on_phi_zero(N):
    ctx = ctx_for(N, Q)
    M = ctx.model
    got = op(ctx, "D")(build_state(M.zero(), [("F", 0, 0)]))
    want = FockState.vacuum(M.A(0)) - FockState.vacuum(M.embed_a((-1,) * N))
    assert got == want


@pytest.mark.parametrize("N", [1, 2])
def test_charge_and_weight_shifts(N):
    ctx = ctx_for(N)
    D, Q0 = op(ctx, "D"), op(ctx, "Q0")
    for m in operator_sample(N, stride=5):
        for t in D(FockState.of(m)).terms:
            assert t.charge == m.charge - 1 and t.weight == m.weight
        for t in Q0(FockState.of(m)).terms:
            assert t.charge == m.charge + 1 and t.weight == m.weight


@pytest.mark.parametrize("check", ["d2", "q02", "dq", "brackets"])
def test_identities_on_full_sample_n1(check):
    sample = operator_sample(1, stride=1)
    for r in run_fock_check(check, 1, 1, sample):
        assert r.ok, r.detail


@pytest.mark.parametrize("check", ["d2", "dq", "brackets", "dpm"])
@pytest.mark.parametrize("q", [Fraction(2), Fraction(0)])
def test_identities_n2(check, q):
    sample = operator_sample(2, stride=29)
    for r in run_fock_check(check, 2, q, sample):
        assert r.ok, r.detail


@pytest.mark.parametrize("N", [1, 2, 3])
def test_koszul_cross_oracle(N):
    for q in (1, 0, Q):
        assert koszul_match(N, q).ok


def test_twisted_d_equals_deformed_d():
    for q in (Fraction(2), Fraction(-1, 3)):
        ctx = ctx_for(2, q)
        D, Tw = op(ctx, "D"), op(ctx, "TwistConjugated", inner="D")
        for m in operator_sample(2, stride=41):
            assert D(FockState.of(m)) == Tw(FockState.of(m))


def test_twist_needs_nonzero_q():
    with pytest.raises(ZeroDivisionError):
        op(ctx_for(1, 0), "TwistConjugated", inner="D")


def test_height_split_examples():
    ctx = ctx_for(2, Q)
    M = ctx.model
    d_plus, d_minus = height_decompose_D(ctx)
    phi0 = build_state(M.zero(), [("F", 0, 0)])
    # e^{A^1} and e^{-A^1-A^2} both sit at height 1, so nothing is left for d_minus
    assert d_plus(phi0) == FockState.vacuum(M.A(0)) - FockState.vacuum(M.embed_a((-1, -1)))
    assert not d_minus(phi0)


def test_d_minus_is_q_times_undeformed_part():
    ctx = ctx_for(2, Q)
    _, d_minus = height_decompose_D(ctx)
    d0 = undeformed_minus(ctx)
    g = ctx.model.embed_a((1, 1))
    s = build_state(g, [("F", 0, 0), ("F", 1, 0)])
    assert d0(s)
    assert d_minus(s) == d0(s).scale(Q)


def test_q0_cohomology_blocks():
    ctx = ctx_for(2)
    Q0 = op(ctx, "Q0")
    M = ctx.model
    for g in lattice_ball(M, 1):
        if not any(M.b_part(g)):
            continue
        for w in range(3):
            for c in range(-2, 3):
                assert cohomology_dims(Q0, M, w, c, g)[2] == 0
    for c in range(3):
        ker, im, h = cohomology_dims(Q0, M, 0, c, M.zero())
        assert im == 0 and h == ker


def test_j0_kernel_is_block():
    ctx = ctx_for(1)
    J0 = op(ctx, "J0")
    block = [m for m in enumerate_basis(M1, 1, (1, 1), [M1.zero()]) if m.weight == 1]
    for m in block:
        assert J0(FockState.of(m)) == FockState.of(m)


def test_chiral_embedding_examples():
    M = LatticeModel(3)
    assert embed_chiral(M1, "b1_0") == FockState.vacuum(M1.B(0))
    nb = M1.B(0, -1)
    want = build_state(nb, [("A", 0, -1)]) - build_state(nb, [("F", 0, 0), ("P", 0, -1)])
    assert embed_chiral(M1, "a1_-1") == want
    expr = "b1^-1 b2^-1 b3^-3 phi3_-1 phi1_0 phi2_0 phi3_0"
    want = build_state(M.B(2, -1), [("F", 2, -1), ("F", 0, 0), ("F", 1, 0), ("F", 2, 0)])
    assert embed_chiral(M, expr) == want
    with pytest.raises(ChiralAlphabetError):
        embed_chiral(M1, "c1_0")


@pytest.mark.parametrize("N", [2, 3, 4])
def test_lemma_pipeline_checkpoints(N):
    cps = lemma26_pipeline(N)
    assert cps[0].exact
    signs = {c.sign for c in cps[1:]}
    assert signs == {(-1) ** (N + 1)}


def test_lemma_pipeline_three_is_exact():
    assert all(c.exact for c in lemma26_pipeline(3))
