import random
from fractions import Fraction

import pytest

from toricqh.koszul_qh import (
    KoszulElem,
    NotReduced,
    QuotientUnstable,
    check_ring_axioms,
    is_squarefree,
    koszul_differential,
    koszul_generators,
    minimal_polynomial,
    normal_form,
    quotient_ring,
)
from toricqh.lattice_fan import (
    PLFunction,
    height_function,
    linear_function,
    product_fan,
    projective_fan,
)
from toricqh.scalars import Q, qpow
from toricqh.semigroup_ring import RingElem, deformed_product

P1xP1 = product_fan(projective_fan(1), projective_fan(1))
P1xP2 = product_fan(projective_fan(1), projective_fan(2))


def ones(fan):
    return PLFunction(fan, (1,) * len(fan.rays))


def fr_poly(strs):
    return tuple(Fraction(s) for s in strs)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_generators_on_projective_space(N):
    f = projective_fan(N)
    T = (-1,) * N
    for i, g in enumerate(koszul_generators(f)):
        x = tuple(int(j == i) for j in range(N))
        assert g == RingElem(N, {x: 1, T: -1})


def test_generators_on_p1xp1():
    g1, g2 = koszul_generators(P1xP1)
    assert g1 == RingElem(2, {(1, 0): 1, (-1, 0): -1})
    assert g2 == RingElem(2, {(0, 1): 1, (0, -1): -1})


def test_differential_examples():
    f = projective_fan(3)
    h = height_function(f)
    d = koszul_differential(KoszulElem(3, {((0, 0, 0), (0,)): 1}), f, h, Q)
    assert d == KoszulElem(3, {((1, 0, 0), ()): 1, ((-1, -1, -1), ()): -1})
    assert not koszul_differential(KoszulElem(3, {((2, 0, 1), ()): 5}), f, h, Q).terms


def test_differential_squares_to_zero_on_random_elements():
    rng = random.Random(2)
    for k in range(50):
        f = [projective_fan(2), projective_fan(3), P1xP1][k % 3]
        h = ones(f)
        terms = {}
        for _ in range(3):
            a = tuple(rng.randint(-2, 2) for _ in range(f.rank))
            S = tuple(sorted(rng.sample(range(f.rank), rng.randint(0, f.rank))))
            terms[(a, S)] = Fraction(rng.randint(-4, 4))
        x = KoszulElem(f.rank, terms)
        q = rng.choice([Q, Fraction(3), Fraction(0)])
        assert not koszul_differential(koszul_differential(x, f, h, q), f, h, q).terms


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_projective_space_symbolic(N):
    f = projective_fan(N)
    p = quotient_ring(f, height_function(f), Q)
    assert p.dim == N + 1
    assert p.basis_labels() == ["e^0", "T"] + [f"T^{k}" for k in range(2, N + 1)]
    want = [0] * (N + 2)
    want[0], want[-1] = -Q ** (N + 1), 1
    assert tuple(p.minpolys["T"]) == tuple(want)
    for i in range(N):
        assert p.minpolys[f"x{i + 1}"] == p.minpolys["T"]


@pytest.mark.parametrize("N", [1, 2, 3])
def test_normal_form_examples(N):
    f = projective_fan(N)
    h = height_function(f)
    p = quotient_ring(f, h, Q)
    assert normal_form(p, RingElem.one(N)) == p.unit_vector(0)
    assert normal_form(p, RingElem.exp((1,) + (0,) * (N - 1))) == normal_form(p, RingElem.exp((-1,) * N))
    top = RingElem.one(N)
    for _ in range(N + 1):
        top = deformed_product(top, RingElem.exp((-1,) * N), h, Q)
    assert normal_form(p, top) == [Q ** (N + 1)] + [0] * N
    for k, b in enumerate(p.basis):
        assert normal_form(p, RingElem.exp(b)) == p.unit_vector(k)


def test_normal_form_kills_ideal():
    f = projective_fan(2)
    h = height_function(f)
    p = quotient_ring(f, h, Fraction(3))
    for g in p.generators:
        for b in [(0, 0), (1, 0), (-1, -1), (2, 1)]:
            assert not any(normal_form(p, deformed_product(g, RingElem.exp(b), h, Fraction(3))))


def test_normal_form_refuses_high_levels():
    f = projective_fan(1)
    p = quotient_ring(f, height_function(f), Q)
    with pytest.raises(NotReduced):
        normal_form(p, RingElem.exp((p.working_level + 5,)))


def test_minpoly_small_cases():
    f = projective_fan(1)
    p = quotient_ring(f, height_function(f), 1)
    assert p.minpolys["x1"] == (-1, 0, 1)
    assert minimal_polynomial(p, RingElem.one(1)) == (-1, 1)


@pytest.mark.parametrize("N", [1, 2, 3])
def test_classical_and_specialized(N):
    f = projective_fan(N)
    h = height_function(f)
    p0 = quotient_ring(f, h, 0)
    assert p0.minpolys["T"] == (0,) * (N + 1) + (1,)
    p2 = quotient_ring(f, h, 2)
    assert p2.minpolys["T"] == (-(2 ** (N + 1)),) + (0,) * N + (1,)
    assert is_squarefree(p2.minpolys["T"]) and not is_squarefree(p0.minpolys["T"])


@pytest.mark.parametrize("name,fan", [("pn:1", projective_fan(1)), ("pn:2", projective_fan(2)), ("pn:3", projective_fan(3)), ("pn:4", projective_fan(4)), ("prod:1,1", P1xP1), ("prod:1,2", P1xP2)])
@pytest.mark.parametrize("qval", [1, 2])
def test_against_batyrev_oracle(frozen, name, fan, qval):
    ref = frozen["fans"][name]["q"][str(qval)]
    p = quotient_ring(fan, ones(fan), qval)
    assert p.dim == ref["dim"] == len(fan.max_cones)
    ours = [minimal_polynomial(p, RingElem.exp(r)) for r in fan.rays]
    assert ours == [fr_poly(m) for m in ref["minpolys"]]
    assert not check_ring_axioms(p)


def test_p1xp1_relations():
    p = quotient_ring(P1xP1, ones(P1xP1), Q)
    assert p.dim == 4
    assert p.minpolys["e^(1,0)"] == (-Q**2, 0, 1)
    assert p.minpolys["e^(0,1)"] == (-Q**2, 0, 1)


def test_linear_shift_leaves_presentation():
    for fan in (projective_fan(2), P1xP1, P1xP2):
        base = ones(fan)
        shifted = base + linear_function(fan, [2, -1] + [1] * (fan.rank - 2))
        a, b = quotient_ring(fan, base, Q), quotient_ring(fan, shifted, Q)
        assert a.basis == b.basis and a.minpolys == b.minpolys
        assert a.structure_constants == b.structure_constants


def test_unstable_error_carries_trajectory():
    f = projective_fan(3)
    with pytest.raises(QuotientUnstable) as e:
        quotient_ring(f, height_function(f), Q, max_level=4)
    assert e.value.trajectory


def test_ring_axioms_projective():
    f = projective_fan(3)
    p = quotient_ring(f, height_function(f), Fraction(1, 2))
    assert not check_ring_axioms(p)
    assert p.structure_constants[(1, 3)] == [qpow(Fraction(1, 2), 4), 0, 0, 0]
