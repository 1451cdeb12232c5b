import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from toricqh.lattice_fan import (
    PLFunction,
    height_function,
    hypersurface_fan,
    linear_function,
    product_fan,
    projective_fan,
)
from toricqh.scalars import Q, ZeroDivision
from toricqh.semigroup_ring import (
    RelationError,
    RingElem,
    deformed_product,
    presentation_witness,
    product_of,
    ray_elements,
    t_twist,
)

FANS = [projective_fan(1), projective_fan(2), projective_fan(3), product_fan(projective_fan(1), projective_fan(1))]


def random_convex(rng, fan):
    lin = linear_function(fan, [rng.randint(-2, 2) for _ in range(fan.rank)])
    k = rng.randint(1, 2)
    return PLFunction(fan, tuple(k + v for v in lin.ray_values))


def random_elem(rng, rank, terms=3, radius=2):
    pts = list(itertools.product(range(-radius, radius + 1), repeat=rank))
    return RingElem(rank, {rng.choice(pts): Fraction(rng.randint(-3, 3), rng.randint(1, 2)) for _ in range(terms)})


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_twist_on_diagonal(N):
    h = height_function(projective_fan(N))
    x = RingElem.exp((1,) * N)
    assert t_twist(x, h, Q) == RingElem.exp((1,) * N, Q**N)
    assert t_twist(RingElem.one(N), h, Q) == RingElem.one(N)


def test_inverse_twist_needs_nonzero_q():
    h = height_function(projective_fan(2))
    with pytest.raises(ZeroDivision):
        t_twist(RingElem.one(2), h, 0, "inverse")


def test_twist_round_trip_and_isomorphism():
    rng = random.Random(5)
    for fan in FANS:
        phi = random_convex(rng, fan)
        flat = PLFunction(fan, (0,) * len(fan.rays))
        for q in (Fraction(2), Fraction(-1, 3), Q):
            x, y = random_elem(rng, fan.rank), random_elem(rng, fan.rank)
            assert t_twist(t_twist(x, phi, q), phi, q, "inverse") == x
            lhs = t_twist(deformed_product(x, y, phi, q), phi, q)
            rhs = deformed_product(t_twist(x, phi, q), t_twist(y, phi, q), flat, q)
            assert lhs == rhs


@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_projective_relation(N):
    f = projective_fan(N)
    h = height_function(f)
    xs = ray_elements(f)
    assert product_of([xs[N]] + xs[:N], h, Q) == RingElem.one(N).scale(Q ** (N + 1))
    assert presentation_witness(f, h, Q)
    assert presentation_witness(f, h, 0)
    assert product_of([xs[N]] + xs[:N], h, 0) == RingElem.zero(N)


def test_unit_and_q0_rule():
    f = projective_fan(1)
    h = height_function(f)
    y = RingElem(1, {(2,): 3, (-1,): 1})
    assert deformed_product(RingElem.one(1), y, h, Q) == y
    assert deformed_product(RingElem.exp((1,)), RingElem.exp((-1,)), h, 0) == RingElem.zero(1)
    assert deformed_product(RingElem.exp((1,)), RingElem.exp((2,)), h, 0) == RingElem.exp((3,))


def test_same_cone_products_do_not_see_q():
    f = projective_fan(3)
    h = height_function(f)
    a, b = RingElem.exp((1, 2, 0)), RingElem.exp((0, 1, 3))
    assert deformed_product(a, b, h, Q) == deformed_product(a, b, h, 0) == RingElem.exp((1, 3, 3))


@pytest.mark.parametrize("N,n", [(2, 1), (3, 1), (3, 2), (4, 3)])
def test_hypersurface_relation(N, n):
    f = hypersurface_fan(N, n)
    phi = PLFunction(f, (1,) * len(f.rays))
    for q in (Q, 2, 0):
        assert presentation_witness(f, phi, q)


def test_witness_reports_broken_relation():
    f = projective_fan(2)
    wrong = PLFunction(f, (2, 1, 1))  # convex but not the height: exponent changes
    with pytest.raises(RelationError):
        presentation_witness(f, wrong, Q)


def test_random_product_laws():
    rng = random.Random(17)
    for k in range(120):
        fan = FANS[k % len(FANS)]
        phi = random_convex(rng, fan)
        q = rng.choice([Fraction(0), Fraction(1), Fraction(2), Fraction(-1, 2)])
        x, y, z = (random_elem(rng, fan.rank, 2) for _ in range(3))
        assert deformed_product(x, y, phi, q) == deformed_product(y, x, phi, q)
        lhs = deformed_product(deformed_product(x, y, phi, q), z, phi, q)
        rhs = deformed_product(x, deformed_product(y, z, phi, q), phi, q)
        assert lhs == rhs


monos = st.lists(st.tuples(st.integers(-3, 3), st.integers(-3, 3)), min_size=3, max_size=3)


@settings(max_examples=100, deadline=None)
@given(monos, st.sampled_from([Q, 0, 2]))
def test_product_laws_on_monomials(pts, q):
    f = projective_fan(2)
    h = height_function(f)
    x, y, z = (RingElem.exp(p) for p in pts)
    assert deformed_product(deformed_product(x, y, h, q), z, h, q) == deformed_product(
        x, deformed_product(y, z, h, q), h, q
    )
    assert deformed_product(x, y, h, q) == deformed_product(y, x, h, q)
