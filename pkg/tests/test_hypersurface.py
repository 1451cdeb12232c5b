from fractions import Fraction
from math import comb

import pytest
from hypothesis import given
from hypothesis import strategies as st

from toricqh.hypersurface import (
    FanoGuardError,
    HyperModel,
    aq_presentation,
    build_Kg,
    delta_star,
    divides,
    givental_compare,
    kg_annihilates_T,
    prop34_checks,
    relation_poly,
    t_power_split,
)
from toricqh.koszul_qh import is_squarefree
from toricqh.scalars import Q, pmul, ptrim, specialize
from toricqh.vertex_fock import (
    OperatorSpec,
    build_operator,
    commutator_check,
    square_check,
)

CASES = [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)]


def fr(strs):
    return tuple(Fraction(s) for s in strs)


def test_delta_star_sizes(frozen):
    for key, size in frozen["delta_star_sizes"].items():
        N, n = map(int, key.split(","))
        if n >= N + 1:
            with pytest.raises(FanoGuardError):
                delta_star(N, n)
            continue
        d = delta_star(N, n)
        assert len(d) == size == comb(N + n, N)


def test_delta_star_points_pair_nonnegatively():
    d = delta_star(3, 2)
    exps = d.exponents()
    assert (0, 0, 0) in exps
    assert all(min(e) >= 0 and sum(e) <= 2 for e in exps)
    assert len(set(exps)) == len(exps)
    assert len(delta_star(3, 1)) == 4


@pytest.mark.parametrize("N,n", [(1, 2), (2, 3), (3, 4), (2, 0)])
def test_guard(N, n):
    with pytest.raises(ValueError):
        HyperModel(N, n)


def test_weights_must_be_nonnegative():
    with pytest.raises(ValueError):
        delta_star(2, 1, {(0, 0): -1})


def test_single_point_kg():
    spec = build_Kg(delta_star(2, 1, {(0, 0): 1}))
    assert spec.kind == "Kg"
    assert len(dict(spec.params)["points"]) == 3


@pytest.mark.parametrize("N,n", CASES)
def test_minpoly_divides_relation_at_q1(N, n):
    mp = aq_presentation(N, n, 1).minpolys["T"]
    assert divides(mp, relation_poly(N, n, 1))


def test_quadric_minpoly():
    mp = aq_presentation(3, 2, 1).minpolys["T"]
    assert mp == relation_poly(3, 2, 1)
    assert mp == fr(["0", "0", "-4", "0", "1"])


@pytest.mark.parametrize("N", [2, 3])
def test_hyperplane_minpoly_squarefree(N):
    mp = aq_presentation(N, 1, 1).minpolys["T"]
    assert is_squarefree(mp)
    assert len(mp) - 1 <= N + 1


def test_minpoly_at_q0_is_pure_power():
    mp = aq_presentation(3, 2, 0).minpolys["T"]
    assert mp == (0,) * 4 + (1,)


def test_symbolic_minpoly_specializes():
    mp = aq_presentation(2, 1, Q).minpolys["T"]
    assert mp == relation_poly(2, 1, Q)
    assert tuple(specialize(c, 2) for c in mp) == relation_poly(2, 1, 2)


@pytest.mark.parametrize("N,n", [(2, 1), (3, 2)])
def test_kg_annihilates_T(N, n):
    assert not kg_annihilates_T(N, n, 1)
    assert not kg_annihilates_T(N, n, 2)


def test_kg_nilpotent_and_commutes_with_D():
    hm = HyperModel(2, 1)
    ctx = hm.context(1)
    D = build_operator(OperatorSpec("D"), ctx)
    K = build_operator(build_Kg(delta_star(2, 1)), ctx)
    sample = hm.sample(1, 1)
    assert sample
    assert square_check(K, sample).ok
    assert commutator_check(K, D, sample).ok


def test_prop34_report():
    rep = prop34_checks(3, 2, 1)
    names = [c[0] for c in rep.checks]
    assert rep.ok
    assert any("quadric" in x for x in names)
    assert prop34_checks(3, 1, 1).ok


def test_t_power_split():
    assert t_power_split(fr(["0", "0", "-4", "0", "1"])) == (2, fr(["-4", "0", "1"]))
    assert t_power_split((1, 2)) == (0, (1, 2))


@pytest.mark.parametrize(
    "key,N,n", [("quadric", 3, 2), ("p2_n1", 2, 1), ("cubic_n1", 3, 1)]
)
def test_givental_against_factorization(frozen, key, N, n):
    rep = givental_compare(N, n, 1)
    assert rep["minpoly"] == fr(frozen["factorizations"][key]["expanded"])
    # both candidates differ by one factor of T
    assert ptrim(pmul((0, 1), rep["suggested"])) == rep["relation"]
    assert rep["verdict"] in ("T*(T^N - c T^(n-1))", "T^N - c T^(n-1)", "neither")


def test_givental_at_q0():
    rep = givental_compare(2, 1, 0)
    assert rep["t_power"] == len(rep["minpoly"]) - 1


@given(st.integers(1, 5).flatmap(lambda N: st.tuples(st.just(N), st.integers(1, N))))
def test_delta_star_size_property(Nn):
    N, n = Nn
    d = delta_star(N, n)
    assert len(d) == comb(N + n, N)
    assert all(min(e) >= 0 and sum(e) <= n for e in d.exponents())
