"""End-to-end acceptance checks, one marked group per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.
"""

import json
import random
import time
from fractions import Fraction

import pytest

from toricqh.cli import RingReport, main
from toricqh.hypersurface import aq_presentation, divides, prop34_checks, relation_poly
from toricqh.koszul_qh import check_ring_axioms, quotient_ring
from toricqh.lattice_fan import (
    LatticeModel,
    PLFunction,
    height_function,
    linear_function,
    product_fan,
    projective_fan,
)
from toricqh.scalars import Q, qpow
from toricqh.semigroup_ring import RingElem, deformed_product, presentation_witness
from toricqh.vertex_fock import (
    FockContext,
    OperatorSpec,
    build_operator,
    cohomology_dims,
    lattice_ball,
    lemma26_result,
    operator_sample,
    run_fock_check,
)

P1xP1 = product_fan(projective_fan(1), projective_fan(1))
P1xP2 = product_fan(projective_fan(1), projective_fan(2))
HYPER_CASES = [(2, 1), (3, 1), (3, 2), (4, 2), (4, 3)]


def pn_minpoly(capsys, N, q):
    t0 = time.perf_counter()
    assert main(["qh", "--builtin", f"pn:{N}", "--q", q]) == 0
    rep = RingReport.from_json(json.loads(capsys.readouterr().out))
    return rep, time.perf_counter() - t0


def expected(N, q):
    return (-qpow(q, N + 1),) + (0,) * N + (1,)


@pytest.mark.criterion(1, "projective space ring over Q(q): dim N+1, T^(N+1) - q^(N+1)")
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_c1_projective_symbolic(capsys, N):
    rep, secs = pn_minpoly(capsys, N, "symbolic")
    assert rep.dimension == N + 1
    assert rep.minpoly("T") == expected(N, Q)
    assert secs < 10


@pytest.mark.criterion(2, "classical limit q=0 and specialization q=2")
@pytest.mark.parametrize("N", [1, 2, 3, 4])
@pytest.mark.parametrize("q", ["0", "2"])
def test_c2_specializations(capsys, N, q):
    rep, secs = pn_minpoly(capsys, N, q)
    assert rep.dimension == N + 1
    assert rep.minpoly("T") == expected(N, Fraction(q))
    assert secs < 10


@pytest.mark.criterion(3, "T x_1 ... x_N = q^(N+1) in the deformed semigroup ring")
@pytest.mark.parametrize("N", [1, 2, 3, 4])
def test_c3_semigroup_relation(N):
    f = projective_fan(N)
    for q in (Q, 0, 2, Fraction(1, 3)):
        assert presentation_witness(f, height_function(f), q)


@pytest.mark.criterion(4, "D^2, Q0^2, [D,Q0] vanish; [Q0,Psi_0]=A_0, [Q0,G0]=L0 (N<=3, weight<=2)")
def test_c4_operator_identities():
    t0 = time.perf_counter()
    bad = []
    for N in (1, 2, 3):
        sample = operator_sample(N)
        for name in ("d2", "q02", "dq", "brackets"):
            bad += [f"N={N} {r.name}: {r.detail}" for r in run_fock_check(name, N, 1, sample) if not r.ok]
    assert not bad, bad
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(5, "weight-0 D equals the Koszul differential on a 2-step ball")
@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("q", [1, 2])
def test_c5_koszul_match(N, q):
    (r,) = run_fock_check("koszul-match", N, q)
    assert r.ok, r.detail
    assert r.checked > 0


@pytest.mark.criterion(6, "height split: d+^2 = d-^2 = [d+,d-] = 0 and D = d+ + q^N d-")
@pytest.mark.parametrize("N", [1, 2, 3])
@pytest.mark.parametrize("q", [1, 2])
def test_c6_height_split(N, q):
    res = run_fock_check("dpm", N, q, operator_sample(N, stride=11))
    assert all(r.ok for r in res), [(r.name, r.detail) for r in res if not r.ok]


@pytest.mark.criterion(7, "kernel computation for N=3 matches checkpoints b-d up to one sign")
def test_c7_lemma_pipeline():
    t0 = time.perf_counter()
    r = lemma26_result(3)
    assert r.ok, r.detail
    assert time.perf_counter() - t0 < 30


@pytest.mark.criterion(8, "Q0 cohomology vanishes on blocks with a nonzero A_0 eigenvalue")
@pytest.mark.parametrize("N", [1, 2])
def test_c8_q0_vanishing(N):
    model, fan = LatticeModel(N), projective_fan(N)
    Q0 = build_operator(OperatorSpec("Q0"), FockContext(model, fan, height_function(fan), 1))
    blocks = 0
    for g in lattice_ball(model, 1):
        if not any(model.b_part(g)):
            continue
        for w in range(3):
            for c in range(-2, 3):
                assert cohomology_dims(Q0, model, w, c, g)[2] == 0
                blocks += 1
    assert blocks


@pytest.mark.criterion(9, "hypersurfaces: minpoly of T divides the relation; quadric, hyperplane and (D+K_g)e^T checks")
@pytest.mark.parametrize("N,n", HYPER_CASES)
def test_c9_hypersurfaces(N, n):
    t0 = time.perf_counter()
    for q in (Q, 1):
        pres = aq_presentation(N, n, q)
        assert divides(pres.minpolys["T"], relation_poly(N, n, q))
    rep = prop34_checks(N, n, 1, pres=pres)
    assert rep.ok, rep.checks
    if (N, n) == (3, 2):
        assert pres.minpolys["T"] == (0, 0, -4, 0, 1)
    assert time.perf_counter() - t0 < 60


@pytest.mark.criterion(10, "general toric: dim = #maximal cones, ring axioms, invariance under linear shifts")
@pytest.mark.parametrize("fan", [P1xP1, P1xP2], ids=["P1xP1", "P1xP2"])
def test_c10_general_toric(fan):
    phi = PLFunction(fan, (1,) * len(fan.rays))
    p = quotient_ring(fan, phi, Q)
    assert p.dim == len(fan.max_cones)
    assert not check_ring_axioms(p)
    shifted = phi + linear_function(fan, [1, -2] + [3] * (fan.rank - 2))
    s = quotient_ring(fan, shifted, Q)
    assert (s.basis, s.minpolys, s.structure_constants) == (p.basis, p.minpolys, p.structure_constants)


# complete fans only: products may leave the support of an incomplete one
SHIPPED = [projective_fan(1), projective_fan(2), projective_fan(3), projective_fan(4), P1xP1, P1xP2]


def _random_convex(rng, fan):
    lin = linear_function(fan, [rng.randint(-3, 3) for _ in range(fan.rank)])
    k = rng.randint(1, 3)
    return PLFunction(fan, tuple(k + v for v in lin.ray_values))


def _random_elem(rng, rank):
    pts = [tuple(rng.randint(-2, 2) for _ in range(rank)) for _ in range(rng.randint(1, 3))]
    return RingElem(rank, {p: Fraction(rng.randint(-4, 4), rng.randint(1, 3)) for p in pts})


@pytest.mark.criterion(11, "deformed product: associative, commutative, unital on 500 random triples")
def test_c11_product_laws():
    rng = random.Random(2026)
    for _ in range(500):
        fan = rng.choice(SHIPPED)
        phi = _random_convex(rng, fan)
        q = rng.choice([Q, 0, 1, Fraction(2), Fraction(-1, 2)])
        x, y, z = (_random_elem(rng, fan.rank) for _ in range(3))

        def mul(a, b):
            return deformed_product(a, b, phi, q)

        assert mul(mul(x, y), z) == mul(x, mul(y, z))
        assert mul(x, y) == mul(y, x)
        assert mul(RingElem.one(fan.rank), x) == x


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
