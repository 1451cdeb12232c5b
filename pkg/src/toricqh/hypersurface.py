"""Degree-``n`` hypersurfaces in projective space.

The ambient model adds one pair ``A^u, B^u`` to the lattice of ``P^N``.  The
monoid fan has rays ``A^1..A^N``, ``xi_T = n A^u - sum A^j`` and ``A^u``, and
the q-deformation uses the PL function equal to 1 on every ray.  ``x_i``,
``T`` and ``u`` denote ``e^{A^i}``, ``e^{xi_T}`` and ``e^{A^u}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb

from toricqh.koszul_qh import (
    QuotientPresentation,
    is_squarefree,
    minimal_polynomial,
    quotient_ring,
)
from toricqh.lattice_fan import (
    InternalError,
    LatticeModel,
    PLFunction,
    cone_coords,
    hypersurface_fan,
)
from toricqh.scalars import (
    ExactMatrix,
    as_scalar,
    kernel_and_rank,
    pdivmod,
    ptrim,
    qpow,
)
from toricqh.semigroup_ring import RingElem
from toricqh.vertex_fock import (
    BasisMonomial,
    FockContext,
    FockState,
    OperatorSpec,
    build_operator,
    enumerate_basis,
    lattice_ball,
)


class FanoGuardError(ValueError):
    """Raised for ``n >= N + 1``, where the q-family does not reach q = 0."""


def _guard(N: int, n: int):
    if N < 1 or n < 1:
        raise ValueError("need N >= 1 and n >= 1")
    if n >= N + 1:
        raise FanoGuardError(f"degree {n} needs to be below N + 1 = {N + 1}")


@dataclass
class HyperModel:
    N: int
    n: int
    model: LatticeModel = field(init=False)

    def __post_init__(self):
        _guard(self.N, self.n)
        self.model = LatticeModel(self.N, extended=True)
        self.fan = hypersurface_fan(self.N, self.n)
        self.phi = PLFunction(self.fan, (1,) * len(self.fan.rays))

    @property
    def xi_T(self) -> tuple:
        """A-coordinates of ``n A^u - sum A^j``."""
        return (-1,) * self.N + (self.n,)

    def generators(self) -> list[RingElem]:
        """``x_i - T`` and ``n T - u``, the coefficients of the differential."""
        N, rank = self.N, self.N + 1
        u = (0,) * N + (1,)
        gens = []
        for i in range(N):
            x = tuple(int(j == i) for j in range(rank))
            gens.append(RingElem(rank, {x: 1, self.xi_T: -1}))
        gens.append(RingElem(rank, {self.xi_T: self.n, u: -1}))
        return gens

    def context(self, q) -> FockContext:
        return FockContext(self.model, self.fan, self.phi, q, self.generators())

    def in_support(self, a) -> bool:
        try:
            cone_coords(self.fan, tuple(a))
        except InternalError:
            return False
        return True

    def sample(self, weight: int, steps: int = 1) -> list[BasisMonomial]:
        """Basis monomials up to ``weight`` over lattice points with A-part in the support."""
        r = self.model.r
        pts = [g for g in lattice_ball(self.model, steps) if self.in_support(g[:r])]
        return enumerate_basis(self.model, weight, None, pts)


@dataclass
class DualPointSet:
    """Points ``beta = B^u + sum n_j B^j`` with nonnegative weights."""

    N: int
    n: int
    points: list  # (full lattice point, weight)

    def __len__(self):
        return len(self.points)

    def exponents(self) -> list[tuple]:
        r = self.N + 1
        return [beta[r : r + self.N] for beta, _ in self.points]


def delta_star(N: int, n: int, weights=None) -> DualPointSet:
    """All ``beta`` pairing nonnegatively with every ray; unit weights by default.

    ``weights`` may map the exponent tuple ``(n_1, ..., n_N)`` to a weight.
    """
    _guard(N, n)
    hm = HyperModel(N, n)
    M = hm.model
    rays = [tuple(int(i == j) for j in range(N)) + (0,) for i in range(N)] + [hm.xi_T]
    pts = []
    for ns in itertools.product(range(n + 1), repeat=N):
        if sum(ns) > n:
            continue
        beta = M.point((), tuple(ns) + (1,))
        if all(M.pairing(beta, M.embed_a(x)) >= 0 for x in rays):
            w = 1 if weights is None else weights.get(tuple(ns), 0)
            if w < 0:
                raise ValueError("weights must be nonnegative")
            pts.append((beta, w))
    assert len(pts) == comb(N + n, N)
    return DualPointSet(N, n, pts)


def build_Kg(d: DualPointSet) -> OperatorSpec:
    if any(w < 0 for _, w in d.points):
        raise ValueError("weights must be nonnegative")
    return OperatorSpec.make("Kg", points=tuple(d.points))


def aq_presentation(N: int, n: int, q, max_level: int = 40) -> QuotientPresentation:
    """Quotient of the extended semigroup ring by ``x_i - T`` and ``n T - u``."""
    hm = HyperModel(N, n)
    pres = quotient_ring(hm.fan, hm.phi, q, max_level, generators=hm.generators(), level=hm.phi)
    pres.minpolys["T"] = minimal_polynomial(pres, RingElem.exp(hm.xi_T))
    return pres


def relation_poly(N: int, n: int, q) -> tuple:
    """``T^{N+1} - q^{N+1-n} n^n T^n``, ascending."""
    c = [0] * (N + 2)
    c[N + 1] = 1
    c[n] = -as_scalar(qpow(q, N + 1 - n)) * n**n
    return ptrim(tuple(c))


def divides(a, b) -> bool:
    return not any(ptrim(pdivmod(tuple(b), tuple(a))[1]))


def t_power_split(p) -> tuple[int, tuple]:
    """``p = T^k * rest`` with ``rest(0) != 0``."""
    p = ptrim(tuple(p))
    k = 0
    while k < len(p) - 1 and p[k] == 0:
        k += 1
    return k, p[k:]


@dataclass
class CheckReport:
    N: int
    n: int
    q: object
    checks: list = field(default_factory=list)  # (name, ok, detail)

    def add(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)


def kg_annihilates_T(N: int, n: int, q, weights=None) -> FockState:
    """``(D + K_g)`` applied to ``e^{n A^u - sum A^j}``; zero when the identity holds."""
    hm = HyperModel(N, n)
    ctx = hm.context(q)
    D = build_operator(OperatorSpec("D"), ctx)
    K = build_operator(build_Kg(delta_star(N, n, weights)), ctx)
    s = FockState.vacuum(hm.model.embed_a(hm.xi_T))
    return D(s) + K(s)


def prop34_checks(N: int, n: int, q, weights=None, pres: QuotientPresentation | None = None) -> CheckReport:
    rep = CheckReport(N, n, q)
    res = kg_annihilates_T(N, n, q, weights)
    rep.add("(D+K_g) e^T = 0", not res, "" if not res else repr(res))
    pres = pres or aq_presentation(N, n, q)
    mp = pres.minpolys["T"]
    rep.add("minpoly divides T^(N+1) - q^(N+1-n) n^n T^n", divides(mp, relation_poly(N, n, q)), mp)
    if n == 1:
        rep.add("n=1: degree <= N+1", len(mp) - 1 <= N + 1, len(mp) - 1)
        if q != 0:
            rep.add("n=1: squarefree", is_squarefree(mp))
    if (N, n) == (3, 2) and q == 1:
        rep.add("quadric: minpoly = T^4 - 4T^2", mp == relation_poly(3, 2, 1), mp)
        rep.add("quadric: T generates a 4-dimensional algebra", len(mp) - 1 == 4, len(mp) - 1)
    return rep


def givental_compare(N: int, n: int, q, pres: QuotientPresentation | None = None) -> dict:
    """Compare the minimal polynomial of ``T`` with the two candidate relations.

    Exploratory: nothing is asserted.
    """
    _guard(N, n)
    pres = pres or aq_presentation(N, n, q)
    mp = pres.minpolys["T"]
    full = relation_poly(N, n, q)
    # suggested: T^N - q^{N+1-n} n^n T^{n-1}
    suggested = full[1:]
    if mp == full:
        verdict = "T*(T^N - c T^(n-1))"
    elif mp == suggested:
        verdict = "T^N - c T^(n-1)"
    else:
        verdict = "neither"
    mk, mrest = t_power_split(mp)
    return {
        "minpoly": mp,
        "t_power": mk,
        "cofactor": mrest,
        "relation": full,
        "suggested": suggested,
        "verdict": verdict,
    }


def experimental_dims(N: int, n: int, q, steps: int = 1) -> list[dict]:
    """Rank data of ``D + K_g`` on weight-0 states over a small lattice window.

    Images may leave the window, so no cohomology is inferred.  For each
    fermionic charge the report gives the number of states, the rank of the
    differential on them and the kernel dimension.
    """
    hm = HyperModel(N, n)
    ctx = hm.context(q)
    d = build_operator(OperatorSpec("D"), ctx)
    k = build_operator(build_Kg(delta_star(N, n)), ctx)
    states = [m for m in hm.sample(0, steps) if m.weight == 0]
    by_charge: dict = {}
    for m in states:
        by_charge.setdefault(m.charge, []).append(m)

    def rank_out(src):
        cols = [dict(d.on_terms({m: 1})) for m in src]
        for col, m in zip(cols, src):
            for t, v in k.on_terms({m: 1}).items():
                col[t] = col.get(t, 0) + v
        index: dict = {}
        for col in cols:
            for t in col:
                index.setdefault(t, len(index))
        if not index or not cols:
            return 0
        entries = {(index[t], j): v for j, col in enumerate(cols) for t, v in col.items() if v != 0}
        return kernel_and_rank(ExactMatrix(len(index), len(cols), entries))[0]

    ranks = {c: rank_out(src) for c, src in by_charge.items()}
    out = []
    for c in sorted(by_charge):
        size = len(by_charge[c])
        out.append(
            {
                "charge": c,
                "states": size,
                "rank_out": ranks[c],
                "kernel": size - ranks[c],
            }
        )
    return out
