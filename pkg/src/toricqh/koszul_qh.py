"""Koszul complex on the deformed semigroup ring and its degree-0 cohomology.

The quotient ``C[L_A] / (g_1, ..., g_N)`` is computed by filtered linear
algebra: lattice points are graded by a level function, the ideal is
approximated by the products ``e^b o g_i`` with ``level(b) <= M`` and the
truncated quotient is read off an incremental sparse echelon form.  Columns
are ordered with the highest level first, so pivots eliminate the top of the
filtration and the surviving (non-pivot) points form a monomial basis.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from toricqh.lattice_fan import (
    Fan,
    PLFunction,
    cone_coords,
    normalized_level,
    projective_fan,
)
from toricqh.scalars import (
    ExactMatrix,
    SparseEchelon,
    exact_div,
    kernel_and_rank,
    pderiv,
    pgcd,
    ptrim,
)
from toricqh.semigroup_ring import RingElem, mul_terms

Point = tuple[int, ...]


class QuotientUnstable(RuntimeError):
    """The truncated quotient did not settle; ``trajectory`` holds (M, dim) pairs."""

    def __init__(self, msg: str, trajectory: list):
        super().__init__(f"{msg}; trajectory {trajectory}")
        self.trajectory = trajectory


class NotReduced(ValueError):
    """Element reaches beyond the level where the quotient was computed."""


# ---------------------------------------------------------------------------
# Koszul complex
# ---------------------------------------------------------------------------


def koszul_generators(fan: Fan) -> list[RingElem]:
    """``g_i = sum_j (xi_j)_i e^{xi_j}``."""
    gens = []
    for i in range(fan.rank):
        gens.append(RingElem(fan.rank, {r: r[i] for r in fan.rays if r[i]}))
    return gens


class KoszulElem:
    """Sum of ``c e^a Phi_S`` with ``S`` an ascending tuple of odd indices."""

    __slots__ = ("rank", "terms")

    def __init__(self, rank: int, terms: dict | None = None):
        self.rank = rank
        clean: dict = {}
        for (a, s), c in (terms or {}).items():
            a = tuple(a)
            s = tuple(s)
            if list(s) != sorted(set(s)):
                raise ValueError(f"odd index set {s} must be strictly ascending")
            if c != 0:
                v = clean.get((a, s), 0) + c
                if v == 0:
                    clean.pop((a, s), None)
                else:
                    clean[(a, s)] = v
        self.terms = clean

    @classmethod
    def monomial(cls, alpha: Sequence[int], S: Sequence[int] = (), coeff=1) -> "KoszulElem":
        return cls(len(alpha), {(tuple(alpha), tuple(S)): coeff})

    def __add__(self, other):
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return KoszulElem(self.rank, t)

    def scale(self, c):
        return KoszulElem(self.rank, {k: v * c for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + other.scale(-1)

    def __eq__(self, other):
        if isinstance(other, KoszulElem):
            return self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({c})e^{a}Phi{list(s)}" for (a, s), c in sorted(self.terms.items()))


def koszul_differential(
    x: KoszulElem, fan: Fan, phi: PLFunction, q, generators: list[RingElem] | None = None
) -> KoszulElem:
    """``D(e^a Phi_S) = sum_{i in S} (-1)^{#(j in S, j < i)} (g_i o e^a) Phi_{S - i}``."""
    gens = generators if generators is not None else koszul_generators(fan)
    out: dict = {}
    for (a, S), c in x.terms.items():
        for pos, i in enumerate(S):
            rest = S[:pos] + S[pos + 1 :]
            sign = -1 if pos % 2 else 1
            for b, cb in mul_terms(gens[i].terms, {a: c}, phi, q).items():
                key = (b, rest)
                out[key] = out.get(key, 0) + sign * cb
    return KoszulElem(x.rank, out)


# ---------------------------------------------------------------------------
# filtered quotient
# ---------------------------------------------------------------------------


@dataclass
class QuotientPresentation:
    fan: Fan
    phi: PLFunction
    q: object
    basis: list[Point]
    structure_constants: dict
    minpolys: dict
    stabilization_level: int
    working_level: int
    trajectory: list
    generators: list[RingElem] = field(repr=False, default_factory=list)
    _level: PLFunction | None = field(repr=False, default=None)
    _echelon: SparseEchelon | None = field(repr=False, default=None)
    timing: float = 0.0

    @property
    def dim(self) -> int:
        return len(self.basis)

    def level(self, p: Point) -> int:
        return _level_of(self._level, p)

    def basis_labels(self) -> list[str]:
        return [point_label(self.fan, p) for p in self.basis]

    def unit_vector(self, k: int) -> list:
        return [Fraction(int(i == k)) for i in range(self.dim)]

    def multiply(self, u: Sequence, v: Sequence) -> list:
        out = [Fraction(0)] * self.dim
        for i, ui in enumerate(u):
            if ui == 0:
                continue
            for j, vj in enumerate(v):
                if vj == 0:
                    continue
                w = ui * vj
                for k, s in enumerate(self.structure_constants[(i, j)]):
                    if s != 0:
                        out[k] = out[k] + w * s
        return out


def _level_of(h: PLFunction, p: Point) -> int:
    cone, coef = cone_coords(h.fan, p)
    return sum(c * h.ray_values[j] for j, c in zip(cone, coef))


def point_label(fan: Fan, p: Point) -> str:
    """``e^0``, ``T^k`` on projective space, otherwise ``e^(a_1,...,a_r)``."""
    if not any(p):
        return "e^0"
    N = fan.rank
    if fan == projective_fan(N) and len(set(p)) == 1 and p[0] < 0:
        k = -p[0]
        return "T" if k == 1 else f"T^{k}"
    return "e^(" + ",".join(str(a) for a in p) + ")"


class _FilteredQuotient:
    """Incremental Macaulay-style truncation of the ideal (g_1..g_k)."""

    def __init__(self, fan: Fan, phi: PLFunction, q, level: PLFunction, gens: list[RingElem]):
        self.fan, self.phi, self.q, self.h = fan, phi, q, level
        self.gens = [g.terms for g in gens]
        self.ech = SparseEchelon()
        self.by_level: dict[int, list[Point]] = {0: [(0,) * fan.rank]}
        self.lvl: dict[Point, int] = {(0,) * fan.rank: 0}
        self.M = -1
        self.ray_lvls = [(r, _level_of(level, r)) for r in fan.rays]
        self.pivot_levels: dict[int, int] = {}

    def key(self, p: Point) -> tuple:
        return (-self.lvl_of(p),) + tuple(-a for a in p)

    def lvl_of(self, p: Point) -> int:
        v = self.lvl.get(p)
        if v is None:
            v = self.lvl[p] = _level_of(self.h, p)
        return v

    def _grow_points(self, M: int):
        # every point of level L is a sum of its cone rays with monotone partial levels
        for L in range(1, M + 1):
            if L in self.by_level:
                continue
            new = set()
            for r, hr in self.ray_lvls:
                for p in self.by_level.get(L - hr, ()):
                    s = tuple(a + b for a, b in zip(p, r))
                    if self.lvl_of(s) == L:
                        new.add(s)
            self.by_level[L] = sorted(new)

    def raise_to(self, M: int):
        self._grow_points(M)
        for L in range(self.M + 1, M + 1):
            for b in self.by_level[L]:
                for g in self.gens:
                    row = mul_terms({b: 1}, g, self.phi, self.q)
                    if not row:
                        continue
                    piv = self.ech.add({self.key(p): c for p, c in row.items()})
                    if piv is not None:
                        self.pivot_levels[-piv[0]] = self.pivot_levels.get(-piv[0], 0) + 1
        self.M = max(self.M, M)

    def basis_upto(self, m: int) -> list[Point]:
        out = []
        for L in range(m + 1):
            for p in self.by_level[L]:
                if self.key(p) not in self.ech.pivots:
                    out.append(p)
        return out

    def reduce(self, terms: dict) -> dict:
        top = max((self.lvl_of(p) for p in terms), default=0)
        if top > self.M:
            raise NotReduced(f"element reaches level {top} > computed level {self.M}")
        red = self.ech.reduce({self.key(p): c for p, c in terms.items()})
        return {tuple(-a for a in k[1:]): c for k, c in red.items()}


def quotient_ring(
    fan: Fan,
    phi: PLFunction,
    q,
    max_level: int = 40,
    *,
    generators: list[RingElem] | None = None,
    level: PLFunction | None = None,
    slack: int = 2,
    stable_steps: int = 3,
) -> QuotientPresentation:
    """Finite-dimensional quotient ``C[L_A] / (g)`` with its structure constants.

    ``level`` defaults to the normalized representative of ``phi`` modulo
    linear functions on complete fans (so ``phi + linear`` gives the same
    filtration) and to ``phi`` itself otherwise.
    """
    t0 = time.perf_counter()
    if level is None:
        level = normalized_level(phi)
    gens = generators if generators is not None else koszul_generators(fan)
    fq = _FilteredQuotient(fan, phi, q, level, gens)
    trajectory: list = []
    history: list = []
    stab = None
    for M in range(slack, max_level + 1):
        fq.raise_to(M)
        m = M - slack
        basis = fq.basis_upto(m)
        trajectory.append((m, len(basis)))
        history.append(tuple(basis))
        if len(history) > stable_steps and len(set(history[-stable_steps - 1 :])) == 1:
            stab = m
            break
    if stab is None:
        raise QuotientUnstable(f"no stabilization up to level {max_level}", trajectory)
    basis = list(history[-1])
    top = max(fq.lvl_of(p) for p in basis)
    max_ray = max(l for _, l in fq.ray_lvls)
    work = max(2 * top, len(basis) * max_ray, stab)
    if work + slack > max_level:
        raise QuotientUnstable(f"working level {work + slack} exceeds max_level {max_level}", trajectory)
    fq.raise_to(work + slack)
    if fq.basis_upto(work) != basis:
        trajectory.append((work, len(fq.basis_upto(work))))
        raise QuotientUnstable("basis changed when extending to the working level", trajectory)

    pres = QuotientPresentation(
        fan=fan,
        phi=phi,
        q=q,
        basis=basis,
        structure_constants={},
        minpolys={},
        stabilization_level=stab,
        working_level=work,
        trajectory=trajectory,
        generators=gens,
        _level=level,
        _echelon=fq.ech,
    )
    pres._fq = fq
    for i, a in enumerate(basis):
        for j, b in enumerate(basis):
            if j < i:
                pres.structure_constants[(i, j)] = pres.structure_constants[(j, i)]
                continue
            prod = mul_terms({a: 1}, {b: 1}, phi, q)
            pres.structure_constants[(i, j)] = normal_form(pres, RingElem(fan.rank, prod))
    names = generator_names(fan)
    for name, r in zip(names, fan.rays):
        pres.minpolys[name] = minimal_polynomial(pres, RingElem.exp(r))
    pres.timing = time.perf_counter() - t0
    return pres


def generator_names(fan: Fan) -> list[str]:
    N = fan.rank
    if fan == projective_fan(N):
        return [f"x{i + 1}" for i in range(N)] + ["T"]
    return [f"e^({','.join(map(str, r))})" for r in fan.rays]


def normal_form(p: QuotientPresentation, x: RingElem) -> list:
    """Coordinates of ``x`` modulo the ideal in the basis of ``p``."""
    fq = p._fq
    for a in x.terms:
        if fq.lvl_of(a) > p.working_level:
            raise NotReduced(f"e^{a} is above the working level {p.working_level}")
    red = fq.reduce(x.terms)
    index = {b: k for k, b in enumerate(p.basis)}
    out = [Fraction(0)] * p.dim
    for a, c in red.items():
        if a not in index:
            raise QuotientUnstable(f"reduction left non-basis point {a}", p.trajectory)
        out[index[a]] = c
    return out


def power_vectors(p: QuotientPresentation, x: RingElem, k: int) -> list[list]:
    v = normal_form(p, x)
    one = normal_form(p, RingElem.one(p.fan.rank))
    out = [one]
    for _ in range(k):
        out.append(p.multiply(out[-1], v))
    return out


def minimal_polynomial(p: QuotientPresentation, x: RingElem) -> tuple:
    """Monic least-degree annihilating polynomial, ascending coefficients."""
    v = normal_form(p, x)
    powers = [normal_form(p, RingElem.one(p.fan.rank))]
    while True:
        cols = len(powers)
        m = ExactMatrix.from_dense([[powers[c][r] for c in range(cols)] for r in range(p.dim)])
        _, ker = kernel_and_rank(m)
        if ker:
            vec = ker[0]
            lead = vec[-1]
            return ptrim(tuple(exact_div(c, lead) for c in vec))
        if cols > p.dim + 1:
            raise ArithmeticError("no linear dependency among powers")
        powers.append(p.multiply(powers[-1], v))


def is_squarefree(poly: Sequence) -> bool:
    g = pgcd(tuple(poly), pderiv(tuple(poly)))
    return len(ptrim(g)) <= 1


def check_ring_axioms(p: QuotientPresentation) -> list[str]:
    """Commutativity, associativity and unit of the structure constants.

    Returns a list of failures (empty when all hold).
    """
    fails = []
    d = p.dim
    sc = p.structure_constants
    unit = normal_form(p, RingElem.one(p.fan.rank))
    for i in range(d):
        e = p.unit_vector(i)
        if p.multiply(unit, e) != e:
            fails.append(f"unit fails on basis {i}")
        for j in range(d):
            if sc[(i, j)] != sc[(j, i)]:
                fails.append(f"not commutative at {(i, j)}")
            for k in range(d):
                _ej, ek = p.unit_vector(j), p.unit_vector(k)
                lhs = p.multiply(sc[(i, j)], ek)
                rhs = p.multiply(e, sc[(j, k)])
                if lhs != rhs:
                    fails.append(f"not associative at {(i, j, k)}")
    return fails
