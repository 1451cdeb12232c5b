"""The group algebra of the A-lattice with the q-deformed product.

``e^a o e^b = q^c(a, b) e^(a + b)`` where ``c`` is the deformation exponent
of a convex PL function.  At ``q = 0`` every term with ``c > 0`` dies, so
only products inside a common cone survive.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

from toricqh.lattice_fan import (
    Fan,
    PLFunction,
    deformation_exponent,
    hypersurface_fan,
    pl_eval,
    projective_fan,
)
from toricqh.scalars import ZeroDivision, as_scalar, qpow

Point = tuple[int, ...]


class RelationError(AssertionError):
    """A presentation relation failed; carries both sides."""

    def __init__(self, name, lhs, rhs):
        super().__init__(f"{name}: {lhs!r} != {rhs!r}")
        self.lhs, self.rhs = lhs, rhs


class RingElem:
    """Finite linear combination of exponentials ``e^a`` on a rank-``r`` lattice."""

    __slots__ = ("rank", "terms")

    def __init__(self, rank: int, terms: Mapping[Sequence[int], object] | None = None):
        self.rank = rank
        clean = {}
        for k, v in (terms or {}).items():
            k = tuple(int(x) for x in k)
            if len(k) != rank:
                raise ValueError(f"point {k} is not in a rank-{rank} lattice")
            if v != 0:
                clean[k] = clean.get(k, 0) + as_scalar(v)
                if clean[k] == 0:
                    del clean[k]
        self.terms = clean

    @classmethod
    def exp(cls, alpha: Sequence[int], coeff=1) -> "RingElem":
        return cls(len(alpha), {tuple(alpha): coeff})

    @classmethod
    def one(cls, rank: int) -> "RingElem":
        return cls(rank, {(0,) * rank: 1})

    @classmethod
    def zero(cls, rank: int) -> "RingElem":
        return cls(rank)

    def _check(self, other: "RingElem"):
        if other.rank != self.rank:
            raise ValueError("elements live on different lattices")

    def __add__(self, other: "RingElem") -> "RingElem":
        self._check(other)
        t = dict(self.terms)
        for k, v in other.terms.items():
            t[k] = t.get(k, 0) + v
        return RingElem(self.rank, t)

    def __neg__(self) -> "RingElem":
        return RingElem(self.rank, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other: "RingElem") -> "RingElem":
        return self + (-other)

    def scale(self, c) -> "RingElem":
        return RingElem(self.rank, {k: v * c for k, v in self.terms.items()})

    def __rmul__(self, c) -> "RingElem":
        return self.scale(c)

    def __eq__(self, other):
        if isinstance(other, RingElem):
            return self.rank == other.rank and self.terms == other.terms
        if other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.rank, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    def __repr__(self):
        if not self.terms:
            return "0"
        return " + ".join(f"({v})e^{k}" for k, v in sorted(self.terms.items()))


def t_twist(x: RingElem, phi: PLFunction, q, direction: str = "forward") -> RingElem:
    """Scale ``e^a`` by ``q^phi(a)`` (forward) or ``q^-phi(a)`` (inverse)."""
    if direction not in ("forward", "inverse"):
        raise ValueError("direction is 'forward' or 'inverse'")
    if direction == "inverse" and q == 0:
        raise ZeroDivision("the inverse twist needs q != 0")
    sign = 1 if direction == "forward" else -1
    return RingElem(x.rank, {a: c * qpow(q, sign * pl_eval(phi, a)) for a, c in x.terms.items()})


def mul_terms(x: Mapping, y: Mapping, phi: PLFunction, q) -> dict:
    """Deformed product on raw term dicts."""
    out: dict = {}
    for a, ca in x.items():
        for b, cb in y.items():
            f = qpow(q, deformation_exponent(phi, a, b))
            if f == 0:
                continue
            s = tuple(i + j for i, j in zip(a, b))
            v = out.get(s, 0) + ca * cb * f
            if v == 0:
                out.pop(s, None)
            else:
                out[s] = v
    return out


def deformed_product(x: RingElem, y: RingElem, phi: PLFunction, q) -> RingElem:
    x._check(y)
    return RingElem(x.rank, mul_terms(x.terms, y.terms, phi, q))


def product_of(factors: Iterable[RingElem], phi: PLFunction, q) -> RingElem:
    factors = list(factors)
    acc = RingElem.one(factors[0].rank)
    for f in factors:
        acc = deformed_product(acc, f, phi, q)
    return acc


def ray_elements(fan: Fan) -> list[RingElem]:
    return [RingElem.exp(r) for r in fan.rays]


def presentation_witness(fan: Fan, phi: PLFunction, q) -> list[str]:
    """Check the binomial relation among ray exponentials by direct multiplication.

    Supported fans: projective space (``T x_1...x_N = q^(N+1)``) and the
    hypersurface model (``x_1...x_N T = q^(N+1-n) u^n``).  Returns the
    relations verified; raises :class:`RelationError` otherwise.
    """
    N = fan.rank
    xs = ray_elements(fan)
    if N >= 1 and fan == projective_fan(N):
        lhs = product_of([xs[N]] + xs[:N], phi, q)
        rhs = RingElem.one(N).scale(qpow(q, N + 1))
        name = f"T*x_1*...*x_{N} = q^{N + 1}"
        if lhs != rhs:
            raise RelationError(name, lhs, rhs)
        return [name]
    n = fan.rays[N - 1][-1] if N >= 2 else 0
    if N >= 2 and fan == hypersurface_fan(N - 1, n):
        k = N - 1
        lhs = product_of(xs[:k] + [xs[k]], phi, q)
        u_n = product_of([xs[k + 1]] * n, phi, q)
        rhs = u_n.scale(qpow(q, k + 1 - n))
        name = f"x_1*...*x_{k}*T = q^{k + 1 - n} u^{n}"
        if lhs != rhs:
            raise RelationError(name, lhs, rhs)
        return [name]
    raise ValueError("presentation_witness supports projective and hypersurface fans only")
