"""Exact coefficient arithmetic and linear algebra.

Two coefficient fields are used throughout the package:

* ``fractions.Fraction`` for the deformation parameter specialised to a
  rational value, and
* :class:`RatFunc`, univariate rational functions in the symbol ``q``.

Both support ``+ - * / **`` and equality, so code downstream is written once
and works with either field.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence


class ZeroDivision(ArithmeticError):
    """Raised on inversion of an exact zero."""


# ---------------------------------------------------------------------------
# univariate polynomials as coefficient tuples (ascending degree)
# ---------------------------------------------------------------------------


def exact_div(a, b):
    """Exact quotient; int / int stays rational instead of becoming a float."""
    if isinstance(a, int) and isinstance(b, int):
        return _intify(Fraction(a, b))
    return a / b


_div = exact_div


def _intify(x):
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


def ptrim(c: Sequence) -> tuple:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def padd(a: Sequence, b: Sequence) -> tuple:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, x in enumerate(b):
        out[i] = out[i] + x
    return ptrim(out)


def pneg(a: Sequence) -> tuple:
    return tuple(-x for x in a)


def psub(a: Sequence, b: Sequence) -> tuple:
    return padd(a, pneg(b))


def pmul(a: Sequence, b: Sequence) -> tuple:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x == 0:
            continue
        for j, y in enumerate(b):
            out[i + j] = out[i + j] + x * y
    return ptrim(out)


def pscale(a: Sequence, s) -> tuple:
    if s == 0:
        return ()
    return tuple(x * s for x in a)


def pdivmod(a: Sequence, b: Sequence) -> tuple[tuple, tuple]:
    """Polynomial long division over a field."""
    b = ptrim(b)
    if not b:
        raise ZeroDivision("polynomial division by zero")
    a = list(ptrim(a))
    if len(a) < len(b):
        return (), tuple(a)
    lead = b[-1]
    quot = [0] * (len(a) - len(b) + 1)
    for k in range(len(a) - len(b), -1, -1):
        coef = _div(a[k + len(b) - 1], lead)
        quot[k] = coef
        if coef != 0:
            for j, y in enumerate(b):
                a[k + j] = a[k + j] - coef * y
    return ptrim(quot), ptrim(a[: len(b) - 1])


def pmonic(a: Sequence) -> tuple:
    a = ptrim(a)
    if not a:
        return a
    lead = a[-1]
    if lead == 1:
        return a
    return tuple(_div(x, lead) for x in a)


def pgcd(a: Sequence, b: Sequence) -> tuple:
    """Monic gcd over a field (the zero polynomial has gcd ``()``)."""
    a, b = ptrim(a), ptrim(b)
    while b:
        a, b = b, pdivmod(a, b)[1]
    return pmonic(a)


def pderiv(a: Sequence) -> tuple:
    return ptrim([i * a[i] for i in range(1, len(a))])


def peval(a: Sequence, x):
    acc = 0
    for c in reversed(a):
        acc = acc * x + c
    return acc


def pexact_div(a: Sequence, b: Sequence) -> tuple:
    q, r = pdivmod(a, b)
    if r:
        raise ArithmeticError("inexact polynomial division")
    return q


# ---------------------------------------------------------------------------
# rational functions in q
# ---------------------------------------------------------------------------


def _frac_poly(c: Iterable) -> tuple:
    # integral coefficients are stored as ints: much cheaper arithmetic
    return ptrim(_intify(Fraction(x)) for x in c)


class RatFunc:
    """Element of Q(q): a reduced fraction of polynomials, monic denominator."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num: Sequence = (), den: Sequence = (1,), *, _normalized=False):
        if _normalized:
            self.num, self.den = num, den
        else:
            self.num, self.den = ratfunc_normalize(num, den)
        self._hash = None

    @classmethod
    def q(cls) -> "RatFunc":
        return cls((0, 1), (1,), _normalized=True)

    @classmethod
    def const(cls, c) -> "RatFunc":
        c = _intify(Fraction(c))
        return cls((c,) if c else (), (1,), _normalized=True)

    @classmethod
    def monomial(cls, c, k: int) -> "RatFunc":
        c = _intify(Fraction(c))
        if c == 0:
            return cls((), (1,), _normalized=True)
        if k >= 0:
            return cls((0,) * k + (c,), (1,), _normalized=True)
        return cls((c,), (0,) * (-k) + (1,), _normalized=True)

    # coercion ------------------------------------------------------------
    @staticmethod
    def _coerce(x) -> "RatFunc":
        if isinstance(x, RatFunc):
            return x
        if isinstance(x, (int, Fraction)):
            return RatFunc.const(x)
        return NotImplemented

    def is_polynomial(self) -> bool:
        return self.den == (1,)

    def is_constant(self) -> bool:
        return self.den == (1,) and len(self.num) <= 1

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ValueError(f"{self} is not constant")
        return Fraction(self.num[0]) if self.num else Fraction(0)

    def specialize(self, value) -> Fraction:
        d = peval(self.den, Fraction(value))
        if d == 0:
            raise ZeroDivision(f"denominator of {self} vanishes at q={value}")
        return Fraction(peval(self.num, Fraction(value))) / d

    # arithmetic ------------------------------------------------------------
    def __bool__(self):
        return bool(self.num)

    def __neg__(self):
        return RatFunc(pneg(self.num), self.den, _normalized=True)

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if not o.num:
            return self
        if not self.num:
            return o
        if self.den == o.den:
            if self.den == (1,):
                return RatFunc(padd(self.num, o.num), self.den, _normalized=True)
            return RatFunc(padd(self.num, o.num), self.den)
        return RatFunc(
            padd(pmul(self.num, o.den), pmul(o.num, self.den)), pmul(self.den, o.den)
        )

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if self.den == (1,) and o.den == (1,):
            return RatFunc(psub(self.num, o.num), self.den, _normalized=True)
        return self + (-o)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            if other == 0 or not self.num:
                return RatFunc((), (1,), _normalized=True)
            return RatFunc(pscale(self.num, _intify(Fraction(other))), self.den, _normalized=True)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if not self.num or not o.num:
            return RatFunc((), (1,), _normalized=True)
        if self.den == (1,) and o.den == (1,):
            return RatFunc(pmul(self.num, o.num), self.den, _normalized=True)
        return RatFunc(pmul(self.num, o.num), pmul(self.den, o.den))

    __rmul__ = __mul__

    def inv(self) -> "RatFunc":
        if not self.num:
            raise ZeroDivision("inverse of zero rational function")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inv()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inv()

    def __pow__(self, k: int):
        if k < 0:
            return self.inv() ** (-k)
        out = RatFunc.const(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return False
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den)) if not self.is_constant() else hash(
                self.constant_value()
            )
        return self._hash

    def __repr__(self):
        n = _poly_str(self.num)
        if self.den == (1,):
            return n
        return f"({n})/({_poly_str(self.den)})"


def poly_str(c: Sequence, var: str = "T") -> str:
    """Readable form of an ascending coefficient sequence, highest term first.

    Coefficients may be rationals or rational functions of ``q``.
    """
    return _poly_str(ptrim(tuple(c)), var)


def _poly_str(c: Sequence, var: str = "q") -> str:
    if not c:
        return "0"
    parts = []
    for k, x in enumerate(c):
        if x == 0:
            continue
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        if mono and x == 1:
            parts.append(mono)
        elif mono and x == -1:
            parts.append("-" + mono)
        else:
            xs = str(x)
            if mono and " " in xs:
                xs = f"({xs})"
            parts.append(f"{xs}{'*' + mono if mono else ''}")
    return " + ".join(reversed(parts)).replace("+ -", "- ")


def ratfunc_normalize(p: Sequence, r: Sequence) -> tuple[tuple, tuple]:
    """Reduce ``p/r`` to lowest terms with a monic denominator."""
    p, r = _frac_poly(p), _frac_poly(r)
    if not r:
        raise ZeroDivision("zero denominator")
    if not p:
        return (), (1,)
    g = pgcd(p, r)
    if len(g) > 1:
        p, r = pexact_div(p, g), pexact_div(r, g)
    lead = r[-1]
    if lead != 1:
        inv = _div(1, lead)
        p, r = pscale(p, inv), pscale(r, inv)
    return p, r


Q = RatFunc.q()


def is_symbolic(x) -> bool:
    return isinstance(x, RatFunc)


def as_scalar(x):
    """Canonical scalar: ints and strings become Fractions, RatFunc stays."""
    if isinstance(x, RatFunc):
        return x
    return Fraction(x)


def field_arithmetic(a, b, op: str):
    """Dispatch for the exact field operations used in tests and the CLI."""
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    if op == "neg":
        return -b
    if op == "eq":
        return a == b
    if op == "inv":
        if b == 0:
            raise ZeroDivision("inverse of zero")
        return b.inv() if isinstance(b, RatFunc) else 1 / Fraction(b)
    raise ValueError(f"unknown op {op!r}")


def qpow(q, c: int):
    """``q**c`` where ``q`` is a rational, zero, or the symbol ``Q``."""
    if isinstance(q, RatFunc):
        if q == Q:
            return RatFunc.monomial(1, c)
        return q**c
    q = Fraction(q)
    if q == 0:
        if c < 0:
            raise ZeroDivision("negative power of q = 0")
        return Fraction(1) if c == 0 else Fraction(0)
    return q**c


def specialize(x, value) -> Fraction:
    return x.specialize(value) if isinstance(x, RatFunc) else Fraction(x)


def scalar_to_json(x):
    """``"num/den"`` for rationals, an ascending coefficient list for
    polynomials in ``q`` and ``{"num": [...], "den": [...]}`` otherwise."""
    if isinstance(x, RatFunc):
        if x.is_constant():
            return _frac_str(x.constant_value())
        num = [_frac_str(Fraction(c)) for c in x.num]
        if tuple(x.den) == (1,):
            return num
        return {"num": num, "den": [_frac_str(Fraction(c)) for c in x.den]}
    return _frac_str(Fraction(x))


def scalar_from_json(obj):
    if isinstance(obj, list):
        return RatFunc([Fraction(c) for c in obj], [1])
    if isinstance(obj, dict):
        return RatFunc([Fraction(c) for c in obj["num"]], [Fraction(c) for c in obj["den"]])
    return Fraction(obj)


def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# exact matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExactMatrix:
    rows: int
    cols: int
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        for (i, j), v in list(self.entries.items()):
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexError((i, j))
            if v == 0:
                del self.entries[(i, j)]

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence]) -> "ExactMatrix":
        r = len(rows)
        c = len(rows[0]) if r else 0
        ent = {(i, j): as_scalar(v) for i, row in enumerate(rows) for j, v in enumerate(row) if v != 0}
        return cls(r, c, ent)

    def to_dense(self) -> list[list]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def row_dicts(self) -> list[dict]:
        rows: list[dict] = [dict() for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            rows[i][j] = v
        return rows

    def matvec(self, v: Sequence) -> list:
        out = [0] * self.rows
        for (i, j), x in self.entries.items():
            if v[j] != 0:
                out[i] = out[i] + x * v[j]
        return out

    def map(self, fn: Callable[[Any], Any]) -> "ExactMatrix":
        return ExactMatrix(self.rows, self.cols, {k: fn(v) for k, v in self.entries.items()})


def _rref(rows: list[dict], ncols: int) -> tuple[list[dict], list[int]]:
    """Gauss-Jordan elimination on sparse rows; pivots scanned by column."""
    rows = [dict(r) for r in rows if r]
    pivots: list[int] = []
    done: list[dict] = []
    for col in range(ncols):
        pick = None
        for idx, r in enumerate(rows):
            if r.get(col, 0) != 0:
                pick = idx
                break
        if pick is None:
            continue
        prow = rows.pop(pick)
        lead = prow[col]
        if lead != 1:
            prow = {k: v / lead for k, v in prow.items()}
        for r in rows + done:
            c = r.get(col)
            if c:
                for k, v in prow.items():
                    nv = r.get(k, 0) - c * v
                    if nv == 0:
                        r.pop(k, None)
                    else:
                        r[k] = nv
        done.append(prow)
        pivots.append(col)
    return done, pivots


def _kernel_from_rref(rref: list[dict], pivots: list[int], ncols: int) -> list[list]:
    pivset = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivset:
            continue
        v = [Fraction(0)] * ncols
        v[free] = Fraction(1)
        for prow, pc in zip(rref, pivots):
            c = prow.get(free)
            if c:
                v[pc] = -c
        basis.append(v)
    return basis


def _bareiss_rows(rows: list[list], ncols: int) -> tuple[list[list], list[int]]:
    """Fraction-free elimination; entries are ints or polynomial tuples."""
    poly = any(isinstance(x, tuple) for r in rows for x in r)
    zero = () if poly else 0
    one = (Fraction(1),) if poly else 1
    mul = pmul if poly else (lambda a, b: a * b)
    sub = psub if poly else (lambda a, b: a - b)
    div = pexact_div if poly else (lambda a, b: _int_exact_div(a, b))
    is_zero = (lambda x: not x) if poly else (lambda x: x == 0)

    m = [list(r) for r in rows]
    nr = len(m)
    prev = one
    r = 0
    pivots = []
    for col in range(ncols):
        if r >= nr:
            break
        pick = next((i for i in range(r, nr) if not is_zero(m[i][col])), None)
        if pick is None:
            continue
        m[r], m[pick] = m[pick], m[r]
        p = m[r][col]
        for i in range(r + 1, nr):
            a = m[i][col]
            for j in range(col, ncols):
                m[i][j] = div(sub(mul(p, m[i][j]), mul(a, m[r][j])), prev)
        for j in range(col):
            m[r][j] = zero
        prev = p
        pivots.append(col)
        r += 1
    return m[:r], pivots


def _int_exact_div(a: int, b: int) -> int:
    q, rem = divmod(a, b)
    if rem:
        raise ArithmeticError("inexact integer division in Bareiss step")
    return q


def _clear_denominators(rows: list[list]) -> list[list]:
    """Scale each row to integer (or polynomial) entries."""
    symbolic = any(isinstance(x, RatFunc) for row in rows for x in row)
    out = []
    for row in rows:
        if symbolic:
            lcm: tuple = (Fraction(1),)
            for x in row:
                x = RatFunc._coerce(x)
                if x:
                    g = pgcd(lcm, x.den)
                    lcm = pmul(lcm, pexact_div(x.den, g))
            newrow = []
            for x in row:
                x = RatFunc._coerce(x)
                newrow.append(pmul(x.num, pexact_div(lcm, x.den)) if x else ())
            out.append(newrow)
        else:
            den = 1
            for x in row:
                den = den * Fraction(x).denominator // _gcd(den, Fraction(x).denominator)
            out.append([int(Fraction(x) * den) for x in row])
    return out


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return abs(a)


def kernel_and_rank(m: ExactMatrix, method: str = "gauss") -> tuple[int, list[list]]:
    """Rank and a reduced-echelon kernel basis of ``m``.

    ``method="gauss"`` runs Gauss-Jordan over the field directly;
    ``method="bareiss"`` eliminates fraction-free over Z or Q[q] first and
    only forms fractions in the final back-substitution.  Both return the
    same kernel basis (the reduced echelon basis is unique).
    """
    if method == "gauss":
        rref, piv = _rref(m.row_dicts(), m.cols)
        return len(piv), _kernel_from_rref(rref, piv, m.cols)
    if method != "bareiss":
        raise ValueError(method)
    dense = m.to_dense()
    if not dense:
        return 0, [[Fraction(int(i == j)) for i in range(m.cols)] for j in range(m.cols)]
    cleared = _clear_denominators(dense)
    ech, piv = _bareiss_rows(cleared, m.cols)
    symbolic = any(isinstance(x, tuple) for r in cleared for x in r)
    back = []
    for row in ech:
        if symbolic:
            back.append({j: RatFunc(x) for j, x in enumerate(row) if x})
        else:
            back.append({j: Fraction(x) for j, x in enumerate(row) if x})
    rref, piv2 = _rref(back, m.cols)
    assert piv2 == piv
    return len(piv), _kernel_from_rref(rref, piv, m.cols)


def rank(m: ExactMatrix, method: str = "gauss") -> int:
    return kernel_and_rank(m, method)[0]


# ---------------------------------------------------------------------------
# incremental sparse echelon form (Macaulay-matrix style)
# ---------------------------------------------------------------------------


class SparseEchelon:
    """Row echelon form under a fixed total order on column keys.

    Rows are dicts ``key -> scalar``.  The pivot of a row is its *smallest*
    key.  Rows may be added at any time; the echelon property is kept with
    respect to the same order, so growing the column set is allowed as long
    as the order between existing keys never changes.
    """

    def __init__(self):
        self.pivots: dict = {}

    def __len__(self):
        return len(self.pivots)

    def add(self, row: dict) -> Any:
        """Insert ``row``; returns the new pivot key or ``None`` if dependent."""
        row = {k: v for k, v in row.items() if v != 0}
        while row:
            lead = min(row)
            prow = self.pivots.get(lead)
            if prow is None:
                c = row[lead]
                if c != 1:
                    inv = _div(1, c)
                    row = {k: v * inv for k, v in row.items()}
                self.pivots[lead] = row
                return lead
            c = row.pop(lead)
            for k, v in prow.items():
                if k == lead:
                    continue
                old = row.get(k)
                nv = -(c * v) if old is None else old - c * v
                if nv == 0:
                    del row[k]
                else:
                    row[k] = nv
        return None

    def reduce(self, vec: dict) -> dict:
        """Full reduction: the result has no pivot keys in its support."""
        vec = {k: v for k, v in vec.items() if v != 0}
        heap = [k for k in vec if k in self.pivots]
        heapq.heapify(heap)
        while heap:
            k = heapq.heappop(heap)
            c = vec.get(k)
            if not c:
                continue
            prow = self.pivots[k]
            for kk, v in prow.items():
                old = vec.get(kk)
                nv = -(c * v) if old is None else old - c * v
                if nv == 0:
                    vec.pop(kk, None)
                else:
                    if kk not in vec and kk in self.pivots:
                        heapq.heappush(heap, kk)
                    vec[kk] = nv
        return vec
