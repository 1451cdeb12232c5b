"""Lattices, regular fans and piecewise-linear functions.

The even lattice ``L`` has basis ``A^1..A^r, B^1..B^r`` with the hyperbolic
form ``(A^i, B^j) = delta_ij``.  Points are plain integer tuples laid out as
``(a_1, ..., a_r, b_1, ..., b_r)``; the A-sublattice (where fans live) is
addressed by ``r``-tuples.

Fans are simplicial: rays are primitive integer vectors and maximal cones
are tuples of 0-based ray indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from math import gcd
from typing import Sequence

import numpy as np

Point = tuple[int, ...]


class FanError(ValueError):
    """Invalid fan or PL data."""


class ConvexityError(FanError):
    pass


class InternalError(RuntimeError):
    """Two independent checks disagreed."""


# ---------------------------------------------------------------------------
# lattice
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LatticeModel:
    """``N`` pairs ``A^i, B^i``; ``extended`` appends one more pair ``A^u, B^u``."""

    N: int
    extended: bool = False

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be positive")

    @property
    def r(self) -> int:
        return self.N + int(self.extended)

    @property
    def rank(self) -> int:
        return 2 * self.r

    @property
    def u(self) -> int:
        """0-based index of the extra pair in the extended model."""
        if not self.extended:
            raise AttributeError("model is not extended")
        return self.N

    def zero(self) -> Point:
        return (0,) * self.rank

    def A(self, i: int, k: int = 1) -> Point:
        v = [0] * self.rank
        v[i] = k
        return tuple(v)

    def B(self, i: int, k: int = 1) -> Point:
        v = [0] * self.rank
        v[self.r + i] = k
        return tuple(v)

    def point(self, a: Sequence[int] = (), b: Sequence[int] = ()) -> Point:
        a = list(a) + [0] * (self.r - len(a))
        b = list(b) + [0] * (self.r - len(b))
        if len(a) != self.r or len(b) != self.r:
            raise ValueError("coordinate length mismatch")
        return tuple(int(x) for x in a + b)

    def a_part(self, x: Point) -> Point:
        return tuple(x[: self.r])

    def b_part(self, x: Point) -> Point:
        return tuple(x[self.r :])

    def embed_a(self, a: Sequence[int]) -> Point:
        return self.point(a, ())

    def pairing(self, x: Point, y: Point) -> int:
        if len(x) != self.rank or len(y) != self.rank:
            raise ValueError(f"point does not belong to a rank-{self.rank} lattice")
        r = self.r
        return sum(x[i] * y[r + i] + x[r + i] * y[i] for i in range(r))

    def norm_weight(self, x: Point) -> int:
        """``(x, x) / 2``: the conformal weight of ``e^x``."""
        r = self.r
        return sum(x[i] * x[r + i] for i in range(r))

    def cocycle(self, x: Point, y: Point) -> int:
        """Sign ``eps(x, y) = (-1)^{sum_i b_i(x) a_i(y)}``.

        ``eps(x, y) eps(y, x) = (-1)^{(x, y)}``, which makes the lattice
        vertex operators mutually local.
        """
        r = self.r
        s = sum(x[r + i] * y[i] for i in range(r))
        return -1 if s % 2 else 1


def pairing(model: LatticeModel, x: Point, y: Point) -> int:
    return model.pairing(x, y)


# ---------------------------------------------------------------------------
# Smith normal form (used for the regularity test)
# ---------------------------------------------------------------------------


def smith_invariants(rows: Sequence[Sequence[int]]) -> list[int]:
    """Nonzero invariant factors of an integer matrix."""
    m = [list(map(int, r)) for r in rows]
    if not m or not m[0]:
        return []
    nr, nc = len(m), len(m[0])
    out = []
    t = 0
    while t < min(nr, nc):
        nz = [(abs(m[i][j]), i, j) for i in range(t, nr) for j in range(t, nc) if m[i][j]]
        if not nz:
            break
        _, i, j = min(nz)
        m[t], m[i] = m[i], m[t]
        for row in m:
            row[t], row[j] = row[j], row[t]
        while True:
            p = m[t][t]
            changed = False
            for i in range(t + 1, nr):
                if m[i][t]:
                    f = m[i][t] // p
                    m[i] = [a - f * b for a, b in zip(m[i], m[t])]
                    if m[i][t]:
                        m[t], m[i] = m[i], m[t]
                        changed = True
                        break
            if changed:
                continue
            for j in range(t + 1, nc):
                if m[t][j]:
                    f = m[t][j] // p
                    for row in m:
                        row[j] -= f * row[t]
                    if m[t][j]:
                        for row in m:
                            row[t], row[j] = row[j], row[t]
                        changed = True
                        break
            if changed:
                continue
            bad = next(
                ((i, j) for i in range(t + 1, nr) for j in range(t + 1, nc) if m[i][j] % p),
                None,
            )
            if bad is None:
                break
            m[t] = [a + b for a, b in zip(m[t], m[bad[0]])]
        out.append(abs(m[t][t]))
        t += 1
    return out


# ---------------------------------------------------------------------------
# fans
# ---------------------------------------------------------------------------


def _int_inverse(rows: Sequence[Point]) -> tuple[tuple[Fraction, ...], ...] | None:
    n = len(rows)
    m = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(rows)]
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return None
        m[c], m[p] = m[p], m[c]
        lead = m[c][c]
        m[c] = [x / lead for x in m[c]]
        for i in range(n):
            if i != c and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return tuple(tuple(r[n:]) for r in m)


@dataclass(frozen=True)
class Fan:
    rank: int
    rays: tuple[Point, ...]
    max_cones: tuple[tuple[int, ...], ...]
    complete: bool = True

    def __post_init__(self):
        object.__setattr__(self, "rays", tuple(tuple(int(x) for x in r) for r in self.rays))
        object.__setattr__(self, "max_cones", tuple(tuple(sorted(c)) for c in self.max_cones))
        for r in self.rays:
            if len(r) != self.rank:
                raise FanError(f"ray {r} has wrong length for rank {self.rank}")

    @cached_property
    def _dual(self) -> dict:
        """Cone -> matrix M with coefficients = x @ M (rays as matrix rows)."""
        out = {}
        for c in self.max_cones:
            rows = [self.rays[i] for i in c]
            if len(rows) != self.rank:
                continue
            inv = _int_inverse(rows)
            if inv is not None:
                out[c] = inv
        return out

    @cached_property
    def faces(self) -> frozenset:
        fs = set()
        for c in self.max_cones:
            for k in range(len(c) + 1):
                fs.update(itertools.combinations(c, k))
        return frozenset(fs)

    def cone_coords(self, alpha: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return cone_coords(self, alpha)


def point_fan() -> Fan:
    return Fan(0, (), ((),))


def projective_fan(N: int) -> Fan:
    if N < 1:
        raise FanError("projective_fan needs N >= 1")
    rays = [tuple(int(i == j) for j in range(N)) for i in range(N)]
    rays.append(tuple([-1] * N))
    cones = [tuple(j for j in range(N + 1) if j != i) for i in range(N + 1)]
    return Fan(N, tuple(rays), tuple(cones))


def product_fan(f: Fan, g: Fan) -> Fan:
    rays = [r + (0,) * g.rank for r in f.rays] + [(0,) * f.rank + r for r in g.rays]
    off = len(f.rays)
    cones = [c + tuple(off + j for j in d) for c in f.max_cones for d in g.max_cones]
    return Fan(f.rank + g.rank, tuple(rays), tuple(cones), f.complete and g.complete)


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------


@dataclass
class FanReport:
    failures: list[tuple[str, object]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def checks_failed(self) -> set[str]:
        return {name for name, _ in self.failures}

    def __str__(self):
        if self.ok:
            return "fan ok"
        return "; ".join(f"{n}: {w}" for n, w in self.failures)


def _facets(fan: Fan) -> dict[tuple[int, ...], list[tuple[int, ...]]]:
    walls: dict = {}
    for c in fan.max_cones:
        for k in range(len(c)):
            walls.setdefault(c[:k] + c[k + 1 :], []).append(c)
    return walls


def _cones_overlap(fan: Fan, s: tuple[int, ...], t: tuple[int, ...]) -> bool:
    """True if cone(s) and cone(t) meet outside cone(s & t)."""
    from scipy.optimize import linprog

    ss, tt = set(s), set(t)
    only_s = [i for i in s if i not in tt]
    only_t = [i for i in t if i not in ss]
    common = [i for i in s if i in tt]
    if not only_s and not only_t:
        return False
    cols = [fan.rays[i] for i in only_s] + [tuple(-x for x in fan.rays[i]) for i in only_t]
    cols += [fan.rays[i] for i in common]
    nvar = len(cols)
    a_eq = [[c[k] for c in cols] for k in range(fan.rank)]
    a_eq.append([1] * (len(only_s) + len(only_t)) + [0] * len(common))
    b_eq = [0] * fan.rank + [1]
    bounds = [(0, None)] * (len(only_s) + len(only_t)) + [(None, None)] * len(common)
    res = linprog(np.zeros(nvar), A_eq=a_eq, b_eq=b_eq, bounds=bounds, method="highs")
    return res.status == 0


def validate_fan(fan: Fan) -> FanReport:
    """Primitivity, regularity (Smith form), face condition, completeness."""
    rep = FanReport()
    for i, r in enumerate(fan.rays):
        g = 0
        for x in r:
            g = gcd(g, x)
        if g != 1:
            rep.failures.append(("primitive", (i, r)))
    for c in fan.max_cones:
        rows = [fan.rays[i] for i in c]
        inv = smith_invariants(rows) if rows else []
        if len(inv) != len(rows) or any(x != 1 for x in inv):
            rep.failures.append(("regular", (c, inv)))
    for s, t in itertools.combinations(fan.max_cones, 2):
        if _cones_overlap(fan, s, t):
            rep.failures.append(("face", (s, t)))
    if fan.complete:
        for c in fan.max_cones:
            if len(c) != fan.rank:
                rep.failures.append(("complete", ("not full-dimensional", c)))
        for wall, cones in _facets(fan).items():
            if len(cones) != 2:
                rep.failures.append(("complete", ("facet not paired", wall, cones)))
        if fan.max_cones and not _dual_connected(fan):
            rep.failures.append(("complete", "dual graph disconnected"))
    return rep


def _dual_connected(fan: Fan) -> bool:
    adj: dict = {c: set() for c in fan.max_cones}
    for cones in _facets(fan).values():
        for a, b in itertools.combinations(cones, 2):
            adj[a].add(b)
            adj[b].add(a)
    seen = {fan.max_cones[0]}
    stack = [fan.max_cones[0]]
    while stack:
        for n in adj[stack.pop()]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(fan.max_cones)


# ---------------------------------------------------------------------------
# cone coordinates and PL functions
# ---------------------------------------------------------------------------


def cone_coords(fan: Fan, alpha: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Minimal cone containing ``alpha`` and the positive coefficients on its rays."""
    alpha = tuple(alpha)
    if len(alpha) != fan.rank:
        raise ValueError("point has wrong rank")
    if not any(alpha):
        return (), ()
    for cone, inv in fan._dual.items():
        coef = [sum(alpha[k] * inv[k][j] for k in range(fan.rank)) for j in range(len(cone))]
        if all(c >= 0 for c in coef):
            support = tuple(cone[j] for j in range(len(cone)) if coef[j] > 0)
            values = tuple(int(coef[j]) for j in range(len(cone)) if coef[j] > 0)
            return support, values
    raise InternalError(f"{alpha} lies in no cone of the fan")


@dataclass(frozen=True)
class PLFunction:
    fan: Fan
    ray_values: tuple[int, ...]

    def __post_init__(self):
        vals = tuple(int(v) for v in self.ray_values)
        object.__setattr__(self, "ray_values", vals)
        if len(vals) != len(self.fan.rays):
            raise FanError("one value per ray required")

    def __call__(self, alpha: Sequence[int]) -> int:
        return pl_eval(self, alpha)

    def __add__(self, other: "PLFunction") -> "PLFunction":
        if other.fan != self.fan:
            raise FanError("different fans")
        return PLFunction(self.fan, tuple(a + b for a, b in zip(self.ray_values, other.ray_values)))


def height_function(fan: Fan) -> PLFunction:
    """The PL function equal to 1 on every ray."""
    return PLFunction(fan, (1,) * len(fan.rays))


def linear_function(fan: Fan, ell: Sequence[int]) -> PLFunction:
    return PLFunction(fan, tuple(sum(a * b for a, b in zip(ell, r)) for r in fan.rays))


def pl_eval(phi: PLFunction, alpha: Sequence[int]) -> int:
    return _pl_eval_cached(phi, tuple(alpha))


@lru_cache(maxsize=1 << 18)
def _pl_eval_cached(phi: PLFunction, alpha: Point) -> int:
    cone, coef = cone_coords(phi.fan, alpha)
    return sum(c * phi.ray_values[j] for j, c in zip(cone, coef))


def linear_piece(phi: PLFunction, cone: tuple[int, ...]) -> tuple[Fraction, ...]:
    """Linear functional agreeing with ``phi`` on the rays of a maximal cone."""
    inv = phi.fan._dual[cone]
    vals = [phi.ray_values[j] for j in cone]
    return tuple(sum(inv[k][j] * vals[j] for j in range(len(cone))) for k in range(phi.fan.rank))


def _dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def _wall_verdict(phi: PLFunction) -> tuple[bool, bool]:
    convex, strict = True, True
    fan = phi.fan
    for wall, cones in _facets(fan).items():
        if len(cones) != 2:
            continue
        for s, t in (cones, cones[::-1]):
            extra = next(j for j in t if j not in wall)
            lhs = phi.ray_values[extra]
            rhs = _dot(linear_piece(phi, s), fan.rays[extra])
            if lhs < rhs:
                convex = False
            if lhs <= rhs:
                strict = False
    return convex, convex and strict


def _box(rank: int, radius: int) -> np.ndarray:
    rng = np.arange(-radius, radius + 1)
    grids = np.meshgrid(*([rng] * rank), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def _eval_box(phi: PLFunction, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """PL values and support bitmasks on an array of lattice points."""
    fan = phi.fan
    vals = np.zeros(len(pts), dtype=np.int64)
    masks = np.zeros(len(pts), dtype=np.int64)
    found = np.zeros(len(pts), dtype=bool)
    for cone, inv in fan._dual.items():
        m = np.array([[int(x) for x in row] for row in inv], dtype=np.int64)
        coef = pts @ m
        inside = (coef >= 0).all(axis=1) & ~found
        rv = np.array([phi.ray_values[j] for j in cone], dtype=np.int64)
        vals[inside] = coef[inside] @ rv
        bits = np.array([1 << j for j in cone], dtype=np.int64)
        masks[inside] = (coef[inside] > 0) @ bits
        found |= inside
    if not found.all():
        raise InternalError("box point outside the fan")
    return vals, masks


def _brute_verdict(phi: PLFunction, radius: int = 3, chunk: int = 512) -> tuple[bool, bool]:
    fan = phi.fan
    n = fan.rank
    if n == 0:
        return True, True
    small = _box(n, radius)
    big = _box(n, 2 * radius)
    vbig, mbig = _eval_box(phi, big)
    base = 4 * radius + 1
    weights = base ** np.arange(n - 1, -1, -1)
    idx_small = (small + radius) @ weights
    vsmall = vbig[(small + 2 * radius) @ weights]
    msmall = mbig[(small + 2 * radius) @ weights]
    face_ok = np.zeros(1 << len(fan.rays), dtype=bool)
    for f in fan.faces:
        face_ok[sum(1 << j for j in f)] = True
    convex, strict = True, True
    for start in range(0, len(small), chunk):
        sl = slice(start, start + chunk)
        sums = idx_small[sl, None] + idx_small[None, :]
        lhs = vsmall[sl, None] + vsmall[None, :]
        rhs = vbig[sums]
        if (lhs < rhs).any():
            convex = False
        eq = lhs == rhs
        union = msmall[sl, None] | msmall[None, :]
        if (eq & ~face_ok[union]).any():
            strict = False
    return convex, convex and strict


@lru_cache(maxsize=256)
def _convexity(phi: PLFunction) -> tuple[bool, bool]:
    if not phi.fan.complete:
        raise FanError("convexity is only defined here for complete fans")
    wall = _wall_verdict(phi)
    brute = _brute_verdict(phi)
    if wall != brute:
        raise InternalError(f"wall criterion {wall} disagrees with brute force {brute}")
    return wall


def convexity_check(phi: PLFunction, strict: bool = False) -> bool:
    convex, is_strict = _convexity(phi)
    return is_strict if strict else convex


def deformation_exponent(phi: PLFunction, alpha: Sequence[int], beta: Sequence[int]) -> int:
    """``phi(alpha) + phi(beta) - phi(alpha + beta)``; nonnegative for convex ``phi``."""
    if phi.fan.complete and not convexity_check(phi):
        raise ConvexityError("deformation exponent needs a convex PL function")
    s = tuple(a + b for a, b in zip(alpha, beta))
    c = pl_eval(phi, alpha) + pl_eval(phi, beta) - pl_eval(phi, s)
    if c < 0:
        raise ConvexityError(f"negative exponent {c} at {tuple(alpha)}, {tuple(beta)}")
    return c


def normalized_level(phi: PLFunction) -> PLFunction:
    """Representative of ``phi`` modulo linear functions, positive off zero.

    Summing ``phi - L_sigma`` over all maximal cones cancels any linear part;
    dividing by the gcd of the ray values keeps the scale of ``phi`` (the
    height function on projective space is returned unchanged).  Only
    defined for strictly convex ``phi`` on a complete fan.
    """
    fan = phi.fan
    if not fan.complete:
        return phi
    if not convexity_check(phi, strict=True):
        raise ConvexityError("filtration needs a strictly convex PL function")
    pieces = [linear_piece(phi, c) for c in fan.max_cones]
    k = len(pieces)
    vals = []
    for j, ray in enumerate(fan.rays):
        v = k * phi.ray_values[j] - sum(_dot(p, ray) for p in pieces)
        vals.append(int(v))
    g = 0
    for v in vals:
        g = gcd(g, v)
    if g <= 0 or any(v <= 0 for v in vals):
        raise InternalError("normalized level is not positive on rays")
    return PLFunction(fan, tuple(v // g for v in vals))


def hypersurface_fan(N: int, n: int) -> Fan:
    """Monoid fan of the degree-``n`` hypersurface model in rank ``N + 1``.

    Rays are ``A^1..A^N``, ``n A^u - sum A^i`` and ``A^u`` (the last
    coordinate is ``u``).  Maximal cones drop one of the first ``N + 1``
    rays and always keep ``A^u``.  The support is not the whole lattice.
    """
    if N < 1 or n < 1:
        raise FanError("need N >= 1 and n >= 1")
    rays = [tuple(int(i == j) for j in range(N + 1)) for i in range(N)]
    rays.append(tuple([-1] * N + [n]))
    rays.append(tuple([0] * N + [1]))
    cones = [tuple(j for j in range(N + 1) if j != i) + (N + 1,) for i in range(N + 1)]
    return Fan(N + 1, tuple(rays), tuple(cones), complete=False)
