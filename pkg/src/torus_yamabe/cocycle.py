"""Integer affine transition data for torus bundles over a combinatorial base.

Matrices are tuples of tuples of Python ints so that products never overflow.
A transition ``g[a, b]`` maps fiber coordinates of chart ``a`` to those of
chart ``b``; the cocycle law reads ``g[b, c] ∘ g[a, b] = g[a, c]``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, permutations
from typing import Hashable, Iterable, Mapping, Sequence

from .charclass import PontryaginData
from .errors import InputError, ShapeError, UnsupportedError

Matrix = tuple  # tuple[tuple[int, ...], ...]


# -- integer matrix helpers ---------------------------------------------------

def as_matrix(rows) -> Matrix:
    try:
        m = tuple(tuple(int(x) if int(x) == x else _bad(x) for x in row) for row in rows)
    except (TypeError, ValueError):
        raise ShapeError(f"not a matrix: {rows!r}") from None
    if not m or any(len(r) != len(m) for r in m):
        raise ShapeError(f"matrix must be square and nonempty, got {len(m)} rows")
    return m


def _bad(x):
    raise InputError(f"non-integer matrix entry {x!r}")


def identity(n: int) -> Matrix:
    return tuple(tuple(int(i == j) for j in range(n)) for i in range(n))


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = list(zip(*b))
    return tuple(tuple(sum(x * y for x, y in zip(row, col)) for col in bt) for row in a)


def matvec(a: Matrix, v: Sequence) -> tuple:
    return tuple(sum(x * y for x, y in zip(row, v)) for row in a)


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a))


def det(a: Matrix) -> int:
    """Bareiss fraction-free elimination."""
    m = [list(r) for r in a]
    n = len(m)
    sign, prev = 1, 1
    for k in range(n - 1):
        if m[k][k] == 0:
            for r in range(k + 1, n):
                if m[r][k]:
                    m[k], m[r] = m[r], m[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def unimodular_inverse(a: Matrix) -> Matrix:
    """Exact inverse of an integer matrix with determinant ±1."""
    n = len(a)
    aug = [[Fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            raise InputError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    inv = [row[n:] for row in aug]
    if any(x.denominator != 1 for row in inv for x in row):
        raise InputError("matrix is not unimodular")
    return tuple(tuple(int(x) for x in row) for row in inv)


def standard_J(n: int) -> Matrix:
    """Block-diagonal [[0,1],[-1,0]] pairing (y_{2i-1}, y_{2i})."""
    if n % 2:
        raise ShapeError(f"symplectic form needs even size, got {n}")
    rows = [[0] * n for _ in range(n)]
    for i in range(0, n, 2):
        rows[i][i + 1] = 1
        rows[i + 1][i] = -1
    return tuple(tuple(r) for r in rows)


def is_symplectic(m) -> bool:
    """True iff MᵀJM = J for the standard paired J."""
    m = as_matrix(m)
    n = len(m)
    if n % 2:
        raise ShapeError(f"is_symplectic needs an even-sized matrix, got {n}x{n}")
    j = standard_J(n)
    return matmul(matmul(transpose(m), j), m) == j


def direct_sum(a: Matrix, b: Matrix) -> Matrix:
    na, nb = len(a), len(b)
    rows = [list(r) + [0] * nb for r in a] + [[0] * na + list(r) for r in b]
    return tuple(tuple(r) for r in rows)


def random_symplectic(k: int, rng: random.Random, steps: int = 6) -> Matrix:
    """Random word in elementary generators of Sp(2k,ℤ): shears on a pair, pair mixing, J on a pair."""
    n = 2 * k
    m = identity(n)
    for _ in range(steps):
        e = [list(r) for r in identity(n)]
        kind = rng.randrange(4) if k > 1 else rng.randrange(3)
        i = rng.randrange(k)
        s = rng.choice((1, -1))
        x, y = 2 * i, 2 * i + 1
        if kind == 0:
            e[x][y] = s
        elif kind == 1:
            e[y][x] = s
        elif kind == 2:
            e[x][x], e[x][y], e[y][x], e[y][y] = 0, 1, -1, 0
        else:
            j = rng.choice([t for t in range(k) if t != i])
            # symmetric coupling x_i += s*y_j, x_j += s*y_i
            e[x][2 * j + 1] = s
            e[2 * j][y] = s
        m = matmul(m, tuple(tuple(r) for r in e))
    return m


# -- affine maps and cocycles --------------------------------------------------

@dataclass(frozen=True)
class IntAffineMap:
    """Fiber map y ↦ linear·y + translation on ℝ^m/ℤ^m."""

    linear: Matrix
    translation: tuple = ()

    def __post_init__(self):
        lin = as_matrix(self.linear)
        m = len(lin)
        tr = tuple(Fraction(t) for t in self.translation) if self.translation else (Fraction(0),) * m
        if len(tr) != m:
            raise ShapeError(f"translation has length {len(tr)}, expected {m}")
        if abs(det(lin)) != 1:
            raise InputError(f"linear part {lin} has determinant {det(lin)}, expected ±1")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @property
    def rank(self) -> int:
        return len(self.linear)

    @property
    def det(self) -> int:
        return det(self.linear)

    @property
    def is_linear(self) -> bool:
        return not any(self.translation)

    @classmethod
    def identity(cls, m: int) -> IntAffineMap:
        return cls(identity(m))

    def compose(self, other: IntAffineMap) -> IntAffineMap:
        """self ∘ other."""
        lin = matmul(self.linear, other.linear)
        tr = tuple(a + b for a, b in zip(matvec(self.linear, other.translation), self.translation))
        return IntAffineMap(lin, tr)

    def inverse(self) -> IntAffineMap:
        inv = unimodular_inverse(self.linear)
        return IntAffineMap(inv, tuple(-x for x in matvec(inv, self.translation)))

    def conjugate(self, left: Matrix, right_inv: Matrix) -> IntAffineMap:
        """(left, 0) ∘ self ∘ (right_inv, 0)."""
        return IntAffineMap(matmul(matmul(left, self.linear), right_inv), matvec(left, self.translation))

    def agrees(self, other: IntAffineMap, modulus: Fraction | None) -> bool:
        """Equal linear parts, translations equal exactly or modulo ``modulus``·ℤ^m."""
        if self.linear != other.linear:
            return False
        for a, b in zip(self.translation, other.translation):
            diff = a - b
            if modulus is None:
                if diff:
                    return False
            elif (diff / modulus).denominator != 1:
                return False
        return True

    def to_dict(self) -> dict:
        out = {"linear": [list(r) for r in self.linear]}
        if not self.is_linear:
            out["translation"] = [f"{t.numerator}/{t.denominator}" for t in self.translation]
        return out


@dataclass(frozen=True)
class CoverNerve:
    charts: tuple
    pairs: frozenset
    triples: frozenset

    def __post_init__(self):
        charts = tuple(self.charts)
        if len(set(charts)) != len(charts):
            raise InputError(f"duplicate chart identifiers in {charts}")
        known = set(charts)
        pairs = frozenset(tuple(p) for p in self.pairs)
        for a, b in pairs:
            if a not in known or b not in known:
                raise InputError(f"overlap ({a}, {b}) mentions an unknown chart")
            if a == b:
                raise InputError(f"overlap ({a}, {a}) is implicit; list only distinct charts")
            if (b, a) not in pairs:
                raise InputError(f"overlap ({a}, {b}) present but ({b}, {a}) missing")
        triples = frozenset(frozenset(t) for t in self.triples)
        for t in triples:
            if len(t) != 3:
                raise InputError(f"triple {sorted(t, key=str)} must name three distinct charts")
            for a, b in combinations(t, 2):
                if (a, b) not in pairs:
                    raise InputError(f"triple {sorted(t, key=str)} lacks overlap ({a}, {b})")
        object.__setattr__(self, "charts", charts)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "triples", triples)

    @classmethod
    def from_overlaps(cls, charts: Iterable[Hashable], overlaps: Iterable[tuple], triples=None) -> CoverNerve:
        """Symmetric-close the overlaps; triples default to every pairwise-overlapping triple."""
        charts = tuple(charts)
        pairs = set()
        for a, b in overlaps:
            pairs.add((a, b))
            pairs.add((b, a))
        if triples is None:
            triples = [t for t in combinations(charts, 3)
                       if all((a, b) in pairs for a, b in combinations(t, 2))]
        return cls(charts, frozenset(pairs), frozenset(frozenset(t) for t in triples))

    def relabel(self, mapping: Mapping) -> CoverNerve:
        return CoverNerve(
            tuple(mapping[c] for c in self.charts),
            frozenset((mapping[a], mapping[b]) for a, b in self.pairs),
            frozenset(frozenset(mapping[c] for c in t) for t in self.triples),
        )


def _triple_key(t) -> tuple:
    return tuple(sorted(t, key=lambda c: (str(type(c)), str(c))))


@dataclass(frozen=True)
class CocycleReport:
    valid: bool
    failing_triples: tuple = ()
    failing_pairs: tuple = ()
    modulo_lattice: bool = False
    checked_triples: int = 0

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "modulo_lattice": self.modulo_lattice,
            "checked_triples": self.checked_triples,
            "failing_triples": [list(t) for t in self.failing_triples],
            "failing_pairs": [list(p) for p in self.failing_pairs],
        }


@dataclass(frozen=True)
class Cocycle:
    nerve: CoverNerve
    maps: Mapping
    lattice_scale: int = 1
    rank: int = field(default=0)

    def __post_init__(self):
        maps = dict(self.maps)
        if not isinstance(self.lattice_scale, int) or self.lattice_scale < 1:
            raise InputError(f"lattice_scale must be a positive integer, got {self.lattice_scale!r}")
        ranks = {g.rank for g in maps.values()}
        if len(ranks) > 1:
            raise ShapeError(f"transition maps have mixed ranks {sorted(ranks)}")
        rank = ranks.pop() if ranks else self.rank
        if self.rank and rank != self.rank:
            raise ShapeError(f"transition rank {rank} does not match declared fiber rank {self.rank}")
        if rank < 1:
            raise InputError("cocycle with no transitions needs an explicit fiber rank")
        for pair in maps:
            if pair not in self.nerve.pairs:
                raise InputError(f"transition {pair} is not an overlap of the nerve")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "rank", rank)

    @property
    def covering_degree(self) -> int:
        """Fiberwise degree of this cover over the base bundle (lattice_scale^m)."""
        return self.lattice_scale ** self.rank

    def transition(self, a, b) -> IntAffineMap:
        if a == b:
            return self.maps.get((a, a), IntAffineMap.identity(self.rank))
        try:
            return self.maps[(a, b)]
        except KeyError:
            raise InputError(f"missing transition for overlap ({a}, {b})") from None

    def linear_parts(self):
        return [g.linear for g in self.maps.values()]

    @property
    def is_linear(self) -> bool:
        return all(g.is_linear for g in self.maps.values())

    def relabel(self, mapping: Mapping) -> Cocycle:
        return Cocycle(self.nerve.relabel(mapping),
                       {(mapping[a], mapping[b]): g for (a, b), g in self.maps.items()},
                       self.lattice_scale, self.rank)

    def to_dict(self) -> dict:
        return {
            "charts": list(self.nerve.charts),
            "lattice_scale": self.lattice_scale,
            "transitions": {f"{a}|{b}": g.to_dict() for (a, b), g in sorted(self.maps.items(), key=str)},
        }

    @classmethod
    def from_dict(cls, data: Mapping, rank: int | None = None) -> Cocycle:
        """Parse the cocycle section of a bundle-spec document.

        Only one direction of each overlap has to be listed; the reverse map
        is filled in as the inverse.
        """
        if not isinstance(data, Mapping):
            raise InputError("cocycle must be an object")
        charts = data.get("charts")
        if not isinstance(charts, list) or not charts:
            raise InputError("cocycle.charts must be a nonempty list")
        charts = [str(c) for c in charts]
        trans = data.get("transitions", {})
        if not isinstance(trans, Mapping):
            raise InputError("cocycle.transitions must be an object")
        maps = {}
        for key, entry in trans.items():
            where = f"cocycle.transitions[{key!r}]"
            parts = key.split("|")
            if len(parts) != 2:
                raise InputError(f"{where}: key must look like 'A|B'")
            a, b = parts
            if not isinstance(entry, Mapping) or "linear" not in entry:
                raise InputError(f"{where}: needs a 'linear' matrix")
            try:
                g = IntAffineMap(entry["linear"], tuple(Fraction(t) for t in entry.get("translation", ())))
            except (InputError, ShapeError) as exc:
                raise InputError(f"{where}: {exc}") from None
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise InputError(f"{where}: {exc}") from None
            if a == b:
                raise InputError(f"{where}: self-transitions are implicit")
            maps[(a, b)] = g
        for (a, b), g in list(maps.items()):
            if (b, a) not in maps:
                maps[(b, a)] = g.inverse()
        triples = data.get("triples")
        try:
            nerve = CoverNerve.from_overlaps(charts, maps.keys(), triples)
        except InputError as exc:
            raise InputError(f"cocycle: {exc}") from None
        scale = data.get("lattice_scale", 1)
        try:
            return cls(nerve, maps, scale, rank or 0)
        except ShapeError as exc:
            raise InputError(f"cocycle: {exc}") from None


def validate_cocycle(c: Cocycle, modulo_lattice: bool = False) -> CocycleReport:
    """Check g_aa = id, g_ba = g_ab⁻¹ and g_bc∘g_ab = g_ac on every triple.

    Linear parts must agree exactly; translations exactly, or modulo
    (1/lattice_scale)·ℤ^m when ``modulo_lattice`` is set.
    """
    for pair in c.nerve.pairs:
        c.transition(*pair)
    modulus = Fraction(1, c.lattice_scale) if modulo_lattice else None
    bad_pairs = set()
    for a in c.nerve.charts:
        if not c.transition(a, a).agrees(IntAffineMap.identity(c.rank), modulus):
            bad_pairs.add((a, a))
    for a, b in c.nerve.pairs:
        if not c.transition(b, a).compose(c.transition(a, b)).agrees(IntAffineMap.identity(c.rank), modulus):
            bad_pairs.add(tuple(_triple_key((a, b))))
    bad_triples = []
    for t in c.nerve.triples:
        ok = True
        for a, b, g in permutations(t):
            lhs = c.transition(b, g).compose(c.transition(a, b))
            if not lhs.agrees(c.transition(a, g), modulus):
                ok = False
                break
        if not ok:
            bad_triples.append(_triple_key(t))
    bad_triples.sort(key=str)
    return CocycleReport(
        valid=not bad_triples and not bad_pairs,
        failing_triples=tuple(bad_triples),
        failing_pairs=tuple(sorted(bad_pairs, key=str)),
        modulo_lattice=modulo_lattice,
        checked_triples=len(c.nerve.triples),
    )


def coboundary(nerve: CoverNerve, chart_maps: Mapping) -> Cocycle:
    """g_ab = h_b h_a⁻¹ from per-chart maps h."""
    maps = {}
    for a, b in nerve.pairs:
        maps[(a, b)] = chart_maps[b].compose(chart_maps[a].inverse())
    rank = next(iter(chart_maps.values())).rank
    return Cocycle(nerve, maps, rank=rank)


def lattice_cover(c: Cocycle, n: int) -> Cocycle:
    """Same transition maps on ℝ^m/nΛ: lattice scale multiplied by n, degree n^m."""
    if not isinstance(n, int) or n < 1:
        raise InputError(f"cover scale must be a positive integer, got {n!r}")
    if not c.is_linear:
        raise UnsupportedError("lattice_cover needs purely linear transitions; translation parts are not lifted")
    report = validate_cocycle(c, modulo_lattice=False)
    if not report.valid:
        raise InputError(f"input cocycle is invalid: failing triples {list(report.failing_triples)}")
    out = Cocycle(c.nerve, c.maps, c.lattice_scale * n, c.rank)
    # the identity holds on ℝ^m itself, not merely modulo the lattice
    post = validate_cocycle(out, modulo_lattice=False)
    if not post.valid:
        raise AssertionError(f"lattice cover broke the cocycle identity: {post}")
    return out


def split_last(linear: Matrix) -> tuple[Matrix, int] | None:
    """Decompose as S ⊕ (ε) with the ±1 factor on the last coordinate, or None."""
    m = len(linear)
    last = linear[m - 1][m - 1]
    if last not in (1, -1):
        return None
    if any(linear[m - 1][j] for j in range(m - 1)) or any(linear[i][m - 1] for i in range(m - 1)):
        return None
    return tuple(tuple(r[: m - 1]) for r in linear[: m - 1]), last


def has_odd_shape(c: Cocycle) -> bool:
    """Linear parts in Sp(m-1,ℤ)⊕{±1} for odd m."""
    if c.rank % 2 == 0:
        return False
    for lin in c.linear_parts():
        parts = split_last(lin)
        if parts is None:
            return False
        s, _ = parts
        if s and not is_symplectic(s):
            return False
    return True


def stabilize_odd(c: Cocycle) -> Cocycle:
    """Rank m → m+1 by doubling the trailing ±1 factor: S ⊕ (ε) ↦ S ⊕ diag(ε, ε)."""
    if c.rank % 2 == 0:
        raise InputError(f"stabilize_odd needs odd fiber rank, got {c.rank}")
    maps = {}
    for pair, g in c.maps.items():
        parts = split_last(g.linear)
        if parts is None:
            raise InputError(f"transition {pair} is not of the form S ⊕ (±1)")
        s, eps = parts
        if s and not is_symplectic(s):
            raise InputError(f"transition {pair}: leading block is not symplectic")
        lin = direct_sum(s, ((eps, 0), (0, eps))) if s else ((eps, 0), (0, eps))
        maps[pair] = IntAffineMap(lin, g.translation + (Fraction(0),))
    return Cocycle(c.nerve, maps, c.lattice_scale, c.rank + 1)


def _reflection(m: int) -> Matrix:
    return tuple(tuple((-1 if i == j == 0 else int(i == j)) for j in range(m)) for i in range(m))


def orientation_double_cover(c: Cocycle, base: PontryaginData) -> tuple[Cocycle, PontryaginData]:
    """Pass to the index-2 orientation-preserving subgroup.

    Charts become (chart, sheet) with sheet ∈ {+1, -1}; crossing an overlap
    whose transition has determinant δ moves sheet s to s·δ.  Sheet -1 uses a
    fiber coordinate reflected in y_1, which makes every transition
    orientation preserving.  Pontryagin numbers double under the degree-2
    cover of the base.  An already oriented input gives two disjoint copies,
    which is its orientation double cover.
    """
    report = validate_cocycle(c, modulo_lattice=True)
    if not report.valid:
        raise InputError(f"input cocycle is invalid: failing triples {list(report.failing_triples)}")
    m = c.rank
    frame = {1: identity(m), -1: _reflection(m)}
    charts = [(a, s) for a in c.nerve.charts for s in (1, -1)]
    maps = {}
    for (a, b), g in c.maps.items():
        for s in (1, -1):
            t = s * g.det
            maps[((a, s), (b, t))] = g.conjugate(frame[t], frame[s])
    triples = []
    for tri in c.nerve.triples:
        a, b, g = _triple_key(tri)
        for s in (1, -1):
            sb = s * c.transition(a, b).det
            sg = s * c.transition(a, g).det
            triples.append(frozenset({(a, s), (b, sb), (g, sg)}))
    nerve = CoverNerve(tuple(charts), frozenset(maps), frozenset(triples))
    return Cocycle(nerve, maps, c.lattice_scale, m), base.scaled(2)
