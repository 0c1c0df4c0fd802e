"""Free graded-commutative algebras over the rationals, truncated above a degree cap.

Generators of odd degree anticommute and square to zero; even generators are
polynomial.  A monomial is stored as a tuple of ``(generator index, exponent)``
pairs sorted by the context's canonical generator order, so that two elements
are equal exactly when their term maps are equal.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence, Union

from .errors import ArgumentError, ContextError, InputError, ShapeError

Monomial = tuple  # tuple[tuple[int, int], ...]
Scalar = Union[int, Fraction]


def _natural_key(name: str):
    return tuple(int(t) if t.isdigit() else t for t in re.split(r"(\d+)", name))


@dataclass(frozen=True)
class Generator:
    name: str
    degree: int

    def __post_init__(self):
        if not self.name or not isinstance(self.name, str):
            raise ArgumentError("generator name must be a non-empty string")
        if not isinstance(self.degree, int) or self.degree < 1:
            raise ArgumentError(f"generator {self.name!r} needs degree >= 1, got {self.degree!r}")

    @property
    def odd(self) -> bool:
        return self.degree % 2 == 1


class RingContext:
    """Generator set plus a mandatory degree cap.

    Two contexts compare equal when they have the same generators and cap, so
    elements built from independently constructed but identical contexts can
    be combined.
    """

    def __init__(self, generators: Iterable[Generator], degree_cap: int):
        gens = list(generators)
        names = [g.name for g in gens]
        if len(set(names)) != len(names):
            raise ContextError(f"duplicate generator names in {names}")
        if not isinstance(degree_cap, int) or degree_cap < 0:
            raise ArgumentError(f"degree_cap must be a nonnegative integer, got {degree_cap!r}")
        gens.sort(key=lambda g: (g.degree, _natural_key(g.name)))
        self.generators: tuple[Generator, ...] = tuple(gens)
        self.degree_cap = degree_cap
        self._index = {g.name: i for i, g in enumerate(self.generators)}

    def __eq__(self, other):
        if not isinstance(other, RingContext):
            return NotImplemented
        return self.generators == other.generators and self.degree_cap == other.degree_cap

    def __hash__(self):
        return hash((self.generators, self.degree_cap))

    def __repr__(self):
        gens = ", ".join(f"{g.name}:{g.degree}" for g in self.generators)
        return f"RingContext([{gens}], cap={self.degree_cap})"

    def index(self, name: str | Generator) -> int:
        if isinstance(name, Generator):
            idx = self._index.get(name.name)
            if idx is None or self.generators[idx] != name:
                raise ContextError(f"generator {name} not in {self!r}")
            return idx
        try:
            return self._index[name]
        except KeyError:
            raise ContextError(f"unknown generator {name!r} in {self!r}") from None

    def __contains__(self, name) -> bool:
        if isinstance(name, Generator):
            return self._index.get(name.name) is not None and self.generators[self._index[name.name]] == name
        return name in self._index

    def with_cap(self, degree_cap: int) -> RingContext:
        return RingContext(self.generators, degree_cap)

    def monomial_degree(self, mono: Monomial) -> int:
        return sum(self.generators[i].degree * e for i, e in mono)

    def zero(self) -> GradedElement:
        return GradedElement(self, {})

    def one(self) -> GradedElement:
        return self.scalar(1)

    def scalar(self, c: Scalar) -> GradedElement:
        return GradedElement(self, {(): Fraction(c)})

    def gen(self, name: str | Generator) -> GradedElement:
        return GradedElement(self, {((self.index(name), 1),): Fraction(1)})

    def monomial(self, *factors) -> GradedElement:
        """Product of generators in the order given, e.g. ``monomial("y2", "y1")``.

        A factor may be a name or a ``(name, exponent)`` pair.
        """
        out = self.one()
        for f in factors:
            name, exp = (f, 1) if isinstance(f, (str, Generator)) else f
            out = out * power_truncated(self.gen(name), exp)
        return out


def _canonicalize(ctx: RingContext, factors: Sequence[tuple[int, int]]):
    """Sort a word of (index, exponent) factors; returns (sign, monomial) or None if zero."""
    exps: dict[int, int] = {}
    odd_word = []
    for idx, e in factors:
        if e < 0:
            raise InputError("negative exponent")
        if e == 0:
            continue
        if ctx.generators[idx].odd:
            if e > 1 or idx in exps:
                return None
            odd_word.append(idx)
        exps[idx] = exps.get(idx, 0) + e
    inversions = sum(1 for a in range(len(odd_word)) for b in range(a + 1, len(odd_word))
                     if odd_word[a] > odd_word[b])
    return (-1) ** inversions, tuple(sorted(exps.items()))


def _mono_mul(ctx: RingContext, m1: Monomial, m2: Monomial):
    odd1 = [i for i, _ in m1 if ctx.generators[i].odd]
    odd2 = [i for i, _ in m2 if ctx.generators[i].odd]
    if set(odd1) & set(odd2):
        return None
    # each odd factor of m2 moves left past the larger-indexed odd factors of m1
    swaps = sum(1 for i in odd1 for j in odd2 if i > j)
    exps = dict(m1)
    for i, e in m2:
        exps[i] = exps.get(i, 0) + e
    return (-1) ** swaps, tuple(sorted(exps.items()))


class GradedElement:
    """Immutable exact-rational element of a truncated graded-commutative algebra."""

    __slots__ = ("context", "terms")

    def __init__(self, context: RingContext, terms: Mapping[Monomial, Scalar]):
        cap = context.degree_cap
        clean = {}
        for mono, c in terms.items():
            c = Fraction(c)
            if c and context.monomial_degree(mono) <= cap:
                clean[mono] = c
        object.__setattr__(self, "context", context)
        object.__setattr__(self, "terms", MappingProxyType(clean))

    def __setattr__(self, key, value):
        raise AttributeError("GradedElement is immutable")

    # -- arithmetic ---------------------------------------------------------

    def _coerce(self, other) -> GradedElement:
        if isinstance(other, GradedElement):
            if other.context != self.context:
                raise ContextError(f"cannot combine elements of {self.context!r} and {other.context!r}")
            return other
        if isinstance(other, (int, Fraction)):
            return self.context.scalar(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for m, c in other.terms.items():
            terms[m] = terms.get(m, 0) + c
        return GradedElement(self.context, terms)

    __radd__ = __add__

    def __neg__(self):
        return GradedElement(self.context, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return GradedElement(self.context, {m: c * other for m, c in self.terms.items()})
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return mul(self, other)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * (1 / Fraction(other))
        return NotImplemented

    def __pow__(self, k: int):
        return power_truncated(self, k)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.context.scalar(other)
        if not isinstance(other, GradedElement):
            return NotImplemented
        return self.context == other.context and dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.context, frozenset(self.terms.items())))

    def __bool__(self):
        return bool(self.terms)

    # -- inspection ---------------------------------------------------------

    def degrees(self) -> set[int]:
        return {self.context.monomial_degree(m) for m in self.terms}

    def homogeneous_degree(self) -> int | None:
        """Degree of a homogeneous nonzero element, ``None`` otherwise."""
        degs = self.degrees()
        return degs.pop() if len(degs) == 1 else None

    def part(self, degree: int) -> GradedElement:
        ctx = self.context
        return GradedElement(ctx, {m: c for m, c in self.terms.items() if ctx.monomial_degree(m) == degree})

    def constant(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def coefficient(self, mono: GradedElement) -> Fraction:
        """Coefficient of the single monomial ``mono`` (with its sign folded in)."""
        if len(mono.terms) != 1:
            raise ShapeError("coefficient() needs a single-monomial element")
        (m, c), = mono.terms.items()
        return self.terms.get(m, Fraction(0)) / c

    def sorted_terms(self):
        ctx = self.context
        return sorted(self.terms.items(), key=lambda mc: (ctx.monomial_degree(mc[0]), mc[0]))

    def monomial_str(self, mono: Monomial) -> str:
        parts = []
        for i, e in mono:
            g = self.context.generators[i]
            parts.append(g.name if e == 1 else f"{g.name}^{e}")
        return "∧".join(parts) if any(self.context.generators[i].odd for i, _ in mono) else "*".join(parts)

    def __repr__(self):
        if not self.terms:
            return "0"
        out = []
        for m, c in self.sorted_terms():
            body = self.monomial_str(m)
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if not body:
                txt = str(mag)
            elif mag == 1:
                txt = body
            else:
                txt = f"{mag}*{body}"
            out.append((sign, txt))
        first_sign, first = out[0]
        s = ("-" if first_sign == "-" else "") + first
        for sign, txt in out[1:]:
            s += f" {sign} {txt}"
        return s

    # -- serialization ------------------------------------------------------

    def to_records(self) -> list[dict]:
        gens = self.context.generators
        return [
            {"monomial": [[gens[i].name, e] for i, e in m], "coeff": f"{c.numerator}/{c.denominator}"}
            for m, c in self.sorted_terms()
        ]

    def to_json(self) -> str:
        return json.dumps(self.to_records(), ensure_ascii=False)

    @classmethod
    def from_records(cls, context: RingContext, records: Iterable[Mapping]) -> GradedElement:
        terms: dict = {}
        for pos, rec in enumerate(records):
            try:
                factors = [(context.index(name), int(e)) for name, e in rec["monomial"]]
                coeff = Fraction(rec["coeff"])
            except (KeyError, TypeError, ValueError) as exc:
                raise InputError(f"record {pos}: {exc}") from None
            canon = _canonicalize(context, factors)
            if canon is None:
                continue
            sign, mono = canon
            terms[mono] = terms.get(mono, 0) + sign * coeff
        return cls(context, terms)

    @classmethod
    def from_json(cls, context: RingContext, text: str) -> GradedElement:
        return cls.from_records(context, json.loads(text))


def mul(a: GradedElement, b: GradedElement) -> GradedElement:
    """Graded-commutative product, truncated above the context's degree cap."""
    if a.context != b.context:
        raise ContextError(f"cannot multiply elements of {a.context!r} and {b.context!r}")
    ctx = a.context
    cap = ctx.degree_cap
    terms: dict = {}
    b_items = [(m, c, ctx.monomial_degree(m)) for m, c in b.terms.items()]
    for m1, c1 in a.terms.items():
        d1 = ctx.monomial_degree(m1)
        for m2, c2, d2 in b_items:
            if d1 + d2 > cap:
                continue
            prod = _mono_mul(ctx, m1, m2)
            if prod is None:
                continue
            sign, m = prod
            terms[m] = terms.get(m, 0) + sign * c1 * c2
    return GradedElement(ctx, terms)


def power_truncated(a: GradedElement, k: int) -> GradedElement:
    if not isinstance(k, int) or k < 0:
        raise ArgumentError(f"power must be a nonnegative integer, got {k!r}")
    result = a.context.one()
    base = a
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def fiber_integrate(a: GradedElement, fiber_gens: Sequence[str | Generator]) -> GradedElement:
    """Coefficient of the fiber top class ``y_1∧…∧y_m``, written to the right in the given order.

    Terms missing any fiber generator integrate to zero.
    """
    ctx = a.context
    idxs = [ctx.index(g) for g in fiber_gens]
    if len(set(idxs)) != len(idxs):
        raise ArgumentError(f"duplicate fiber generator in {list(fiber_gens)}")
    for i in idxs:
        if ctx.generators[i].degree != 1:
            raise ArgumentError(f"fiber generator {ctx.generators[i].name} must have degree 1")
    fiber = set(idxs)
    terms: dict = {}
    for mono, c in a.terms.items():
        present = {i for i, _ in mono}
        if not fiber <= present:
            continue
        rest = tuple((i, e) for i, e in mono if i not in fiber)
        current = [i for i, _ in mono if ctx.generators[i].odd]
        target = [i for i in current if i not in fiber] + idxs
        pos = {g: p for p, g in enumerate(target)}
        seq = [pos[g] for g in current]
        inversions = sum(1 for x in range(len(seq)) for y in range(x + 1, len(seq)) if seq[x] > seq[y])
        terms[rest] = terms.get(rest, 0) + (-1) ** inversions * c
    return GradedElement(ctx, terms)


def top_coefficient(a: GradedElement, top_degree: int, volume=None) -> Fraction:
    """Rational multiple of the volume monomial in the degree-``top_degree`` part of ``a``.

    ``volume`` may be a generator name, a Generator or a single-monomial
    element; without it the top part must consist of one monomial.
    """
    top = a.part(top_degree)
    if not top.terms:
        return Fraction(0)
    ctx = a.context
    if volume is None:
        if len(top.terms) != 1:
            raise ShapeError(f"degree-{top_degree} part {top!r} is not a multiple of a single monomial")
        (_, c), = top.terms.items()
        return c
    vol = ctx.gen(volume) if isinstance(volume, (str, Generator)) else volume
    if len(vol.terms) != 1:
        raise ShapeError("volume must be a single monomial")
    (vm, vc), = vol.terms.items()
    if set(top.terms) != {vm}:
        raise ShapeError(f"degree-{top_degree} part {top!r} is not proportional to {vol!r}")
    return top.terms[vm] / vc


def substitute(a: GradedElement, images: Mapping[str, GradedElement], target: RingContext | None = None) -> GradedElement:
    """Apply the algebra map sending each named even generator to ``images[name]``.

    Generators without an image are sent to the same-named generator of the
    target context (the images' context by default).
    """
    if target is None:
        ctxs = {v.context for v in images.values()}
        if len(ctxs) > 1:
            raise ContextError("substitution images live in different contexts")
        target = ctxs.pop() if ctxs else a.context
    src = a.context
    for name in images:
        g = src.generators[src.index(name)]
        if g.odd:
            raise ArgumentError(f"substitution only supported for even generators, {name} is odd")
    result = target.zero()
    for mono, c in a.terms.items():
        term = target.scalar(c)
        for i, e in mono:
            g = src.generators[i]
            img = images[g.name] if g.name in images else target.gen(g)
            if img.context != target:
                raise ContextError(f"image of {g.name} is not in the target context")
            term = term * power_truncated(img, e)
        result = result + term
    return result
