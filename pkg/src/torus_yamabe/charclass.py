"""Â multiplicative sequence, Â-genus of a base, and Chern characters of line bundles.

The Â polynomials come from the formal-root series ``(x/2)/sinh(x/2)``.  With
``z = x**2`` the series is ``Q(z)``; the multiplicative sequence is
``exp(sum_j c_j s_j)`` where ``log Q(z) = sum_j c_j z**j`` and ``s_j`` are the
power sums of the formal roots ``z_i``, rewritten in the Pontryagin classes
``p_i = e_i(z)`` by Newton's identities.
"""
from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Mapping

from .algebra import Generator, GradedElement, RingContext, power_truncated
from .errors import ArgumentError, InputError

DEFAULT_DEGREE_BOUND = 6

Partition = tuple  # tuple[int, ...], weakly decreasing

_KEY_RE = re.compile(r"p(\d+)(?:\^(\d+))?")


class NonSpinWarning(UserWarning):
    """Â-genus evaluated on a base that is not declared spin."""


def parse_partition_key(key: str) -> Partition:
    """``"p1^2p2"`` -> ``(2, 1, 1)``; ``"1"`` or ``""`` is the empty partition."""
    text = key.replace("*", "").replace(" ", "")
    if text in ("", "1"):
        return ()
    parts: list[int] = []
    pos = 0
    for m in _KEY_RE.finditer(text):
        if m.start() != pos:
            break
        i = int(m.group(1))
        e = int(m.group(2) or 1)
        if i < 1 or e < 1:
            raise InputError(f"bad Pontryagin monomial {key!r}")
        parts.extend([i] * e)
        pos = m.end()
    if pos != len(text):
        raise InputError(f"cannot parse Pontryagin monomial {key!r}")
    return tuple(sorted(parts, reverse=True))


def partition_key(part: Partition) -> str:
    if not part:
        return "1"
    out = []
    for i in sorted(set(part)):
        e = part.count(i)
        out.append(f"p{i}" if e == 1 else f"p{i}^{e}")
    return "".join(out)


def partitions(n: int, largest: int | None = None):
    """Partitions of ``n`` as weakly decreasing tuples."""
    if largest is None:
        largest = n
    if n == 0:
        yield ()
        return
    for first in range(min(n, largest), 0, -1):
        for rest in partitions(n - first, first):
            yield (first,) + rest


@dataclass(frozen=True)
class PontryaginData:
    dimension: int
    numbers: Mapping[Partition, int] = field(default_factory=dict)
    spin: bool = True

    def __post_init__(self):
        if not isinstance(self.dimension, int) or self.dimension < 0 or self.dimension % 4:
            raise InputError(f"base dimension must be a nonnegative multiple of 4, got {self.dimension!r}")
        d = self.dimension // 4
        clean = {}
        for part, value in self.numbers.items():
            part = tuple(sorted(part, reverse=True))
            if sum(part) != d or any(i < 1 for i in part):
                raise InputError(f"{partition_key(part)} does not partition d = {d}")
            if isinstance(value, bool) or not isinstance(value, int):
                raise InputError(f"Pontryagin number {partition_key(part)} must be an integer, got {value!r}")
            clean[part] = value
        object.__setattr__(self, "numbers", dict(sorted(clean.items())))

    @property
    def d(self) -> int:
        return self.dimension // 4

    @classmethod
    def from_dict(cls, data: Mapping) -> PontryaginData:
        try:
            dim = data["dimension"]
        except KeyError:
            raise InputError("base: missing 'dimension'") from None
        raw = data.get("pontryagin_numbers", {})
        if not isinstance(raw, Mapping):
            raise InputError("base.pontryagin_numbers must be an object")
        numbers = {parse_partition_key(k): v for k, v in raw.items()}
        spin = data.get("spin", False)
        if not isinstance(spin, bool):
            raise InputError("base.spin must be a boolean")
        return cls(dim, numbers, spin)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "spin": self.spin,
            "pontryagin_numbers": {partition_key(p): v for p, v in self.numbers.items()},
        }

    def scaled(self, factor: int) -> PontryaginData:
        """Characteristic numbers of a degree-``factor`` finite cover."""
        return PontryaginData(self.dimension, {p: factor * v for p, v in self.numbers.items()}, self.spin)


def pontryagin_context(d: int, extra=(), cap: int | None = None) -> RingContext:
    gens = [Generator(f"p{i}", 4 * i) for i in range(1, d + 1)] + list(extra)
    return RingContext(gens, 4 * d if cap is None else cap)


def monomial_partition(element: GradedElement, mono) -> Partition:
    """Partition of a monomial in the ``p_i`` generators (others rejected)."""
    parts: list[int] = []
    for idx, e in mono:
        name = element.context.generators[idx].name
        if not re.fullmatch(r"p\d+", name):
            raise InputError(f"monomial contains non-Pontryagin generator {name}")
        parts.extend([int(name[1:])] * e)
    return tuple(sorted(parts, reverse=True))


@dataclass(frozen=True)
class MultiplicativeSeries:
    """Â_j coefficients keyed by partitions of j, for all j up to ``max_degree``."""

    max_degree: int
    coefficients: Mapping[int, Mapping[Partition, Fraction]]

    def component(self, j: int) -> dict[Partition, Fraction]:
        if j > self.max_degree:
            raise ArgumentError(f"degree {j} exceeds series bound {self.max_degree}")
        return dict(self.coefficients[j])

    def as_element(self, context: RingContext) -> GradedElement:
        """The total class ``sum_j Â_j`` inside a context holding p_1..p_d."""
        terms = {}
        for j, comp in self.coefficients.items():
            for part, c in comp.items():
                mono = {}
                for i in part:
                    idx = context.index(f"p{i}")
                    mono[idx] = mono.get(idx, 0) + 1
                terms[tuple(sorted(mono.items()))] = c
        return GradedElement(context, terms)

    def render(self, j: int) -> str:
        comp = self.component(j)
        if not comp:
            return "0"
        return " + ".join(str(c) if not p else f"({c})*{partition_key(p)}" for p, c in sorted(comp.items()))


def _series_mul(a: list[Fraction], b: list[Fraction], n: int) -> list[Fraction]:
    out = [Fraction(0)] * (n + 1)
    for i, x in enumerate(a[: n + 1]):
        if x:
            for j, y in enumerate(b[: n + 1 - i]):
                out[i + j] += x * y
    return out


def _ahat_root_series(n: int) -> list[Fraction]:
    """Coefficients in z = x**2 of (x/2)/sinh(x/2) through z**n."""
    # sinh(x/2)/(x/2) = sum_j z**j / (4**j (2j+1)!)
    s = [Fraction(1, 4 ** j * factorial(2 * j + 1)) for j in range(n + 1)]
    inv = [Fraction(0)] * (n + 1)
    inv[0] = 1 / s[0]
    for k in range(1, n + 1):
        inv[k] = -sum(s[i] * inv[k - i] for i in range(1, k + 1)) / s[0]
    return inv


def _log_series(q: list[Fraction], n: int) -> list[Fraction]:
    """log(q) for q[0] == 1, through degree n."""
    u = [Fraction(0)] + list(q[1: n + 1])
    out = [Fraction(0)] * (n + 1)
    power = [Fraction(1)] + [Fraction(0)] * n
    for k in range(1, n + 1):
        power = _series_mul(power, u, n)
        for i in range(n + 1):
            out[i] += Fraction((-1) ** (k + 1), k) * power[i]
    return out


def power_sums_in_elementary(context: RingContext, n: int) -> list[GradedElement]:
    """Newton's identities: s_1..s_n of the formal roots z_i as polynomials in p_i = e_i(z)."""
    e = [context.one()] + [context.gen(f"p{i}") for i in range(1, n + 1)]
    s = [context.zero()]
    for j in range(1, n + 1):
        acc = (-1) ** (j - 1) * j * e[j]
        for i in range(1, j):
            acc = acc + (-1) ** (i - 1) * e[i] * s[j - i]
        s.append(acc)
    return s


@lru_cache(maxsize=None)
def ahat_polynomials(max_degree: int) -> MultiplicativeSeries:
    """Exact Â_0..Â_d in the Pontryagin classes."""
    if not isinstance(max_degree, int) or max_degree < 0:
        raise ArgumentError(f"max_degree must be a nonnegative integer, got {max_degree!r}")
    d = max_degree
    if d == 0:
        return MultiplicativeSeries(0, {0: {(): Fraction(1)}})
    ctx = pontryagin_context(d)
    log_q = _log_series(_ahat_root_series(d), d)
    s = power_sums_in_elementary(ctx, d)
    log_total = ctx.zero()
    for j in range(1, d + 1):
        log_total = log_total + log_q[j] * s[j]
    total = ctx.zero()
    for k in range(d + 1):
        total = total + power_truncated(log_total, k) / factorial(k)
    coeffs: dict[int, dict[Partition, Fraction]] = {j: {} for j in range(d + 1)}
    for mono, c in total.terms.items():
        part = monomial_partition(total, mono)
        coeffs[sum(part)][part] = c
    return MultiplicativeSeries(d, {j: dict(sorted(v.items())) for j, v in coeffs.items()})


def evaluate_on_base(element: GradedElement, base: PontryaginData) -> Fraction:
    """Pair the degree-4d part of a class in the p_i with the base's Pontryagin numbers."""
    top = element.part(base.dimension)
    total = Fraction(0)
    for mono, c in top.terms.items():
        part = monomial_partition(top, mono)
        if not part:
            total += c * base.numbers.get((), 1)
            continue
        if part not in base.numbers:
            raise InputError(f"missing Pontryagin number {partition_key(part)}[B]")
        total += c * base.numbers[part]
    return total


def ahat_genus(base: PontryaginData, degree_bound: int = DEFAULT_DEGREE_BOUND) -> Fraction:
    """Â(B)[B] from the supplied Pontryagin numbers.

    A 0-dimensional base contributes its point count, stored under the empty
    partition (default 1).
    """
    d = base.d
    if d > degree_bound:
        raise InputError(f"base dimension {base.dimension} needs Â_{d}, above the degree bound {degree_bound}")
    if not base.spin:
        warnings.warn("Â-genus of a non-spin base has no index interpretation", NonSpinWarning, stacklevel=2)
    if d == 0:
        return Fraction(base.numbers.get((), 1))
    total = Fraction(0)
    for part, c in ahat_polynomials(d).component(d).items():
        if c == 0:
            continue
        if part not in base.numbers:
            raise InputError(f"missing Pontryagin number {partition_key(part)}[B]")
        total += c * base.numbers[part]
    return total


def chern_character_line(c1, cap: int | None = None, context: RingContext | None = None) -> GradedElement:
    """ch = sum_j c1**j / j!, truncated at ``cap``.

    ``c1`` is a Generator (built into ``context``, or a one-generator context)
    or a homogeneous even-degree element.
    """
    if isinstance(c1, Generator):
        if c1.odd:
            raise ArgumentError(f"first Chern class must have even degree, {c1.name} has degree {c1.degree}")
        if context is None:
            context = RingContext([c1], cap if cap is not None else c1.degree)
        elem = context.gen(c1)
    elif isinstance(c1, GradedElement):
        elem = c1
        deg = elem.homogeneous_degree()
        if elem and (deg is None or deg % 2):
            raise ArgumentError(f"first Chern class must be homogeneous of even degree, got {elem!r}")
    else:
        raise ArgumentError(f"unsupported Chern class {c1!r}")
    ctx = elem.context
    limit = ctx.degree_cap if cap is None else min(cap, ctx.degree_cap)
    deg = elem.homogeneous_degree() or 0
    out = ctx.one()
    term = ctx.one()
    j = 1
    while deg and j * deg <= limit:
        term = term * elem
        out = out + term / factorial(j)
        j += 1
    return out


def spinc_parity(c1_vertical: GradedElement) -> GradedElement:
    """Mod-2 reduction of an integral class; zero certifies w_2 = 0 on the vertical part."""
    terms = {}
    for mono, c in c1_vertical.terms.items():
        if c.denominator != 1:
            raise InputError(f"c1 has non-integer coefficient {c}")
        if c.numerator % 2:
            terms[mono] = 1
    return GradedElement(c1_vertical.context, terms)
