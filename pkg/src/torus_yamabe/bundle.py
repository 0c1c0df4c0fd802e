"""Bundle specifications, the twisted Dirac index, and the Y(M) = 0 certificate.

Cohomology of the total space is modelled as H*(base data) ⊗ Λ(y_1..y_m):
the classes that enter the index (pullbacks from the base and the globally
defined fiber form ω) are untouched by the locally constant transition data.
"""
from __future__ import annotations

import json
import logging
import warnings
from dataclasses import dataclass, field, replace
from fractions import Fraction
from math import factorial
from typing import Mapping

from .algebra import Generator, GradedElement, RingContext, fiber_integrate, power_truncated
from .charclass import (
    DEFAULT_DEGREE_BOUND,
    NonSpinWarning,
    PontryaginData,
    ahat_genus,
    ahat_polynomials,
    chern_character_line,
    evaluate_on_base,
    partition_key,
    pontryagin_context,
    spinc_parity,
)
from .cocycle import (
    Cocycle,
    CocycleReport,
    has_odd_shape,
    is_symplectic,
    orientation_double_cover,
    stabilize_odd,
    validate_cocycle,
)
from .errors import ArgumentError, HypothesisUnmet, InputError, InternalConsistencyError
from .metric import BlockMetric, max_omega_norm, weitzenbock_threshold

log = logging.getLogger(__name__)


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class BundleSpec:
    base: PontryaginData
    fiber_rank: int
    cocycle: Cocycle
    omega_is_generator: bool = True

    def __post_init__(self):
        if not isinstance(self.fiber_rank, int) or self.fiber_rank < 1:
            raise InputError(f"fiber_rank must be a positive integer, got {self.fiber_rank!r}")
        if self.cocycle.rank != self.fiber_rank:
            raise InputError(f"fiber_rank {self.fiber_rank} does not match transition size {self.cocycle.rank}")

    @property
    def k(self) -> int:
        return self.fiber_rank // 2

    @property
    def total_dimension(self) -> int:
        return self.base.dimension + self.fiber_rank

    @classmethod
    def from_dict(cls, data: Mapping) -> BundleSpec:
        if not isinstance(data, Mapping):
            raise InputError("bundle spec must be a JSON object")
        for key in ("base", "fiber_rank", "cocycle"):
            if key not in data:
                raise InputError(f"bundle spec: missing '{key}'")
        if not isinstance(data["base"], Mapping):
            raise InputError("base must be an object")
        try:
            base = PontryaginData.from_dict(data["base"])
        except InputError as exc:
            raise InputError(f"base: {exc}") from None
        rank = data["fiber_rank"]
        if isinstance(rank, bool) or not isinstance(rank, int) or rank < 1:
            raise InputError(f"fiber_rank must be a positive integer, got {rank!r}")
        cocycle = Cocycle.from_dict(data["cocycle"], rank=rank)
        gen = data.get("omega_is_generator", True)
        if not isinstance(gen, bool):
            raise InputError("omega_is_generator must be a boolean")
        return cls(base, rank, cocycle, gen)

    def to_dict(self) -> dict:
        return {
            "base": self.base.to_dict(),
            "fiber_rank": self.fiber_rank,
            "cocycle": self.cocycle.to_dict(),
            "omega_is_generator": self.omega_is_generator,
        }


def parse_json_document(text: str, source: str = "<input>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def load_bundle_spec(path) -> BundleSpec:
    with open(path, encoding="utf-8") as fh:
        data = parse_json_document(fh.read(), str(path))
    try:
        return BundleSpec.from_dict(data)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None


# -- the invariant fiber form ----------------------------------------------------

def omega_pullback(k: int, S) -> dict[tuple[int, int], int]:
    """Coefficients of S*ω on dy_c∧dy_d (c < d), via the 2x2 minors of S."""
    m = 2 * k
    rows = [list(r) for r in S]
    if len(rows) != m or any(len(r) != m for r in rows):
        raise ArgumentError(f"expected a {m}x{m} matrix")
    for r in rows:
        for x in r:
            if isinstance(x, bool) or not isinstance(x, int):
                raise ArgumentError(f"matrix entries must be integers, got {x!r}")
    omega_pairs = [(2 * i, 2 * i + 1) for i in range(k)]
    out = {}
    for c in range(m):
        for d in range(c + 1, m):
            # pullback of dy_a = sum_c S[a][c] dy_c
            val = sum(rows[a][c] * rows[b][d] - rows[a][d] * rows[b][c] for a, b in omega_pairs)
            if val:
                out[(c, d)] = val
    return out


def omega_invariance_check(k: int, S) -> bool:
    """True iff S*ω = ω for ω = Σ dy_{2i-1}∧dy_{2i}, checked on the second exterior power."""
    pulled = omega_pullback(k, S)
    target = {(2 * i, 2 * i + 1): 1 for i in range(k)}
    if pulled != target:
        log.info("S*ω differs from ω: %s", {f"y{c + 1}∧y{d + 1}": v for (c, d), v in sorted(pulled.items())})
        return False
    return True


# -- index -----------------------------------------------------------------------

def fiber_generators(m: int) -> list[Generator]:
    return [Generator(f"y{i}", 1) for i in range(1, m + 1)]


def omega_class(context: RingContext, k: int) -> GradedElement:
    out = context.zero()
    for i in range(k):
        out = out + context.gen(f"y{2 * i + 1}") * context.gen(f"y{2 * i + 2}")
    return out


@dataclass(frozen=True)
class IndexComputation:
    index: int
    ahat_genus: Fraction
    fiber_integral: Fraction
    ahat_top: dict
    integrand: GradedElement
    fiber_integrated: GradedElement

    def dump_classes(self) -> dict:
        return {"integrand": self.integrand.to_records(), "fiber_integrated": self.fiber_integrated.to_records()}


def _check_index_hypotheses(spec: BundleSpec):
    if spec.fiber_rank % 2:
        raise HypothesisUnmet(f"fiber rank {spec.fiber_rank} is odd; stabilize first")
    if not spec.omega_is_generator:
        raise HypothesisUnmet("ω does not restrict to a generator of H²(T^m) on the fibers")
    if not spec.base.spin:
        raise HypothesisUnmet("base is not spin")


def index_computation(spec: BundleSpec, degree_bound: int = DEFAULT_DEGREE_BOUND) -> IndexComputation:
    """{ch(E)·Â(TM)}[M] computed symbolically and, independently, as Â(B)[B]·∫ω^k/k!."""
    _check_index_hypotheses(spec)
    base, m, k = spec.base, spec.fiber_rank, spec.k
    d = base.d
    if d > degree_bound:
        raise InputError(f"base dimension {base.dimension} needs Â_{d}, above the degree bound {degree_bound}")

    # pipeline A: full product in H*(B) ⊗ Λ(y), then integrate over the fiber and pair with [B]
    ctx = pontryagin_context(d, extra=fiber_generators(m), cap=base.dimension + m)
    omega = omega_class(ctx, k)
    ch = chern_character_line(omega)
    ahat_vertical = ctx.one()  # flat vertical bundle
    ahat_base = ahat_polynomials(d).as_element(ctx)
    integrand = ch * ahat_vertical * ahat_base
    fiber_names = [g.name for g in fiber_generators(m)]
    pushed = fiber_integrate(integrand, fiber_names)
    value_a = evaluate_on_base(pushed, base)

    # pipeline B: factored form
    fctx = RingContext(fiber_generators(m), m)
    top = power_truncated(omega_class(fctx, k), k) / factorial(k)
    fiber_value = fiber_integrate(top, fiber_names).constant()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonSpinWarning)
        genus = ahat_genus(base, degree_bound)
    value_b = genus * fiber_value

    if value_a != value_b:
        raise InternalConsistencyError(f"index pipelines disagree: symbolic {value_a} vs factored {value_b}")
    if value_a.denominator != 1:
        raise InputError(f"index {value_a} is not an integer; Pontryagin numbers are inconsistent with a spin base")
    return IndexComputation(
        index=int(value_a),
        ahat_genus=genus,
        fiber_integral=fiber_value,
        ahat_top=ahat_polynomials(d).component(d),
        integrand=integrand,
        fiber_integrated=pushed,
    )


def index_twisted_dirac(spec: BundleSpec, degree_bound: int = DEFAULT_DEGREE_BOUND) -> int:
    return index_computation(spec, degree_bound).index


# -- reductions to the symplectic case ---------------------------------------------

def reduce_to_symplectic(spec: BundleSpec) -> tuple[BundleSpec, list[str]]:
    """Apply odd-rank stabilization or the orientation double cover as needed.

    Returns a spec whose linear parts all lie in Sp(m,ℤ), plus the steps taken.
    """
    steps: list[str] = []
    c = spec.cocycle
    if c.rank % 2:
        if not has_odd_shape(c):
            raise HypothesisUnmet(f"rank-{c.rank} transitions are not in Sp({c.rank - 1},ℤ)⊕{{±1}}")
        c = stabilize_odd(c)
        steps.append(f"stabilize_odd: T^{spec.fiber_rank} -> T^{c.rank}")
        spec = replace(spec, fiber_rank=c.rank, cocycle=c)
    if all(is_symplectic(g.linear) for g in c.maps.values()):
        return spec, steps
    if c.rank == 2:
        c2, base2 = orientation_double_cover(c, spec.base)
        steps.append("orientation_double_cover: GL(2,ℤ) -> SL(2,ℤ) = Sp(2,ℤ), base numbers doubled")
        return replace(spec, base=base2, cocycle=c2), steps
    raise HypothesisUnmet(f"rank-{c.rank} transitions are not in Sp({c.rank},ℤ)")


# -- certificate ------------------------------------------------------------------

@dataclass(frozen=True)
class MetricData:
    metric: BlockMetric
    s_min: float | None = None
    weitzenbock_constant: float | None = None


@dataclass(frozen=True)
class LowerWitness:
    report: CocycleReport

    @property
    def holds(self) -> bool:
        return self.report.valid

    def describe(self) -> str:
        if self.holds:
            return "T-structure witness: cocycle valid"
        return f"T-structure witness: cocycle INVALID (failing triples {list(self.report.failing_triples)})"


@dataclass(frozen=True)
class UpperWitness:
    index: int | None = None
    ahat_genus_base: Fraction | None = None
    ahat_genus_used: Fraction | None = None
    fiber_integral: Fraction | None = None
    ahat_top: dict = field(default_factory=dict)
    reductions: tuple = ()
    spinc_parity_zero: bool | None = None
    threshold_n: int | None = None
    covering_degree: int | None = None
    norm_at_1: float | None = None
    threshold_note: str | None = None

    @property
    def holds(self) -> bool:
        return self.index is not None and self.index != 0


@dataclass(frozen=True)
class Certificate:
    lower: LowerWitness
    upper: UpperWitness
    verdict: str | None
    reason: str | None = None
    warnings: tuple = ()
    classes: dict | None = None

    @property
    def issued(self) -> bool:
        return self.verdict is not None

    def to_records(self) -> list[dict]:
        up = self.upper
        recs = [
            {"record": "lower", "holds": self.lower.holds, **self.lower.report.to_dict()},
            {
                "record": "upper",
                "holds": up.holds,
                "index": up.index,
                "ahat_genus_base": None if up.ahat_genus_base is None else _frac(up.ahat_genus_base),
                "ahat_genus_used": None if up.ahat_genus_used is None else _frac(up.ahat_genus_used),
                "fiber_integral": None if up.fiber_integral is None else _frac(up.fiber_integral),
                "ahat_top_coefficients": {partition_key(p): _frac(c) for p, c in up.ahat_top.items()},
                "reductions": list(up.reductions),
                "spinc_parity_zero": up.spinc_parity_zero,
            },
        ]
        if up.threshold_n is not None or up.threshold_note is not None:
            recs.append({"record": "threshold", "n_star": up.threshold_n, "covering_degree": up.covering_degree,
                         "norm_at_1": up.norm_at_1, "note": up.threshold_note})
        if self.classes is not None:
            recs.append({"record": "classes", **self.classes})
        recs.append({"record": "verdict", "verdict": self.verdict, "reason": self.reason,
                     "warnings": list(self.warnings)})
        return recs

    def render(self) -> str:
        up = self.upper
        lines = []
        if self.issued:
            lines.append(f"{self.verdict}; index = {up.index}; {self.lower.describe()}")
        else:
            lines.append(f"certificate withheld: {self.reason}")
            lines.append(self.lower.describe())
        if up.index is not None:
            lines.append(f"index witness: index(D^E_+) = {up.index} = Â(B)[B] × ∫ω^k/k! = "
                         f"{up.ahat_genus_used} × {up.fiber_integral}")
        for step in up.reductions:
            lines.append(f"reduction: {step}")
        if up.ahat_top:
            lines.append("Â top coefficients: " + ", ".join(f"{partition_key(p)}: {c}" for p, c in up.ahat_top.items()))
        if up.threshold_n is not None:
            lines.append(f"Weitzenböck threshold: n* = {up.threshold_n} (cover degree {up.covering_degree}, "
                         f"max|ω|_h = {up.norm_at_1:.6g})")
        elif up.threshold_note:
            lines.append(f"Weitzenböck threshold: {up.threshold_note}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines)


def _threshold(metric_data: MetricData, spec: BundleSpec, reduced: BundleSpec) -> dict:
    h = metric_data.metric
    if h.base_dim != spec.base.dimension or h.fiber_dim != spec.fiber_rank:
        raise InputError(f"metric blocks {h.base_dim}+{h.fiber_dim} do not match bundle "
                         f"{spec.base.dimension}+{spec.fiber_rank}")
    if reduced.fiber_rank > spec.fiber_rank:
        h = h.with_product_circle()
    norm = max_omega_norm(h, reduced.k)
    s_min = metric_data.s_min
    if s_min is None:
        return {"norm_at_1": norm, "threshold_note": "no s_min supplied"}
    if not s_min > 0:
        return {"norm_at_1": norm, "threshold_note": f"s_min = {s_min} is not positive; no threshold"}
    n = weitzenbock_threshold(s_min, h.dim, norm, metric_data.weitzenbock_constant)
    return {"norm_at_1": norm, "threshold_n": n, "covering_degree": n ** reduced.fiber_rank}


def certify_zero_yamabe(spec: BundleSpec, metric_data: MetricData | None = None,
                        degree_bound: int = DEFAULT_DEGREE_BOUND, dump_classes: bool = False) -> Certificate:
    """Two-sided certificate: T-structure (Y ≥ 0) and nonzero index (Y ≤ 0)."""
    lower = LowerWitness(validate_cocycle(spec.cocycle, modulo_lattice=True))
    notes: list[str] = []
    if not spec.base.spin:
        notes.append("base is not spin")

    def withheld(reason, upper=UpperWitness()):
        return Certificate(lower, upper, None, reason, tuple(notes))

    if not lower.holds:
        return withheld("T-structure witness failed: transition data is not a cocycle")
    if not spec.base.spin:
        return withheld("hypothesis unmet: base is not spin")
    if not spec.omega_is_generator:
        return withheld("hypothesis unmet: ω does not restrict to a fiber generator")
    try:
        reduced, steps = reduce_to_symplectic(spec)
    except HypothesisUnmet as exc:
        return withheld(f"hypothesis unmet: {exc}")
    comp = index_computation(reduced, degree_bound)
    # V is symplectic, hence complex; with flat V its c1 vanishes rationally
    vctx = RingContext(fiber_generators(reduced.fiber_rank), reduced.fiber_rank)
    parity_zero = not spinc_parity(vctx.zero())
    extra = _threshold(metric_data, spec, reduced) if metric_data is not None else {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NonSpinWarning)
        genus_base = ahat_genus(spec.base, degree_bound)
    upper = UpperWitness(
        index=comp.index,
        ahat_genus_base=genus_base,
        ahat_genus_used=comp.ahat_genus,
        fiber_integral=comp.fiber_integral,
        ahat_top=comp.ahat_top,
        reductions=tuple(steps),
        spinc_parity_zero=parity_zero,
        **extra,
    )
    classes = comp.dump_classes() if dump_classes else None
    if not upper.holds:
        return Certificate(lower, upper, None, "index vanishes: Â(B)[B] = 0, theorem hypothesis unmet",
                           tuple(notes), classes)
    return Certificate(lower, upper, "Y(M) = 0", None, tuple(notes), classes)
