"""Pointwise block metrics on a torus-bundle chart and the fiber-scaling estimates.

A sample is the metric matrix in coordinates ``(x_1..x_b, y_1..y_m)``.  The
lattice cover by ``nΛ`` rescales the fiber coordinates, so in the fixed
coordinates the pulled-back metric is ``D h D`` with ``D = diag(I_b, n I_m)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ArgumentError, InputError, NumericError, ShapeError

PD_TOL = 1e-10


@dataclass(frozen=True)
class BlockMetric:
    base_dim: int
    fiber_dim: int
    samples: tuple

    def __post_init__(self):
        n = self.base_dim + self.fiber_dim
        if self.base_dim < 0 or self.fiber_dim < 1:
            raise ShapeError(f"bad block sizes base={self.base_dim} fiber={self.fiber_dim}")
        mats = []
        for i, s in enumerate(self.samples):
            a = np.array(s, dtype=float)
            if a.shape == (n * n,):
                a = a.reshape(n, n)
            if a.shape != (n, n):
                raise ShapeError(f"sample {i} has shape {a.shape}, expected ({n}, {n})")
            if not np.allclose(a, a.T, rtol=1e-12, atol=1e-12):
                raise InputError(f"sample {i} is not symmetric")
            a = (a + a.T) / 2
            if np.linalg.eigvalsh(a).min() <= PD_TOL:
                raise InputError(f"sample {i} is not positive definite")
            a.setflags(write=False)
            mats.append(a)
        if not mats:
            raise InputError("metric needs at least one sample")
        object.__setattr__(self, "samples", tuple(mats))

    @property
    def dim(self) -> int:
        return self.base_dim + self.fiber_dim

    def blocks(self, i: int = 0):
        """(A, B, C) blocks of sample ``i``."""
        h = self.samples[i]
        b = self.base_dim
        return h[:b, :b], h[:b, b:], h[b:, b:]

    def with_product_circle(self) -> BlockMetric:
        """Locally product metric on the bundle with one extra unit-length fiber circle."""
        n = self.dim
        out = []
        for h in self.samples:
            g = np.zeros((n + 1, n + 1))
            g[:n, :n] = h
            g[n, n] = 1.0
            out.append(g)
        return BlockMetric(self.base_dim, self.fiber_dim + 1, tuple(out))

    @classmethod
    def from_dict(cls, data) -> tuple[BlockMetric, float | None]:
        """Parse a metric document; returns the metric and its optional ``s_min``."""
        try:
            base_dim = int(data["base_dim"])
            fiber_dim = int(data["fiber_dim"])
            samples = data["samples"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"metric: missing or bad field {exc}") from None
        s_min = data.get("s_min")
        try:
            metric = cls(base_dim, fiber_dim, tuple(samples))
        except (ValueError, TypeError) as exc:
            raise InputError(f"metric: {exc}") from None
        return metric, (None if s_min is None else float(s_min))

    def to_dict(self) -> dict:
        return {"base_dim": self.base_dim, "fiber_dim": self.fiber_dim,
                "samples": [h.ravel().tolist() for h in self.samples]}


def scale_metric(h: BlockMetric, n: int) -> BlockMetric:
    """[[A, B], [Bᵀ, C]] ↦ [[A, nB], [nBᵀ, n²C]] on every sample."""
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ArgumentError(f"scale must be an integer >= 1, got {n!r}")
    d = np.ones(h.dim)
    d[h.base_dim:] = n
    return BlockMetric(h.base_dim, h.fiber_dim, tuple(s * np.outer(d, d) for s in h.samples))


def omega_form(base_dim: int, fiber_dim: int, k: int | None = None) -> np.ndarray:
    """Coefficient matrix of ω = Σ_{i≤k} dy_{2i-1}∧dy_{2i} (φ_ab = -φ_ba)."""
    if k is None:
        k = fiber_dim // 2
    if 2 * k > fiber_dim:
        raise ShapeError(f"ω with {k} pairs needs fiber dimension >= {2 * k}, got {fiber_dim}")
    n = base_dim + fiber_dim
    phi = np.zeros((n, n))
    for i in range(k):
        a, b = base_dim + 2 * i, base_dim + 2 * i + 1
        phi[a, b], phi[b, a] = 1.0, -1.0
    return phi


def two_form_norm(h, form) -> float:
    """Pointwise norm |φ| with |φ|² = ½ Σ φ_ab φ_cd g^ac g^bd."""
    g = np.asarray(h, dtype=float)
    phi = np.asarray(form, dtype=float)
    if g.ndim != 2 or g.shape[0] != g.shape[1] or phi.shape != g.shape:
        raise ShapeError(f"form shape {phi.shape} does not match metric shape {g.shape}")
    if not np.allclose(phi, -phi.T):
        raise ShapeError("form coefficient matrix must be antisymmetric")
    if np.linalg.cond(g) > 1e14:
        raise NumericError("metric sample is singular to working precision")
    ginv = np.linalg.inv(g)
    sq = 0.5 * float(np.sum((ginv @ phi @ ginv) * phi))
    return math.sqrt(max(sq, 0.0))


@dataclass(frozen=True)
class DecayReport:
    n_values: tuple
    norms: tuple
    fitted_slope: float
    r_squared: float
    intercept: float = 0.0

    def to_csv(self) -> str:
        lines = ["n,norm"] + [f"{n},{v:.17g}" for n, v in zip(self.n_values, self.norms)]
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        slope = f"{self.fitted_slope:.2f}".replace("-", "−")
        return f"slope = {slope}; r^2 = {self.r_squared:.6f}; fit log|ω| = {self.intercept:.6g} + slope*log n"

    def to_dict(self) -> dict:
        return {"n_values": list(self.n_values), "norms": list(self.norms),
                "fitted_slope": self.fitted_slope, "r_squared": self.r_squared,
                "intercept": self.intercept}


def max_omega_norm(h: BlockMetric, k: int | None = None) -> float:
    phi = omega_form(h.base_dim, h.fiber_dim, k)
    return max(two_form_norm(s, phi) for s in h.samples)


def decay_rate(h: BlockMetric, k: int | None, n_set: Sequence[int]) -> DecayReport:
    """Least-squares slope of log max|ω|_{h_n} against log n."""
    ns = [int(n) for n in n_set]
    if len(ns) < 4:
        raise ArgumentError("decay fit needs at least 4 scales")
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ArgumentError("scales must be strictly increasing")
    if ns[0] < 1 or ns[-1] < 4 * ns[0]:
        raise ArgumentError("scales must be >= 1 and span at least two octaves")
    norms = [max_omega_norm(scale_metric(h, n), k) for n in ns]
    if not all(v > 0 for v in norms):
        raise NumericError("ω has zero norm; nothing to fit")
    x = np.log(np.array(ns, dtype=float))
    y = np.log(np.array(norms))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return DecayReport(tuple(ns), tuple(norms), float(slope), r2, float(intercept))


def default_weitzenbock_constant(dim_total: int) -> float:
    """Number of pairs e_i e_j, i < j, in the curvature endomorphism."""
    return dim_total * (dim_total - 1) / 2


def curvature_term(n: int, dim_total: int, norm_at_1: float, C: float | None = None) -> float:
    """C · |R^E|_{h_n} bound, with |R^E| = 2π|ω| and |ω|_{h_n} = |ω|_h / n²."""
    c = default_weitzenbock_constant(dim_total) if C is None else C
    return c * 2 * math.pi * norm_at_1 / n ** 2


def weitzenbock_threshold(s_min: float, dim_total: int, norm_at_1: float, C_override: float | None = None) -> int:
    """Smallest n ≥ 1 with C·2π·|ω|_h / n² < s_min."""
    if not s_min > 0:
        raise ArgumentError(f"s_min must be positive (positive scalar curvature), got {s_min!r}")
    if norm_at_1 < 0 or dim_total < 1:
        raise ArgumentError("norm must be nonnegative and dimension positive")
    if C_override is not None and not C_override > 0:
        raise ArgumentError("Weitzenböck constant must be positive")
    lhs1 = curvature_term(1, dim_total, norm_at_1, C_override)
    ratio = lhs1 / s_min
    if not math.isfinite(ratio):
        raise NumericError("threshold ratio overflows")
    n = max(1, math.isqrt(math.floor(ratio)) + 1)

    def holds(m):
        return curvature_term(m, dim_total, norm_at_1, C_override) < s_min

    while not holds(n):
        n += 1
    while n > 1 and holds(n - 1):
        n -= 1
    return n


def pfaffian(a) -> Fraction:
    """Exact Pfaffian of an antisymmetric matrix by skew Gaussian elimination."""
    m = [[Fraction(x) for x in row] for row in a]
    n = len(m)
    if any(len(r) != n for r in m):
        raise ShapeError("Pfaffian needs a square matrix")
    for i in range(n):
        for j in range(n):
            if m[i][j] != -m[j][i]:
                raise ShapeError("Pfaffian needs an antisymmetric matrix")
    if n % 2:
        return Fraction(0)
    pf = Fraction(1)
    for k in range(0, n - 1, 2):
        piv = next((j for j in range(k + 1, n) if m[k][j] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k + 1:
            m[k + 1], m[piv] = m[piv], m[k + 1]
            for row in m:
                row[k + 1], row[piv] = row[piv], row[k + 1]
            pf = -pf
        p = m[k][k + 1]
        pf *= p
        # clear row/col k against the pivot pair
        for i in range(k + 2, n):
            f = m[k][i] / p
            if f:
                for r in range(n):
                    m[r][i] -= f * m[r][k + 1]
                for c in range(n):
                    m[i][c] -= f * m[k + 1][c]
            g = m[k + 1][i] / -p
            if g:
                for r in range(n):
                    m[r][i] -= g * m[r][k]
                for c in range(n):
                    m[i][c] -= g * m[k][c]
    return pf


def symplectic_nondegeneracy(sigma_block, k: int) -> bool:
    """True iff σ ⊕ ω_k has nonzero Pfaffian (floats are converted exactly)."""
    sig = [list(r) for r in sigma_block]
    b = len(sig)
    if any(len(r) != b for r in sig):
        raise ShapeError("σ must be square")
    if b % 2:
        raise ShapeError(f"base dimension {b} is odd; σ ⊕ ω cannot be nondegenerate")
    n = b + 2 * k
    full = [[Fraction(0)] * n for _ in range(n)]
    for i in range(b):
        for j in range(b):
            full[i][j] = Fraction(sig[i][j])
    for i in range(k):
        a = b + 2 * i
        full[a][a + 1], full[a + 1][a] = Fraction(1), Fraction(-1)
    return pfaffian(full) != 0


def load_metric(path) -> tuple[BlockMetric, float | None]:
    with open(path) as fh:
        return BlockMetric.from_dict(json.load(fh))
