"""Closed-form Yamabe invariants of surfaces, spheres and Kähler surfaces."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ArgumentError


def _sign(x) -> int:
    return (x > 0) - (x < 0)


@dataclass(frozen=True)
class YamabeValue:
    value: float
    formula_id: str
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        v = self.value
        ok = {
            "surface": _sign(v) == _sign(self.inputs.get("chi", 0)),
            "sphere": v > 0,
            "kahler": v <= 0,
            "cp2": v >= 0,
        }.get(self.formula_id, True)
        if not ok:
            raise AssertionError(f"{self.formula_id} value {v} has the wrong sign")

    def __float__(self):
        return self.value

    def to_dict(self) -> dict:
        return {"formula": self.formula_id, "inputs": dict(self.inputs), "value": self.value}


def vol_sphere(n: int) -> float:
    """Volume of the unit n-sphere in R^{n+1}: 2π^((n+1)/2) / Γ((n+1)/2)."""
    if not isinstance(n, int) or n < 1:
        raise ArgumentError(f"sphere dimension must be >= 1, got {n!r}")
    return 2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


def yamabe_sphere(n: int) -> YamabeValue:
    """Y(S^n) = Y(S^1 × S^{n-1}) = n(n-1)·vol(S^n)^(2/n)."""
    if not isinstance(n, int) or n < 2:
        raise ArgumentError(f"sphere formula needs n >= 2, got {n!r}")
    return YamabeValue(n * (n - 1) * vol_sphere(n) ** (2 / n), "sphere", {"n": n})


def yamabe_surface(chi: int) -> YamabeValue:
    """Gauss–Bonnet: Y(M) = 4πχ(M) for a closed oriented surface."""
    return YamabeValue(4 * math.pi * chi, "surface", {"chi": chi})


def yamabe_kahler(chi: int, tau: int, is_cp2: bool = False) -> YamabeValue:
    """LeBrun's value from minimal-model χ and τ; positive branch only for CP².

    Assumes Kodaira dimension ≠ -∞ unless ``is_cp2``; this is not checked.
    """
    radicand = 2 * chi + 3 * tau
    if radicand < 0:
        raise ArgumentError(f"2χ + 3τ = {radicand} is negative")
    magnitude = 4 * math.sqrt(2) * math.pi * math.sqrt(radicand)
    if is_cp2:
        return YamabeValue(magnitude, "cp2", {"chi": chi, "tau": tau})
    return YamabeValue(-magnitude, "kahler", {"chi": chi, "tau": tau})
