"""Random valid inputs shared by the unit and acceptance suites."""
import math
import random
from itertools import combinations

from torus_yamabe.bundle import BundleSpec
from torus_yamabe.charclass import PontryaginData, ahat_polynomials, partitions
from torus_yamabe.cocycle import CoverNerve, IntAffineMap, coboundary, random_symplectic


def random_nerve(rng: random.Random, max_charts: int = 8) -> CoverNerve:
    charts = [f"U{i}" for i in range(rng.randint(1, max_charts))]
    overlaps = [p for p in combinations(charts, 2) if rng.random() < 0.6]
    return CoverNerve.from_overlaps(charts, overlaps)


def random_sp_cocycle(rng: random.Random, k: int, max_charts: int = 8):
    nerve = random_nerve(rng, max_charts)
    h = {c: IntAffineMap(random_symplectic(k, rng)) for c in nerve.charts}
    return coboundary(nerve, h)


def random_base(rng: random.Random, d: int) -> PontryaginData:
    """Spin base data whose Â-genus is an integer: numbers are multiples of the Â_d denominators' lcm."""
    if d == 0:
        return PontryaginData(0, {}, True)
    top = ahat_polynomials(d).component(d)
    scale = math.lcm(*(c.denominator for c in top.values()))
    numbers = {p: scale * rng.randint(-3, 3) for p in partitions(d)}
    return PontryaginData(4 * d, numbers, True)


def random_bundle_spec(rng: random.Random, max_d: int = 3, max_k: int = 4) -> BundleSpec:
    d = rng.randint(1, max_d)
    k = rng.randint(1, max_k)
    return BundleSpec(random_base(rng, d), 2 * k, random_sp_cocycle(rng, k), True)
