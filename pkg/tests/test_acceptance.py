"""Acceptance gate: one test per criterion, each reported as a PASS/FAIL line."""
import math
import random
import time
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest

from torus_yamabe.bundle import certify_zero_yamabe, index_computation, load_bundle_spec
from torus_yamabe.charclass import ahat_genus, ahat_polynomials
from torus_yamabe.cocycle import (
    Cocycle,
    IntAffineMap,
    coboundary,
    det,
    direct_sum,
    is_symplectic,
    lattice_cover,
    orientation_double_cover,
    random_symplectic,
    stabilize_odd,
    validate_cocycle,
)
from torus_yamabe.constants import yamabe_kahler, yamabe_sphere, yamabe_surface
from torus_yamabe.errors import InputError
from torus_yamabe.metric import BlockMetric, decay_rate, max_omega_norm, scale_metric, curvature_term, weitzenbock_threshold

from generators import random_bundle_spec, random_nerve, random_sp_cocycle
from oracles import ahat_by_formal_roots, brute_force_index

FIXTURES = Path(__file__).parent.parent / "fixtures"


@pytest.fixture
def criterion(record_property, capsys):
    def announce(name):
        record_property("criterion", name)
        with capsys.disabled():
            print(f"\n[criterion] {name}", end=" ")
    return announce


def test_ahat_series_fidelity(criterion):
    criterion("Â-series fidelity")
    start = time.perf_counter()
    ahat_polynomials.cache_clear()
    series = ahat_polynomials(3)
    assert series.component(1) == {(1,): Fraction(-1, 24)}
    assert series.component(2) == {(1, 1): Fraction(7, 5760), (2,): Fraction(-4, 5760)}
    assert series.component(3) == ahat_by_formal_roots(3)[3]
    assert series.component(3) == {(1, 1, 1): Fraction(-31, 967680), (2, 1): Fraction(44, 967680),
                                   (3,): Fraction(-16, 967680)}
    elapsed = time.perf_counter() - start
    assert elapsed < 1.0, f"took {elapsed:.2f}s"


def test_index_two_pipeline_equivalence(criterion):
    criterion("index two-pipeline equivalence")
    for d in (1, 2, 3):
        ahat_by_formal_roots(d)  # warm the sympy oracle outside the timed loop
    rng = random.Random(20260)
    start = time.perf_counter()
    for _ in range(200):
        spec = random_bundle_spec(rng, max_d=3, max_k=4)
        comp = index_computation(spec)
        genus = ahat_genus(spec.base)
        assert comp.fiber_integral == 1
        assert comp.index == genus * 1
        d, k = spec.base.d, spec.k
        brute = brute_force_index(ahat_by_formal_roots(d)[d], spec.base.numbers, k)
        assert brute == comp.index
    elapsed = time.perf_counter() - start
    assert elapsed < 30.0, f"took {elapsed:.2f}s"


def test_k3_t2_fixture(criterion):
    criterion("K3×T² fixture")
    spec = load_bundle_spec(FIXTURES / "k3_t2.json")
    assert spec.base.dimension == 4 and spec.base.numbers == {(1,): -48} and spec.base.spin
    assert all(g == IntAffineMap.identity(2) for g in spec.cocycle.maps.values())
    cert = certify_zero_yamabe(spec)
    assert cert.upper.index == 2
    assert cert.lower.holds and cert.upper.holds
    assert cert.verdict == "Y(M) = 0"


def random_pd(rng: np.random.Generator, n: int, cond_max: float = 1e3) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eig = np.exp(rng.uniform(0, math.log(cond_max), n))
    eig[0], eig[-1] = 1.0, max(eig[-1], 1.0)
    m = (q * eig) @ q.T
    return (m + m.T) / 2


def test_decay_lemma(criterion):
    criterion("decay lemma")
    start = time.perf_counter()
    for base_dim, k in ((4, 1), (2, 2), (8, 3), (0, 1)):
        h = BlockMetric(base_dim, 2 * k, (np.eye(base_dim + 2 * k),))
        for n in (1, 2, 3, 7, 16, 64):
            got = max_omega_norm(scale_metric(h, n))
            want = math.sqrt(k) / n ** 2
            assert abs(got - want) <= 1e-12 * want
        rep = decay_rate(h, None, range(1, 65))
        assert abs(rep.fitted_slope + 2) <= 1e-12
    rng = np.random.default_rng(7)
    for _ in range(50):
        base_dim = int(rng.integers(1, 9))
        fiber = 2 * int(rng.integers(1, 4))
        g = random_pd(rng, base_dim + fiber)
        assert np.linalg.cond(g) <= 1e3 * (1 + 1e-9)
        rep = decay_rate(BlockMetric(base_dim, fiber, (g,)), None, range(1, 65))
        assert abs(rep.fitted_slope + 2) <= 0.05, rep.fitted_slope
    elapsed = time.perf_counter() - start
    assert elapsed < 10.0, f"took {elapsed:.2f}s"


def _containing(nerve, a, b):
    return sorted(tuple(sorted(t)) for t in nerve.triples if a in t and b in t)


def test_cocycle_suite(criterion):
    criterion("cocycle suite")
    rng = random.Random(404)
    perturbed = 0
    for _ in range(100):
        k = rng.randint(1, 3)
        c = random_sp_cocycle(rng, k, max_charts=8)
        assert len(c.nerve.charts) <= 8
        assert validate_cocycle(c).valid and validate_cocycle(c, modulo_lattice=True).valid
        # lattice covers keep the identity on R^m itself
        for n in (2, 3, 5):
            cov = lattice_cover(c, n)
            assert cov.lattice_scale == n and cov.maps == c.maps
            assert validate_cocycle(cov, modulo_lattice=False).valid
        in_triples = sorted({tuple(sorted(p)) for t in c.nerve.triples for p in combinations(sorted(t), 2)})
        if not in_triples:
            continue
        a, b = rng.choice(in_triples)
        g = c.transition(a, b)
        i = rng.randrange(c.rank)
        # single translation entry moved by 1/2, inverse kept consistent
        t = list(g.translation)
        t[i] += Fraction(1, 2)
        bad = IntAffineMap(g.linear, tuple(t))
        maps = dict(c.maps)
        maps[(a, b)], maps[(b, a)] = bad, bad.inverse()
        for mod in (False, True):
            rep = validate_cocycle(Cocycle(c.nerve, maps, rank=c.rank), modulo_lattice=mod)
            assert sorted(rep.failing_triples) == _containing(c.nerve, a, b)
            assert rep.failing_pairs == ()
        # one-sided: the inverse transition is left alone, so the pair is named too
        maps = dict(c.maps)
        maps[(a, b)] = bad
        rep = validate_cocycle(Cocycle(c.nerve, maps, rank=c.rank), modulo_lattice=True)
        assert sorted(rep.failing_triples) == _containing(c.nerve, a, b)
        assert rep.failing_pairs == (tuple(sorted((a, b))),)
        # single linear entry, where a zero cofactor keeps the determinant ±1
        m = len(g.linear)
        for r in range(m):
            for s in range(m):
                minor = [row[:s] + row[s + 1:] for j, row in enumerate(g.linear) if j != r]
                if m > 1 and det(minor) == 0:
                    lin = [list(row) for row in g.linear]
                    lin[r][s] += 1
                    bad = IntAffineMap(lin, g.translation)
                    maps = dict(c.maps)
                    maps[(a, b)], maps[(b, a)] = bad, bad.inverse()
                    rep = validate_cocycle(Cocycle(c.nerve, maps, rank=c.rank))
                    assert sorted(rep.failing_triples) == _containing(c.nerve, a, b)
                    perturbed += 1
                    break
            else:
                continue
            break
        perturbed += 1
    assert perturbed >= 50


def random_odd_cocycle(rng, k):
    nerve = random_nerve(rng, 8)
    h = {}
    for ch in nerve.charts:
        s = random_symplectic(k, rng) if k else ()
        eps = ((rng.choice((1, -1)),),)
        h[ch] = IntAffineMap(direct_sum(s, eps) if k else eps)
    return coboundary(nerve, h)


def test_stabilization_and_orientation(criterion):
    criterion("stabilization and orientation")
    rng = random.Random(515)
    for _ in range(100):
        k = rng.randint(0, 3)
        c = random_odd_cocycle(rng, k)
        st = stabilize_odd(c)
        assert st.rank == 2 * k + 2
        assert all(is_symplectic(g.linear) for g in st.maps.values())
        assert validate_cocycle(st).valid
    checked = 0
    for path in sorted(FIXTURES.glob("*.json")):
        try:
            spec = load_bundle_spec(path)
        except InputError:
            continue
        if not validate_cocycle(spec.cocycle, modulo_lattice=True).valid:
            continue
        cover, base = orientation_double_cover(spec.cocycle, spec.base)
        assert all(g.det == 1 for g in cover.maps.values()), path.name
        assert validate_cocycle(cover, modulo_lattice=True).valid
        assert ahat_genus(base) == 2 * ahat_genus(spec.base), path.name
        checked += 1
    assert checked >= 5


def test_constants(criterion):
    criterion("constants")
    chi_s2 = 2
    assert abs(float(yamabe_sphere(2)) - 4 * math.pi * chi_s2) <= 1e-12 * 4 * math.pi * chi_s2
    assert abs(float(yamabe_surface(chi_s2)) - 4 * math.pi * chi_s2) <= 1e-12 * 4 * math.pi * chi_s2
    assert abs(float(yamabe_kahler(24, -16))) <= 1e-12
    target = 12 * math.sqrt(2) * math.pi
    assert abs(float(yamabe_kahler(3, 1, is_cp2=True)) - target) <= 1e-12 * target


def test_threshold_correctness(criterion):
    criterion("threshold correctness")
    rng = random.Random(99)
    for _ in range(100):
        s_min = 10 ** rng.uniform(-3, 2)
        norm = 10 ** rng.uniform(-3, 2)
        dim = rng.randint(2, 14)
        n = weitzenbock_threshold(s_min, dim, norm)
        assert curvature_term(n, dim, norm) < s_min
        if n > 1:
            assert not curvature_term(n - 1, dim, norm) < s_min
