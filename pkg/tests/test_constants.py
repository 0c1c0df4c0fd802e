import math

import pytest

from torus_yamabe.constants import vol_sphere, yamabe_kahler, yamabe_sphere, yamabe_surface
from torus_yamabe.errors import ArgumentError


def test_vol_sphere():
    assert vol_sphere(1) == pytest.approx(2 * math.pi, rel=1e-15)
    assert vol_sphere(2) == pytest.approx(4 * math.pi, rel=1e-15)
    assert vol_sphere(3) == pytest.approx(2 * math.pi ** 2, rel=1e-15)
    with pytest.raises(ArgumentError):
        vol_sphere(0)


def test_vol_sphere_recursion():
    # vol(S^n) = 2π/(n-1) · vol(S^{n-2})
    for n in range(3, 21):
        assert vol_sphere(n) == pytest.approx(2 * math.pi / (n - 1) * vol_sphere(n - 2), rel=1e-13)


def test_yamabe_sphere():
    assert yamabe_sphere(2).value == pytest.approx(8 * math.pi, rel=1e-15)
    assert yamabe_sphere(3).value == pytest.approx(6 * (2 * math.pi ** 2) ** (2 / 3), rel=1e-15)
    assert yamabe_sphere(3).value == pytest.approx(43.823, abs=5e-4)
    with pytest.raises(ArgumentError):
        yamabe_sphere(1)


def test_sphere_values_positive():
    for n in range(2, 21):
        direct = n * (n - 1) * (2 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)) ** (2 / n)
        assert yamabe_sphere(n).value == pytest.approx(direct, rel=1e-13)
        assert yamabe_sphere(n).value > 0


def test_surface_and_sphere_agree():
    assert abs(yamabe_sphere(2).value - yamabe_surface(2).value) <= 1e-12 * yamabe_surface(2).value


def test_yamabe_surface():
    assert yamabe_surface(2).value == pytest.approx(8 * math.pi)
    assert yamabe_surface(0).value == 0
    assert yamabe_surface(-2).value == pytest.approx(-8 * math.pi)
    for chi in range(-6, 7):
        assert yamabe_surface(chi).value == pytest.approx(chi * yamabe_surface(1).value, abs=1e-12)


def test_yamabe_kahler():
    assert yamabe_kahler(24, -16).value == 0
    assert yamabe_kahler(3, 1, is_cp2=True).value == pytest.approx(12 * math.sqrt(2) * math.pi, rel=1e-12)
    assert yamabe_kahler(3, 1, is_cp2=True).value == pytest.approx(53.31, abs=5e-3)
    assert yamabe_kahler(3, 1).value == pytest.approx(-12 * math.sqrt(2) * math.pi, rel=1e-12)
    # depends on 2χ + 3τ only
    assert yamabe_kahler(10, 2).value == yamabe_kahler(13, 0).value
    with pytest.raises(ArgumentError):
        yamabe_kahler(1, -2)
