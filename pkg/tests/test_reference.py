import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hyperdescent.geometry import DiskModel, Point, Tangent, conformal_factor, distance, exp_map
from hyperdescent.reference import (
    DegenerateGeodesic,
    OracleDomainError,
    equidistance_circle,
    geodesic_circle,
    geodesic_curvature,
    north_vertex,
    reference_exp_map,
)
from hyperdescent.selftest import oracle_cases

UNIT = DiskModel(1.0, 2)


class TestNorthVertex:
    def test_hand_case(self):
        N = north_vertex(Point([0.5, 0.0], UNIT), [0.0, 1.0])
        np.testing.assert_allclose(N, [2.0, 0.0], atol=1e-15)

    def test_circle_is_orthogonal(self):
        p = Point([0.5, 0.0], UNIT)
        N = north_vertex(p, [0.0, 1.0])
        center = 0.5 * (p.coords + N)
        rho = 0.5 * np.linalg.norm(N - p.coords)
        np.testing.assert_allclose(center, [1.25, 0.0], atol=1e-15)
        assert rho == pytest.approx(0.75, abs=1e-15)
        assert center @ center == pytest.approx(rho ** 2 + 1.0, abs=1e-14)

    def test_defining_equations(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            dim = int(rng.integers(2, 5))
            r = float(rng.choice([1.0, 2.5]))
            x = rng.normal(size=dim)
            x *= r * rng.uniform(0.05, 0.95) / np.linalg.norm(x)
            p = Point(x, DiskModel(r, dim))
            e = rng.normal(size=dim)
            e /= np.linalg.norm(e)
            N = north_vertex(p, e)
            k = r * e
            scale = max(1.0, float(np.linalg.norm(N)))
            assert abs((x - k) @ (N + k)) <= 1e-10 * scale
            assert abs((x + k) @ (N - k)) <= 1e-10 * scale

    def test_parallel_rejected(self):
        with pytest.raises(DegenerateGeodesic):
            north_vertex(Point([0.5, 0.0], UNIT), [1.0, 0.0])


class TestCurvature:
    def test_parallel(self):
        assert geodesic_curvature(Point([0.5, 0.0], UNIT), [-2.0, 0.0]) == 0.0

    def test_origin(self):
        assert geodesic_curvature(UNIT.origin(), [0.3, 0.4]) == 0.0

    def test_perpendicular(self):
        assert geodesic_curvature(Point([0.5, 0.0], UNIT), [0.0, 1.0]) == pytest.approx(4.0 / 3.0, rel=1e-15)


class TestGeodesicCircle:
    def test_hand_case(self):
        p = Point([0.5, 0.0], UNIT)
        gc = geodesic_circle(p, Tangent(p, [0.0, 0.3]))
        assert not gc.degenerate
        np.testing.assert_allclose(gc.center, [1.25, 0.0], atol=1e-15)
        assert math.sqrt(gc.radius_sq) == pytest.approx(0.75, abs=1e-15)

    def test_diameter(self):
        p = Point([0.5, 0.0], UNIT)
        assert geodesic_circle(p, Tangent(p, [0.2, 0.0])).degenerate

    @settings(max_examples=200)
    @given(st.floats(-0.95, 0.95), st.floats(-0.95, 0.95), st.floats(0, 2 * math.pi))
    def test_tangency_and_membership(self, a, b, phi):
        assume(0.05 < math.hypot(a, b) < 0.95)
        p = Point([a, b], UNIT)
        v = Tangent(p, [math.cos(phi), math.sin(phi)])
        gc = geodesic_circle(p, v)
        assume(not gc.degenerate and gc.radius_sq < 1e6)
        rho = math.sqrt(gc.radius_sq)
        assert abs((p.coords - gc.center) @ v.components) <= 1e-9 * rho
        assert abs(np.linalg.norm(p.coords - gc.center) - rho) <= 1e-9 * rho
        # orthogonal to the unit circle
        assert gc.center @ gc.center == pytest.approx(gc.radius_sq + 1.0, rel=1e-9)


class TestEquidistanceCircle:
    def test_zero_distance(self):
        p = Point([0.3, -0.2], UNIT)
        ec = equidistance_circle(p, 0.0)
        np.testing.assert_array_equal(ec.center, p.coords)
        assert ec.radius_sq == 0.0

    def test_origin(self):
        for R in (0.1, 1.0, 5.0):
            ec = equidistance_circle(UNIT.origin(), R)
            np.testing.assert_array_equal(ec.center, [0.0, 0.0])
            assert math.sqrt(ec.radius_sq) == pytest.approx(math.tanh(R / 2), rel=1e-14)

    def test_points_on_circle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            r = float(rng.choice([1.0, 2.5]))
            m = DiskModel(r, 2)
            x = rng.normal(size=2)
            x *= r * rng.uniform(0.0, 0.9) / np.linalg.norm(x)
            p = Point(x, m)
            d = float(rng.uniform(0.01, 5.0))
            ec = equidistance_circle(p, d)
            for t in np.linspace(0, 2 * math.pi, 8, endpoint=False):
                q = Point(ec.center + math.sqrt(ec.radius_sq) * np.array([math.cos(t), math.sin(t)]), m)
                assert distance(p, q) == pytest.approx(d, abs=1e-10 * max(1.0, d) / (1 - (np.linalg.norm(x) / r) ** 2))

    def test_negative_distance(self):
        with pytest.raises(ValueError):
            equidistance_circle(UNIT.origin(), -1.0)


class TestReferenceExpMap:
    def test_abstains_on_parallel(self):
        p = Point([0.5, 0.0], UNIT)
        with pytest.raises(OracleDomainError):
            reference_exp_map(p, Tangent(p, [0.1, 0.0]))

    def test_abstains_on_tiny_step(self):
        p = Point([0.5, 0.2], UNIT)
        with pytest.raises(OracleDomainError):
            reference_exp_map(p, Tangent(p, [1e-12, 1e-12]))

    def test_hand_case(self):
        # from (0.5, 0) straight "up" along the circle centred at (1.25, 0)
        p = Point([0.5, 0.0], UNIT)
        lam = conformal_factor(UNIT, p)
        v = Tangent(p, [0.0, 1.0 / math.sqrt(lam)])
        q = reference_exp_map(p, v)
        assert np.linalg.norm(q.coords - [1.25, 0.0]) == pytest.approx(0.75, abs=1e-14)
        assert q.coords[1] > 0
        assert distance(p, q) == pytest.approx(1.0, abs=1e-13)

    def test_agrees_with_stable_map(self):
        worst = 0.0
        compared = 0
        for p, v, length in oracle_cases(2000, seed=11):
            q = exp_map(p, v)
            try:
                qr = reference_exp_map(p, v)
            except OracleDomainError:
                continue
            compared += 1
            worst = max(worst, float(np.max(np.abs(q.coords - qr.coords))))
            ec = equidistance_circle(p, length)
            assert abs(np.linalg.norm(qr.coords - ec.center) - math.sqrt(ec.radius_sq)) <= 1e-9
        assert compared > 1900
        assert worst <= 1e-8
