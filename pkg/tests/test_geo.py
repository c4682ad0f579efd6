"""Geodesy unit tests. Expected distances are frozen from a 50-digit
haversine oracle evaluated with the package's sphere radius."""

import math
import random

import pytest
from mpmath import mp, mpf

from geofuse import (
    EARTH_RADIUS_KM,
    GeoPoint,
    UnitVec3,
    from_cartesian,
    geodesic_km,
    to_cartesian,
    weighted_centroid,
)
from geofuse.geo import normalize_lng


def oracle_km(a: GeoPoint, b: GeoPoint) -> float:
    """High-precision haversine, independent of the implementation under test."""
    with mp.workdps(50):
        p1, l1 = mp.radians(mpf(a.lat)), mp.radians(mpf(a.lng))
        p2, l2 = mp.radians(mpf(b.lat)), mp.radians(mpf(b.lng))
        h = mp.sin((p2 - p1) / 2) ** 2 + mp.cos(p1) * mp.cos(p2) * mp.sin((l2 - l1) / 2) ** 2
        return float(2 * mpf(str(EARTH_RADIUS_KM)) * mp.asin(mp.sqrt(h)))


def random_point(rng: random.Random) -> GeoPoint:
    # uniform on the sphere: lat from arcsin of uniform z
    z = rng.uniform(-1.0, 1.0)
    return GeoPoint(math.degrees(math.asin(z)), rng.uniform(-180.0, 180.0))


class TestGeoPoint:
    def test_lat_range(self):
        with pytest.raises(ValueError):
            GeoPoint(90.001, 0)
        with pytest.raises(ValueError):
            GeoPoint(-91, 0)

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            GeoPoint(float("nan"), 0)
        with pytest.raises(ValueError):
            GeoPoint(0, float("inf"))

    @pytest.mark.parametrize(
        "raw,expected",
        [(180.0, -180.0), (-180.0, -180.0), (185.0, -175.0), (540.0, -180.0), (-190.0, 170.0), (0.0, 0.0)],
    )
    def test_lng_normalization(self, raw, expected):
        assert GeoPoint(0, raw).lng == expected
        assert normalize_lng(raw) == expected


class TestGeodesic:
    def test_identity(self):
        assert geodesic_km(GeoPoint(0, 0), GeoPoint(0, 0)) == 0.0

    def test_antipodal_is_half_circumference(self):
        d = geodesic_km(GeoPoint(0, 0), GeoPoint(0, 180))
        assert d == pytest.approx(20015.114442035924, abs=1e-6)
        assert d == pytest.approx(math.pi * EARTH_RADIUS_KM, abs=1e-9)

    def test_nashville_to_los_angeles(self):
        d = geodesic_km(GeoPoint(36.12, -86.67), GeoPoint(33.94, -118.40))
        assert d == pytest.approx(2886.4484297648550, abs=1e-6)

    def test_matches_oracle_on_random_pairs(self):
        rng = random.Random(11)
        for _ in range(300):
            a, b = random_point(rng), random_point(rng)
            assert geodesic_km(a, b) == pytest.approx(oracle_km(a, b), abs=0.5)

    def test_symmetric_exactly(self):
        rng = random.Random(12)
        for _ in range(500):
            a, b = random_point(rng), random_point(rng)
            assert geodesic_km(a, b) == geodesic_km(b, a)

    def test_bounded_and_nonnegative(self):
        rng = random.Random(13)
        top = math.pi * EARTH_RADIUS_KM
        for _ in range(500):
            d = geodesic_km(random_point(rng), random_point(rng))
            assert 0.0 <= d <= top

    def test_triangle_inequality(self):
        rng = random.Random(14)
        for _ in range(300):
            a, b, c = (random_point(rng) for _ in range(3))
            assert geodesic_km(a, c) <= geodesic_km(a, b) + geodesic_km(b, c) + 1e-6


class TestCartesian:
    def test_axis_points(self):
        v = to_cartesian(GeoPoint(0, 0))
        assert (v.x, v.y, v.z) == pytest.approx((1, 0, 0), abs=1e-15)
        v = to_cartesian(GeoPoint(90, 123.0))
        assert (v.x, v.y, v.z) == pytest.approx((0, 0, 1), abs=1e-15)

    def test_round_trip(self):
        rng = random.Random(15)
        for _ in range(1000):
            p = random_point(rng)
            q = from_cartesian(to_cartesian(p))
            assert q.lat == pytest.approx(p.lat, abs=1e-9)
            lng_diff = abs(normalize_lng(q.lng - p.lng))
            assert min(lng_diff, 360 - lng_diff) < 1e-9

    def test_pole_longitude_is_free(self):
        q = from_cartesian(to_cartesian(GeoPoint(90, 77.0)))
        assert q.lat == pytest.approx(90.0, abs=1e-9)

    def test_from_cartesian_normalizes(self):
        q = from_cartesian((10.0, 0.0, 0.0))
        assert (q.lat, q.lng) == (0.0, 0.0)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            from_cartesian((0.0, 0.0, 0.0))

    def test_unitvec_invariant(self):
        with pytest.raises(ValueError):
            UnitVec3(1.0, 1.0, 0.0)


class TestWeightedCentroid:
    def test_singleton(self):
        p = weighted_centroid([(GeoPoint(10, 20), 1.0)])
        assert p.lat == pytest.approx(10, abs=1e-9)
        assert p.lng == pytest.approx(20, abs=1e-9)

    def test_symmetric_pair(self):
        p = weighted_centroid([(GeoPoint(0, -10), 1.0), (GeoPoint(0, 10), 1.0)])
        assert p.lat == pytest.approx(0, abs=1e-12)
        assert p.lng == pytest.approx(0, abs=1e-12)

    def test_three_to_one_mix(self):
        # Cartesian average (3,1,0)/4; longitude is atan2(1, 3) in degrees.
        p = weighted_centroid([(GeoPoint(0, 0), 3.0), (GeoPoint(0, 90), 1.0)])
        assert p.lat == pytest.approx(0, abs=1e-12)
        assert p.lng == pytest.approx(18.434948822922010, abs=1e-9)

    def test_antimeridian_mass_stays_on_antimeridian(self):
        p = weighted_centroid([(GeoPoint(0, 179), 1.0), (GeoPoint(0, -179), 1.0)])
        assert p.lat == pytest.approx(0, abs=1e-12)
        assert p.lng == -180.0  # not (0, 0): raw lat/lng averaging is wrong here

    def test_uniform_scaling_invariance(self):
        points = [(GeoPoint(12, 34), 2.0), (GeoPoint(-5, 120), 5.0), (GeoPoint(40, -60), 1.0)]
        base = weighted_centroid(points)
        exact = weighted_centroid([(p, w * 4.0) for p, w in points])  # power of two: exact
        assert (exact.lat, exact.lng) == (base.lat, base.lng)
        scaled = weighted_centroid([(p, w * 3.0) for p, w in points])
        assert scaled.lat == pytest.approx(base.lat, abs=1e-9)
        assert scaled.lng == pytest.approx(base.lng, abs=1e-9)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            weighted_centroid([])

    def test_all_zero_weights_rejected(self):
        with pytest.raises(ValueError):
            weighted_centroid([(GeoPoint(1, 1), 0.0), (GeoPoint(2, 2), 0.0)])

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            weighted_centroid([(GeoPoint(1, 1), -1.0)])

    def test_antipodal_mass_rejected(self):
        with pytest.raises(ValueError):
            weighted_centroid([(GeoPoint(0, 0), 1.0), (GeoPoint(0, 180), 1.0)])
