"""Spherical geometry primitives.

Great-circle distances, the Cartesian embedding of latitude/longitude
points, and weighted centroids on the sphere. Angles are degrees unless a
name says otherwise; distances are kilometers on a sphere of mean radius
``EARTH_RADIUS_KM``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

EARTH_RADIUS_KM = 6371.0088  # IUGG mean radius
HALF_CIRCUMFERENCE_KM = math.pi * EARTH_RADIUS_KM

# Mean Cartesian vectors shorter than this have no usable direction.
DEGENERATE_NORM = 1e-12


def normalize_lng(lng: float) -> float:
    """Wrap a longitude into [-180.0, 180.0); +180 maps to -180."""
    wrapped = math.fmod(lng + 180.0, 360.0)
    if wrapped < 0.0:
        wrapped += 360.0
    return wrapped - 180.0


@dataclass(frozen=True)
class GeoPoint:
    """A point on the sphere: latitude in [-90, 90], longitude in [-180, 180).

    Longitude is normalized on construction, so ``GeoPoint(0, 180)`` and
    ``GeoPoint(0, -180)`` are the same point. Out-of-range latitudes and
    non-finite coordinates are rejected.
    """

    lat: float
    lng: float

    def __post_init__(self) -> None:
        lat = float(self.lat)
        lng = float(self.lng)
        if not (math.isfinite(lat) and math.isfinite(lng)):
            raise ValueError(f"coordinates must be finite, got ({self.lat!r}, {self.lng!r})")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lng", normalize_lng(lng))


@dataclass(frozen=True)
class UnitVec3:
    """A 3D unit vector, the Cartesian embedding of a point on the sphere."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm_sq = self.x * self.x + self.y * self.y + self.z * self.z
        if not math.isfinite(norm_sq) or abs(norm_sq - 1.0) > 1e-12:
            raise ValueError(f"({self.x}, {self.y}, {self.z}) is not a unit vector")

    def __iter__(self):
        return iter((self.x, self.y, self.z))


def to_cartesian(p: GeoPoint) -> UnitVec3:
    """Embed a point as a unit vector; x points at (0, 0), z at the north pole."""
    lat = math.radians(p.lat)
    lng = math.radians(p.lng)
    cos_lat = math.cos(lat)
    return UnitVec3(cos_lat * math.cos(lng), cos_lat * math.sin(lng), math.sin(lat))


def from_cartesian(v: UnitVec3 | Sequence[float]) -> GeoPoint:
    """Convert a Cartesian vector back to a point, normalizing it first.

    Raises ValueError for (near-)zero vectors, whose direction is undefined.
    At the poles the longitude collapses to 0 by convention.
    """
    x, y, z = (float(c) for c in v)
    norm = math.sqrt(x * x + y * y + z * z)
    if not math.isfinite(norm) or norm <= DEGENERATE_NORM:
        raise ValueError("cannot convert a zero or non-finite vector to a point on the sphere")
    lat = math.degrees(math.asin(max(-1.0, min(1.0, z / norm))))
    lng = math.degrees(math.atan2(y, x))
    return GeoPoint(lat, lng)


def geodesic_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in kilometers (haversine on the mean-radius sphere).

    Symmetric by construction and bounded by half the circumference.
    """
    phi_a = math.radians(a.lat)
    phi_b = math.radians(b.lat)
    d_phi = math.radians(abs(b.lat - a.lat))
    d_lng = abs(b.lng - a.lng)
    if d_lng > 180.0:
        d_lng = 360.0 - d_lng
    d_lmb = math.radians(d_lng)
    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(d_lmb / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(h)))


def weighted_centroid(points: Iterable[tuple[GeoPoint, float]]) -> GeoPoint:
    """Weighted mean of points, computed on their Cartesian embeddings.

    The mean is taken over unit vectors and converted back, so results are
    correct across the antimeridian and near the poles (a naive lat/lng
    average is not). Weights must be nonnegative and finite with at least
    one strictly positive. Raises ValueError for empty input, all-zero
    weights, or a degenerate mean (perfectly antipodal mass).
    """
    sx = sy = sz = 0.0
    total = 0.0
    seen = 0
    for point, weight in points:
        seen += 1
        w = float(weight)
        if not math.isfinite(w) or w < 0.0:
            raise ValueError(f"weights must be finite and nonnegative, got {weight!r}")
        if w == 0.0:
            continue
        v = to_cartesian(point)
        sx += w * v.x
        sy += w * v.y
        sz += w * v.z
        total += w
    if seen == 0:
        raise ValueError("cannot take the centroid of zero points")
    if total == 0.0:
        raise ValueError("at least one weight must be strictly positive")
    return from_cartesian((sx / total, sy / total, sz / total))
