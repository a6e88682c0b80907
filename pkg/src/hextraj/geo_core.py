"""Spherical geometry primitives shared by every other module.

All public functions take and return decimal degrees; radians never
cross a module boundary. Distances are metres on a sphere of radius
6 371 008.8 m (IUGG mean radius, the package-wide Earth model).
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple, Sequence

from ._kernels import EARTH_RADIUS_M

__all__ = [
    "EARTH_RADIUS_M",
    "GeoPoint",
    "EmptyInputError",
    "InvalidIntervalError",
    "haversine",
    "implied_speed",
    "centroid",
    "initial_bearing",
    "destination_point",
]


class EmptyInputError(ValueError):
    """An operation that needs at least one element got none."""


class InvalidIntervalError(ValueError):
    """A time interval that must be positive was zero or negative."""


class GeoPoint(NamedTuple):
    lat: float
    lon: float

    def is_valid(self) -> bool:
        return (
            math.isfinite(self.lat)
            and math.isfinite(self.lon)
            and -90.0 <= self.lat <= 90.0
            and -180.0 <= self.lon <= 180.0
        )


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in metres.

    2r * arcsin(sqrt(sin^2(dlat/2) + cos(lat1) cos(lat2) sin^2(dlon/2))).
    """
    lat1 = math.radians(a[0])
    lat2 = math.radians(b[0])
    sdlat = math.sin((lat2 - lat1) * 0.5)
    sdlon = math.sin(math.radians(b[1] - a[1]) * 0.5)
    h = sdlat * sdlat + math.cos(lat1) * math.cos(lat2) * sdlon * sdlon
    # Rounding can push h a hair past 1 for antipodal points.
    if h > 1.0:
        h = 1.0
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def implied_speed(a: GeoPoint, b: GeoPoint, dt_s: float) -> float:
    """Average speed in km/h needed to cover a..b in dt_s seconds."""
    if dt_s <= 0:
        raise InvalidIntervalError(f"time interval must be positive, got {dt_s}")
    return haversine(a, b) / dt_s * 3.6


def centroid(points: Sequence[GeoPoint] | Iterable[GeoPoint]) -> GeoPoint:
    """Arithmetic mean of latitudes and longitudes.

    Longitudes are shifted into a contiguous window first when the input
    straddles the antimeridian, so a cluster near lon 180 does not
    average to 0. Intended for clusters at most tens of km wide, where
    the planar mean is indistinguishable from the spherical one.
    """
    pts = list(points)
    if not pts:
        raise EmptyInputError("centroid of an empty sequence")
    lats = [p[0] for p in pts]
    lons = [p[1] for p in pts]
    if max(lons) - min(lons) > 180.0:
        lons = [lon + 360.0 if lon < 0.0 else lon for lon in lons]
    lat = sum(lats) / len(pts)
    lon = sum(lons) / len(pts)
    if lon > 180.0:
        lon -= 360.0
    return GeoPoint(lat, lon)


def initial_bearing(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth from a towards b, degrees in [0, 360)."""
    lat1 = math.radians(a[0])
    lat2 = math.radians(b[0])
    dlon = math.radians(b[1] - a[1])
    x = math.cos(lat2) * math.sin(dlon)
    y = math.cos(lat1) * math.sin(lat2) - math.sin(lat1) * math.cos(lat2) * math.cos(dlon)
    return math.degrees(math.atan2(x, y)) % 360.0


def destination_point(start: GeoPoint, bearing_deg: float, distance_m: float) -> GeoPoint:
    """Point reached from start along a great circle."""
    delta = distance_m / EARTH_RADIUS_M
    theta = math.radians(bearing_deg)
    lat1 = math.radians(start[0])
    lon1 = math.radians(start[1])

    sin_lat2 = math.sin(lat1) * math.cos(delta) + math.cos(lat1) * math.sin(delta) * math.cos(theta)
    sin_lat2 = min(1.0, max(-1.0, sin_lat2))
    lat2 = math.asin(sin_lat2)
    lon2 = lon1 + math.atan2(
        math.sin(theta) * math.sin(delta) * math.cos(lat1),
        math.cos(delta) - math.sin(lat1) * sin_lat2,
    )
    lon2 = (lon2 + math.pi) % (2.0 * math.pi) - math.pi
    return GeoPoint(math.degrees(lat2), math.degrees(lon2))
