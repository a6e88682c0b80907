import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hextraj.geo_core import (
    EARTH_RADIUS_M,
    EmptyInputError,
    GeoPoint,
    InvalidIntervalError,
    centroid,
    destination_point,
    haversine,
    implied_speed,
    initial_bearing,
)

lat_st = st.floats(min_value=-89.0, max_value=89.0)
lon_st = st.floats(min_value=-180.0, max_value=180.0)


def test_haversine_one_hundredth_degree_of_latitude():
    # 0.01 deg of latitude is 1112 m on the IUGG sphere, to within 0.5%.
    d = haversine(GeoPoint(0.0, 0.0), GeoPoint(0.01, 0.0))
    assert d == pytest.approx(1112.0, rel=0.005)


def test_haversine_quarter_meridian():
    d = haversine(GeoPoint(0.0, 0.0), GeoPoint(90.0, 0.0))
    assert d == pytest.approx(math.pi * EARTH_RADIUS_M / 2, rel=1e-12)


def test_haversine_zero_and_antipodal():
    p = GeoPoint(12.5, -33.0)
    assert haversine(p, p) == 0.0
    half = math.pi * EARTH_RADIUS_M
    assert haversine(GeoPoint(0.0, 0.0), GeoPoint(0.0, 180.0)) == pytest.approx(half, rel=1e-12)


@given(lat_st, lon_st, lat_st, lon_st)
def test_haversine_symmetry_and_bounds(lat1, lon1, lat2, lon2):
    a, b = GeoPoint(lat1, lon1), GeoPoint(lat2, lon2)
    d1 = haversine(a, b)
    d2 = haversine(b, a)
    assert d1 == pytest.approx(d2, abs=1e-9)
    assert 0.0 <= d1 <= math.pi * EARTH_RADIUS_M + 1e-6


@given(lat_st, lon_st, st.floats(min_value=0.0, max_value=359.99),
       st.floats(min_value=1.0, max_value=2_000_000.0))
def test_destination_point_travels_requested_distance(lat, lon, bearing, dist):
    start = GeoPoint(lat, lon)
    end = destination_point(start, bearing, dist)
    assert haversine(start, end) == pytest.approx(dist, rel=1e-9, abs=1e-6)


def test_initial_bearing_cardinal_directions():
    origin = GeoPoint(10.0, 20.0)
    assert initial_bearing(origin, destination_point(origin, 0.0, 5000)) == pytest.approx(0.0, abs=1e-6)
    assert initial_bearing(origin, destination_point(origin, 90.0, 5000)) == pytest.approx(90.0, abs=1e-3)
    assert initial_bearing(origin, destination_point(origin, 180.0, 5000)) == pytest.approx(180.0, abs=1e-6)


def test_implied_speed_known_value():
    a = GeoPoint(0.0, 0.0)
    b = destination_point(a, 90.0, 1000.0)
    # 1 km in 60 s is 60 km/h
    assert implied_speed(a, b, 60.0) == pytest.approx(60.0, rel=1e-9)


def test_implied_speed_rejects_nonpositive_interval():
    with pytest.raises(InvalidIntervalError):
        implied_speed(GeoPoint(0, 0), GeoPoint(1, 1), 0.0)
    with pytest.raises(InvalidIntervalError):
        implied_speed(GeoPoint(0, 0), GeoPoint(1, 1), -5.0)


def test_centroid_simple_mean():
    pts = [GeoPoint(0.0, 0.0), GeoPoint(2.0, 0.0), GeoPoint(1.0, 3.0)]
    c = centroid(pts)
    assert c.lat == pytest.approx(1.0)
    assert c.lon == pytest.approx(1.0)


def test_centroid_across_antimeridian():
    # Points straddling 180: the mean must land near the meridian, not at ~0.
    c = centroid([GeoPoint(0.0, 179.5), GeoPoint(0.0, -179.5)])
    assert abs(abs(c.lon) - 180.0) < 0.51


def test_centroid_empty_raises():
    with pytest.raises(EmptyInputError):
        centroid([])


def test_geopoint_validity():
    assert GeoPoint(45.0, -120.0).is_valid()
    assert not GeoPoint(91.0, 0.0).is_valid()
    assert not GeoPoint(0.0, 181.0).is_valid()
    assert not GeoPoint(float("nan"), 0.0).is_valid()
