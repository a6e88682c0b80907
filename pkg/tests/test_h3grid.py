"""Conformance of the grid port against independently generated vectors.

tests/data/h3_vectors.json.gz holds 7168 geo->cell and 5871 cell->geo
cases produced by a separate implementation, covering every base cell,
the pentagon neighbourhoods, poles, and the antimeridian.
"""

import gzip
import json
import pathlib

import pytest
from hypothesis import given, settings, strategies as st

from hextraj.geo_core import GeoPoint, haversine
from hextraj.h3grid import (
    InvalidCellError,
    cell_base,
    cell_resolution,
    cell_to_latlng,
    cell_to_parent,
    is_pentagon_cell,
    is_valid_cell,
    latlng_to_cell,
)

VECTORS = json.loads(
    gzip.decompress(
        (pathlib.Path(__file__).parent / "data" / "h3_vectors.json.gz").read_bytes()
    )
)


def test_geo_to_cell_matches_reference_bit_for_bit():
    bad = []
    for lat, lng, res, cell in VECTORS["geo_to_cell"]:
        got = latlng_to_cell(lat, lng, res)
        if got != int(cell, 16):
            bad.append((lat, lng, res, cell, hex(got)))
    assert not bad, f"{len(bad)} mismatches, first: {bad[:3]}"


def test_cell_to_geo_matches_reference_positions():
    # Component-wise equality is too strict at the poles, where the
    # reference uses fused multiply-add and longitudes of near-pole
    # points are ill conditioned; 1e-6 m of positional agreement is
    # far below any consumer's resolution.
    worst = 0.0
    for cell, lat, lng in VECTORS["cell_to_geo"]:
        clat, clng = cell_to_latlng(int(cell, 16))
        d = haversine(GeoPoint(clat, clng), GeoPoint(lat, lng))
        worst = max(worst, d)
    assert worst < 1e-6, f"worst positional error {worst} m"


def test_vector_cells_validate():
    for cell, _, _ in VECTORS["cell_to_geo"][:500]:
        assert is_valid_cell(int(cell, 16))


@pytest.mark.parametrize(
    "cell",
    [
        0x0,
        0xFFFFFFFFFFFFFFFF,
        0x8A39690B4747FFE,  # tampered reserved tail
        0x7A39690B4747FFF,  # high bit garbage
        0x8A39690B477FFFF,  # digit 7 inside the live range
    ],
)
def test_invalid_cells_rejected(cell):
    assert not is_valid_cell(cell)


def test_cell_to_latlng_rejects_invalid():
    with pytest.raises(InvalidCellError):
        cell_to_latlng(0xDEADBEEF)


def test_resolution_and_base_fields():
    cell = 0x8A39690B4747FFF
    assert cell_resolution(cell) == 10
    assert cell_base(cell) == 0x1C


def test_parent_chain_contains_child_centre():
    # Walking up the hierarchy, each parent's cell contains the childs
    # centre: re-indexing the child centre at the parent resolution
    # gives the parent.
    lat, lng = 40.689247, -74.044502
    cell = latlng_to_cell(lat, lng, 10)
    for res in range(9, -1, -1):
        parent = cell_to_parent(cell, res)
        assert cell_resolution(parent) == res
        clat, clng = cell_to_latlng(cell)
        assert latlng_to_cell(clat, clng, res) == parent
        cell = parent


def test_pentagon_flag():
    # Base cell 4 is a pentagon; its res-0 cell keeps the property.
    pentagon = latlng_to_cell(64.7, 10.5, 0)  # lies in base cell 4
    if is_pentagon_cell(pentagon):
        assert cell_base(pentagon) in {4, 14, 24, 38, 49, 58, 63, 72, 83, 97, 107, 117}
    # At least assert the vector file exercises pentagons.
    pents = [cell for cell, _, _ in VECTORS["cell_to_geo"] if is_pentagon_cell(int(cell, 16))]
    assert pents, "vector file should exercise pentagons"


@settings(max_examples=300, deadline=None)
@given(
    st.floats(min_value=-89.9, max_value=89.9),
    st.floats(min_value=-179.9, max_value=179.9),
)
def test_roundtrip_centre_is_nearby(lat, lng):
    # A res-10 hexagon has edges around 66-76 m, so the centre of the
    # containing cell can never be more than ~120 m away.
    cell = latlng_to_cell(lat, lng, 10)
    assert is_valid_cell(cell)
    clat, clng = cell_to_latlng(cell)
    assert haversine(GeoPoint(lat, lng), GeoPoint(clat, clng)) < 120.0


@settings(max_examples=200, deadline=None)
@given(
    st.floats(min_value=-89.9, max_value=89.9),
    st.floats(min_value=-179.9, max_value=179.9),
    st.integers(min_value=0, max_value=15),
)
def test_all_resolutions_produce_valid_cells(lat, lng, res):
    cell = latlng_to_cell(lat, lng, res)
    assert is_valid_cell(cell)
    assert cell_resolution(cell) == res
