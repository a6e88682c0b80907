import numpy as np
import pytest

from hextraj.ais_pipeline import clean, ingest
from hextraj.geo_core import GeoPoint, haversine
from hextraj.synth import (
    DEFAULT_START_TIME,
    DuplicateMmsi,
    RouteSpec,
    SogZero,
    StationaryCluster,
    SynthConfigError,
    Teleport,
    TimeGap,
    corridor_fleet,
    defect_fleet,
    gen_route,
    inject,
    write_records_csv,
)

WP = [GeoPoint(45.0, -5.0), GeoPoint(45.18, -5.0)]  # ~20 km due north


def north_route(**kw):
    return gen_route(RouteSpec(waypoints=WP, speed_kmh=20.0, **kw), "123456789")


# -- route generation --------------------------------------------------------

def test_route_sampling_count_and_spacing():
    recs = north_route()
    # 20 km at 20 km/h reported every 60 s is exactly one hour: 61 fixes
    assert len(recs) == 61
    assert recs[0].timestamp == DEFAULT_START_TIME
    assert recs[-1].timestamp == DEFAULT_START_TIME + 3600.0
    gaps = [
        haversine(GeoPoint(a.lat, a.lon), GeoPoint(b.lat, b.lon))
        for a, b in zip(recs[:-1], recs[1:])
    ]
    np.testing.assert_allclose(gaps, 20.0 / 3.6 * 60.0, rtol=1e-3)
    # sog is knots for 20 km/h
    assert recs[0].sog == pytest.approx(20.0 / 1.852, abs=1e-9)


def test_route_noise_is_seeded():
    a = north_route(gps_noise_sigma_m=10.0, seed=5)
    b = north_route(gps_noise_sigma_m=10.0, seed=5)
    c = north_route(gps_noise_sigma_m=10.0, seed=6)
    assert a == b
    assert a != c
    clean_run = north_route()
    offsets = [
        haversine(GeoPoint(x.lat, x.lon), GeoPoint(y.lat, y.lon))
        for x, y in zip(a, clean_run)
    ]
    assert 0.0 < np.mean(offsets) < 60.0  # noise present but bounded


def test_route_validation():
    with pytest.raises(SynthConfigError):
        gen_route(RouteSpec(waypoints=[WP[0]], speed_kmh=20.0), "1")
    with pytest.raises(SynthConfigError):
        gen_route(RouteSpec(waypoints=[WP[0], WP[0]], speed_kmh=20.0), "1")
    with pytest.raises(SynthConfigError):
        gen_route(RouteSpec(waypoints=WP, speed_kmh=0.0), "1")


# -- defect injection --------------------------------------------------------

def test_teleport_moves_one_fix():
    recs = north_route()
    out, manifest = inject(recs, [Teleport(offset_m=5000.0, at_index=30)])
    assert manifest == [{"type": "teleport", "at_index": 30, "offset_m": 5000.0}]
    moved = haversine(GeoPoint(out[30].lat, out[30].lon), GeoPoint(recs[30].lat, recs[30].lon))
    assert moved == pytest.approx(5000.0, rel=1e-6)
    assert out[:30] == recs[:30] and out[31:] == recs[31:]


def test_stationary_cluster_replaces_the_stream():
    recs = north_route()
    out, _ = inject(recs, [StationaryCluster(duration_s=3 * 3600.0)])
    assert len(out) == 181
    anchor = GeoPoint(recs[0].lat, recs[0].lon)
    spread = [haversine(GeoPoint(r.lat, r.lon), anchor) for r in out]
    assert max(spread) < 30.0  # a few sigma of 3 m jitter
    assert all(r.sog == pytest.approx(0.2) for r in out)
    assert out[-1].timestamp - out[0].timestamp == pytest.approx(3 * 3600.0)


def test_sog_zero_and_time_gap():
    recs = north_route()
    out, _ = inject(recs, [SogZero(indices=(10, 11, 12))])
    assert [r.sog for r in out[10:13]] == [0.0, 0.0, 0.0]
    assert out[9].sog > 0 and out[13].sog > 0

    out, _ = inject(recs, [TimeGap(seconds=6 * 3600.0, at_index=30)])
    assert out[30].timestamp - out[29].timestamp == pytest.approx(6 * 3600.0 + 60.0)
    assert out[29].timestamp == recs[29].timestamp
    # positions untouched, only the clock jumps
    assert (out[30].lat, out[30].lon) == (recs[30].lat, recs[30].lon)


def test_duplicate_mmsi_appends_second_vessel():
    recs = north_route()
    twin = RouteSpec(
        waypoints=[GeoPoint(45.0, 10.0), GeoPoint(45.18, 10.0)],
        speed_kmh=20.0,
        start_time=DEFAULT_START_TIME + 13.0,
    )
    out, _ = inject(recs, [DuplicateMmsi(route=twin)])
    assert len(out) == 122
    assert {r.mmsi for r in out} == {"123456789"}
    assert out[61].lon == pytest.approx(10.0)


def test_inject_index_validation():
    recs = north_route()
    with pytest.raises(SynthConfigError):
        inject(recs, [Teleport(offset_m=100.0, at_index=61)])
    with pytest.raises(SynthConfigError):
        inject(recs, [SogZero(indices=(-1,))])
    with pytest.raises(SynthConfigError):
        inject(recs, [TimeGap(seconds=60.0, at_index=0)])


# -- fleets ------------------------------------------------------------------

def test_corridor_fleet_shape():
    records, manifest = corridor_fleet(n_vessels=6, seed=3)
    assert manifest["scenario"] == "corridor"
    assert len(manifest["vessels"]) == 6
    mmsis = {v["mmsi"] for v in manifest["vessels"]}
    assert len(mmsis) == 6
    by_vessel = {m: [r for r in records if r.mmsi == m] for m in mmsis}
    for recs in by_vessel.values():
        # four 14 km legs at 20 km/h is ~169 min of voyage: long enough
        # for a 30 min context plus a 90 min horizon
        span_min = (recs[-1].timestamp - recs[0].timestamp) / 60.0
        assert span_min >= 120.0 + 30.0
    # staggered starts, same geometry
    starts = sorted(r[0].timestamp for r in by_vessel.values())
    assert starts[1] - starts[0] == pytest.approx(37.0)


def test_corridor_fleet_is_deterministic():
    a, _ = corridor_fleet(n_vessels=4, seed=9)
    b, _ = corridor_fleet(n_vessels=4, seed=9)
    c, _ = corridor_fleet(n_vessels=4, seed=10)
    assert a == b
    assert a != c


def test_defect_fleet_kinds_cycle():
    records, manifest = defect_fleet(n_vessels=14, seed=1)
    kinds = [v["kind"] for v in manifest["vessels"]]
    assert kinds == [
        "control", "teleport", "stationary", "duplicate_mmsi", "sog_zero",
        "time_gap", "runt",
    ] * 2
    assert all("expect_trajectories" in v for v in manifest["vessels"])
    assert len({v["mmsi"] for v in manifest["vessels"]}) == 14


def test_defect_fleet_expectations_hold_after_cleaning():
    records, manifest = defect_fleet(n_vessels=21, seed=2)
    trajs = clean(records)
    got = {}
    for t in trajs:
        got[t.mmsi] = got.get(t.mmsi, 0) + 1
    for v in manifest["vessels"]:
        assert got.get(v["mmsi"], 0) == v["expect_trajectories"], v


# -- CSV round trip ----------------------------------------------------------

def test_csv_roundtrip_is_lossless(tmp_path):
    records, _ = defect_fleet(n_vessels=7, seed=4)
    path = tmp_path / "fleet.csv"
    write_records_csv(path, records)
    back = ingest(path)
    assert back.skipped == 0
    assert back.records == records
