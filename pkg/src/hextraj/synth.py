"""Synthetic AIS corpora with labelled, injectable defects.

Routes follow piecewise great-circle legs at constant speed with
isotropic Gaussian GPS noise applied in the local tangent plane.
Everything is deterministic per seed. The fleet builders return a
manifest describing every vessel and the defects applied to it, so
tests can check that cleaning removes exactly what was injected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .ais_pipeline import AisRecord
from .geo_core import EARTH_RADIUS_M, GeoPoint, destination_point, haversine, initial_bearing

__all__ = [
    "DEFAULT_START_TIME",
    "RouteSpec",
    "Teleport",
    "StationaryCluster",
    "DuplicateMmsi",
    "SogZero",
    "TimeGap",
    "SynthConfigError",
    "gen_route",
    "inject",
    "corridor_fleet",
    "defect_fleet",
    "write_records_csv",
]

# 2023-08-01T00:00:00Z
DEFAULT_START_TIME = 1_690_848_000.0

_DEG_PER_M_LAT = 180.0 / (math.pi * EARTH_RADIUS_M)


class SynthConfigError(ValueError):
    """Route or defect parameters are unusable."""


@dataclass(frozen=True)
class RouteSpec:
    waypoints: Sequence[GeoPoint]
    speed_kmh: float
    report_interval_s: float = 60.0
    gps_noise_sigma_m: float = 0.0
    seed: int = 0
    start_time: float = DEFAULT_START_TIME


@dataclass(frozen=True)
class Teleport:
    offset_m: float
    at_index: int


@dataclass(frozen=True)
class StationaryCluster:
    duration_s: float
    jitter_sigma_m: float = 3.0
    sog_knots: float = 0.2


@dataclass(frozen=True)
class DuplicateMmsi:
    route: RouteSpec


@dataclass(frozen=True)
class SogZero:
    indices: tuple[int, ...]


@dataclass(frozen=True)
class TimeGap:
    seconds: float
    at_index: int


Defect = Union[Teleport, StationaryCluster, DuplicateMmsi, SogZero, TimeGap]


def _noisy(point: GeoPoint, sigma_m: float, rng: np.random.Generator) -> GeoPoint:
    if sigma_m <= 0.0:
        return point
    dn = rng.normal(0.0, sigma_m)
    de = rng.normal(0.0, sigma_m)
    lat = point.lat + dn * _DEG_PER_M_LAT
    lon = point.lon + de * _DEG_PER_M_LAT / math.cos(math.radians(point.lat))
    return GeoPoint(lat, lon)


def gen_route(spec: RouteSpec, mmsi: str) -> list[AisRecord]:
    """Sample a vessel along the waypoint path at constant speed."""
    wps = [GeoPoint(*w) for w in spec.waypoints]
    if len(wps) < 2:
        raise SynthConfigError("a route needs at least two waypoints")
    if spec.speed_kmh <= 0 or spec.report_interval_s <= 0:
        raise SynthConfigError("speed and report interval must be positive")
    legs = []
    for a, b in zip(wps[:-1], wps[1:]):
        length = haversine(a, b)
        if length < 1.0:
            raise SynthConfigError(f"coincident waypoints {a} and {b}")
        legs.append((a, initial_bearing(a, b), length))

    total = sum(leg[2] for leg in legs)
    v = spec.speed_kmh / 3.6
    n = int(total / v / spec.report_interval_s + 1e-9) + 1
    sog = spec.speed_kmh / 1.852

    rng = np.random.default_rng(spec.seed)
    records = []
    for k in range(n):
        d = min(k * spec.report_interval_s * v, total)
        pos = None
        for start, bearing, length in legs:
            if d <= length:
                pos = destination_point(start, bearing, d)
                break
            d -= length
        if pos is None:  # accumulated float error on the last sample
            start, bearing, length = legs[-1]
            pos = destination_point(start, bearing, length)
        pos = _noisy(pos, spec.gps_noise_sigma_m, rng)
        records.append(
            AisRecord(mmsi, spec.start_time + k * spec.report_interval_s, pos.lat, pos.lon, sog)
        )
    return records


def inject(records: list[AisRecord], defects: Sequence[Defect]) -> tuple[list[AisRecord], list[dict]]:
    """Apply defects; returns new records plus manifest entries."""
    out = list(records)
    manifest: list[dict] = []
    for defect in defects:
        if isinstance(defect, Teleport):
            if not 0 <= defect.at_index < len(out):
                raise SynthConfigError(f"teleport index {defect.at_index} out of range")
            r = out[defect.at_index]
            moved = destination_point(GeoPoint(r.lat, r.lon), 90.0, defect.offset_m)
            out[defect.at_index] = AisRecord(r.mmsi, r.timestamp, moved.lat, moved.lon, r.sog)
            manifest.append({"type": "teleport", "at_index": defect.at_index, "offset_m": defect.offset_m})
        elif isinstance(defect, StationaryCluster):
            # The vessel never sails: its whole report stream becomes a
            # moored episode jittering around the first position.
            if not out:
                raise SynthConfigError("stationary cluster needs a base record")
            base = out[0]
            interval = out[1].timestamp - base.timestamp if len(out) > 1 else 60.0
            rng = np.random.default_rng(hash_seed(base.mmsi))
            n = int(defect.duration_s / interval) + 1
            out = [
                AisRecord(
                    base.mmsi,
                    base.timestamp + k * interval,
                    *_noisy(GeoPoint(base.lat, base.lon), defect.jitter_sigma_m, rng),
                    defect.sog_knots,
                )
                for k in range(n)
            ]
            manifest.append({"type": "stationary_cluster", "duration_s": defect.duration_s})
        elif isinstance(defect, DuplicateMmsi):
            if not out:
                raise SynthConfigError("duplicate mmsi needs a base record")
            out = out + gen_route(defect.route, out[0].mmsi)
            manifest.append({"type": "duplicate_mmsi"})
        elif isinstance(defect, SogZero):
            for i in defect.indices:
                if not 0 <= i < len(out):
                    raise SynthConfigError(f"sog_zero index {i} out of range")
                r = out[i]
                out[i] = AisRecord(r.mmsi, r.timestamp, r.lat, r.lon, 0.0)
            manifest.append({"type": "sog_zero", "indices": list(defect.indices)})
        elif isinstance(defect, TimeGap):
            if not 0 < defect.at_index < len(out):
                raise SynthConfigError(f"time_gap index {defect.at_index} out of range")
            out = out[: defect.at_index] + [
                AisRecord(r.mmsi, r.timestamp + defect.seconds, r.lat, r.lon, r.sog)
                for r in out[defect.at_index:]
            ]
            manifest.append({"type": "time_gap", "seconds": defect.seconds, "at_index": defect.at_index})
        else:
            raise SynthConfigError(f"unknown defect {defect!r}")
    return out, manifest


def hash_seed(text: str) -> int:
    import hashlib

    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:4], "little")


# ---------------------------------------------------------------------------
# Fleet builders used by the CLI synth subcommand and the test suite.

def _corridor_waypoints() -> list[GeoPoint]:
    # A single curved shipping corridor in the Bay of Biscay: four legs
    # turning left by 120 degrees overall, about 56 km end to end.
    p0 = GeoPoint(45.50, -5.50)
    wps = [p0]
    for bearing, dist in ((35.0, 14_000.0), (355.0, 14_000.0), (315.0, 14_000.0), (275.0, 14_000.0)):
        wps.append(destination_point(wps[-1], bearing, dist))
    return wps


def corridor_fleet(
    n_vessels: int = 500,
    seed: int = 0,
    speed_kmh: float = 20.0,
    noise_sigma_m: float = 20.0,
) -> tuple[list[AisRecord], dict]:
    """Vessels all sailing one curved corridor; no defects.

    56 km at 20 km/h gives roughly 169 minutes per vessel, enough for a
    30-minute context plus a 90-minute horizon with margin.
    """
    wps = _corridor_waypoints()
    records: list[AisRecord] = []
    vessels = []
    for i in range(n_vessels):
        mmsi = str(200_000_000 + i)
        spec = RouteSpec(
            waypoints=wps,
            speed_kmh=speed_kmh,
            gps_noise_sigma_m=noise_sigma_m,
            seed=seed * 1_000_003 + i,
            start_time=DEFAULT_START_TIME + 37.0 * i,
        )
        records.extend(gen_route(spec, mmsi))
        vessels.append({"mmsi": mmsi, "kind": "corridor"})
    return records, {"scenario": "corridor", "seed": seed, "vessels": vessels}


def defect_fleet(n_vessels: int = 200, seed: int = 0) -> tuple[list[AisRecord], dict]:
    """A fleet cycling through every defect class plus clean controls.

    Kinds, round robin: control, teleport, stationary, duplicate_mmsi,
    sog_zero, time_gap, runt (a route too short to keep). The manifest
    states the expected number of cleaned trajectories per vessel.
    """
    kinds = ("control", "teleport", "stationary", "duplicate_mmsi", "sog_zero", "time_gap", "runt")
    records: list[AisRecord] = []
    vessels = []
    rng = np.random.default_rng(seed)
    for i in range(n_vessels):
        kind = kinds[i % len(kinds)]
        mmsi = str(310_000_000 + i)
        lat0 = 44.0 + float(rng.uniform(-1.5, 1.5))
        lon0 = -8.0 + float(rng.uniform(-1.5, 1.5))
        bearing = float(rng.uniform(0.0, 360.0))
        start = GeoPoint(lat0, lon0)
        end = destination_point(start, bearing, 40_000.0)
        spec = RouteSpec(
            waypoints=[start, end],
            speed_kmh=20.0,
            gps_noise_sigma_m=10.0,
            seed=seed * 7_777_777 + i,
            start_time=DEFAULT_START_TIME + 11.0 * i,
        )

        if kind == "runt":
            # Six reports, under the ten-point floor.
            short_end = destination_point(start, bearing, 20.0 / 60.0 * 1000.0 * 5.0)
            recs = gen_route(
                RouteSpec(
                    waypoints=[start, short_end],
                    speed_kmh=20.0,
                    gps_noise_sigma_m=10.0,
                    seed=spec.seed,
                    start_time=spec.start_time,
                ),
                mmsi,
            )
            entry = {"mmsi": mmsi, "kind": kind, "expect_trajectories": 0, "defects": []}
        else:
            recs = gen_route(spec, mmsi)
            defects: list[Defect] = []
            if kind == "teleport":
                # 5 km stays inside the local DBSCAN eps (0.1 deg), so the
                # spike reaches the speed filter instead of being excised
                # as point noise.
                defects = [Teleport(offset_m=5_000.0, at_index=len(recs) // 2)]
                expect = 0
            elif kind == "stationary":
                defects = [StationaryCluster(duration_s=3.0 * 3600.0)]
                expect = 0
            elif kind == "duplicate_mmsi":
                twin = RouteSpec(
                    waypoints=[
                        GeoPoint(start.lat, start.lon + 15.0),
                        GeoPoint(end.lat, end.lon + 15.0),
                    ],
                    speed_kmh=20.0,
                    gps_noise_sigma_m=10.0,
                    seed=spec.seed + 1,
                    start_time=spec.start_time + 13.0,
                )
                defects = [DuplicateMmsi(route=twin)]
                expect = 2
            elif kind == "sog_zero":
                mid = len(recs) // 2
                defects = [SogZero(indices=tuple(range(mid, mid + 5)))]
                expect = 1
            elif kind == "time_gap":
                defects = [TimeGap(seconds=6.0 * 3600.0, at_index=len(recs) // 2)]
                expect = 2
            else:  # control
                expect = 1
            recs, applied = inject(recs, defects)
            entry = {"mmsi": mmsi, "kind": kind, "expect_trajectories": expect, "defects": applied}
        records.extend(recs)
        vessels.append(entry)
    return records, {"scenario": "defects", "seed": seed, "vessels": vessels}


def write_records_csv(path: str, records: Sequence[AisRecord]) -> None:
    """The ingest schema: header mmsi,timestamp,lat,lon,sog, ISO times."""
    from datetime import datetime, timezone

    with open(path, "w", encoding="utf-8") as fh:
        fh.write("mmsi,timestamp,lat,lon,sog\n")
        for r in records:
            ts = datetime.fromtimestamp(r.timestamp, tz=timezone.utc).isoformat().replace("+00:00", "Z")
            fh.write(f"{r.mmsi},{ts},{r.lat!r},{r.lon!r},{r.sog!r}\n")
