"""Raw AIS position reports to cleaned, hashed, 60-second trajectories.

Stage order inside each MMSI group:

1.  exact duplicate reports and repeated timestamps dropped
2.  reports with SOG exactly zero dropped
3.  coarse DBSCAN (eps 10 in degree space); noise dropped; each cluster
    is treated as one physical vessel, which separates distinct vessels
    broadcasting the same MMSI
4.  chronological sort inside the coarse cluster
5.  fine DBSCAN (eps 0.1); noise dropped
6.  clusters whose mean point-to-centroid distance is under 15 m
    dropped (moored or docked vessels)
7.  the surviving time-ordered points are cut into segments wherever
    the fine cluster changes or the time gap exceeds five hours
8.  every segment gets a hash from its cluster and ordinal
9.  any consecutive implied speed above 100 km/h discards the whole
    segment
10. a segment is merged into its predecessor when the transition speed
    is within +-5% of the predecessor's trailing mean speed (the merged
    segment keeps the predecessor's hash and number)
11. segments with fewer than 10 points dropped, then linear resampling
    onto exact 60 s marks; anything left shorter than 10 points after
    resampling is dropped as well, keeping the output invariant
12. consolidated id = digest of "mmsi|trajectory_number|cluster_hash"

Both DBSCAN passes run on raw decimal degrees with Euclidean distance,
matching the unitless eps defaults; pass a rescaled eps if you need
metric behaviour. Inputs crossing the antimeridian are not handled.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .geo_core import GeoPoint, centroid, haversine

__all__ = [
    "AisRecord",
    "CleaningConfig",
    "CleanTrajectory",
    "IngestResult",
    "CorruptInputError",
    "TooShortSpanError",
    "ingest",
    "dbscan",
    "clean",
    "split_on_time_gap",
    "stationary_cluster_filter",
    "merge_decision",
    "resample",
    "trajectory_hash",
    "read_trajectories",
    "write_trajectories",
    "trajectories_to_records",
]

log = logging.getLogger(__name__)

NOISE = _kernels.NOISE


class CorruptInputError(ValueError):
    """More than half of the input rows failed schema validation."""


class TooShortSpanError(ValueError):
    """Resampling needs a span of at least one interval."""


@dataclass(frozen=True)
class AisRecord:
    mmsi: str
    timestamp: float  # UTC epoch seconds
    lat: float
    lon: float
    sog: float        # knots

    @property
    def point(self) -> GeoPoint:
        return GeoPoint(self.lat, self.lon)


@dataclass(frozen=True)
class CleaningConfig:
    eps_global: float = 10.0
    eps_local: float = 0.1
    min_pts: int = 4
    stationary_radius_m: float = 15.0
    gap_split_s: float = 18_000.0  # five hours
    teleport_kmh: float = 100.0
    merge_tolerance: float = 0.05
    merge_window: int = 10
    min_points: int = 10
    resample_s: float = 60.0

    def __post_init__(self) -> None:
        for name in (
            "eps_global", "eps_local", "min_pts", "stationary_radius_m",
            "gap_split_s", "teleport_kmh", "merge_window", "min_points",
            "resample_s",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.merge_tolerance < 1.0:
            raise ValueError("merge_tolerance must be in (0, 1)")


@dataclass(frozen=True)
class CleanTrajectory:
    id: str
    mmsi: str
    start: float                      # epoch seconds of the first point
    points: np.ndarray                # (n, 2) lat/lon at 60 s spacing
    source_span: tuple[float, float]  # first/last raw timestamps

    def __len__(self) -> int:
        return len(self.points)


class IngestResult(tuple):
    """(records, skipped) with named access."""

    def __new__(cls, records: list[AisRecord], skipped: int):
        return super().__new__(cls, (records, skipped))

    @property
    def records(self) -> list[AisRecord]:
        return self[0]

    @property
    def skipped(self) -> int:
        return self[1]


# ---------------------------------------------------------------------------
# Ingest.

def _parse_timestamp(raw: str) -> float:
    raw = raw.strip()
    try:
        return float(raw)
    except ValueError:
        pass
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def _record_from_fields(mmsi, timestamp, lat, lon, sog) -> AisRecord:
    ts = _parse_timestamp(str(timestamp))
    lat = float(lat)
    lon = float(lon)
    sog = float(sog)
    if not math.isfinite(ts):
        raise ValueError("timestamp not finite")
    if not (-90.0 <= lat <= 90.0 and -180.0 <= lon <= 180.0):
        raise ValueError("position out of range")
    if not (math.isfinite(sog) and sog >= 0.0):
        raise ValueError("sog negative or not finite")
    mmsi = str(mmsi).strip()
    if not mmsi:
        raise ValueError("empty mmsi")
    return AisRecord(mmsi, ts, lat, lon, sog)


def ingest(path: str, fmt: str = "csv") -> IngestResult:
    """Parse a CSV (header mmsi,timestamp,lat,lon,sog) or NDJSON file.

    Rows that fail the schema are skipped and counted, not fatal; more
    than 50% bad rows raises CorruptInputError.
    """
    records: list[AisRecord] = []
    skipped = 0
    total = 0
    if fmt == "csv":
        import csv

        with open(path, "r", encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                total += 1
                try:
                    records.append(
                        _record_from_fields(
                            row["mmsi"], row["timestamp"], row["lat"], row["lon"], row["sog"]
                        )
                    )
                except (KeyError, ValueError, TypeError):
                    skipped += 1
    elif fmt == "ndjson":
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                total += 1
                try:
                    obj = json.loads(line)
                    records.append(
                        _record_from_fields(
                            obj["mmsi"], obj["timestamp"], obj["lat"], obj["lon"], obj["sog"]
                        )
                    )
                except (KeyError, ValueError, TypeError):
                    skipped += 1
    else:
        raise ValueError(f"unknown ingest format {fmt!r}")

    if total == 0:
        log.warning("ingest: %s is empty", path)
    elif skipped * 2 > total:
        raise CorruptInputError(f"{skipped}/{total} rows failed schema validation")
    return IngestResult(records, skipped)


# ---------------------------------------------------------------------------
# Primitive stages, exposed for direct use and for tests.

def dbscan(points, eps: float, min_pts: int) -> np.ndarray:
    """DBSCAN labels (noise = -1) on Euclidean degree coordinates.

    A point is core when it has >= min_pts neighbours within eps, itself
    included; cluster ids follow first-core-point order, so labels are
    deterministic for a fixed point order.
    """
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    if eps <= 0 or min_pts < 1:
        raise ValueError("eps must be positive and min_pts >= 1")
    return _kernels.dbscan_labels(arr[:, 0], arr[:, 1], float(eps), int(min_pts))


def split_on_time_gap(records: Sequence[AisRecord], gap_split_s: float = 18_000.0) -> list[list[AisRecord]]:
    """Cut a time-sorted record sequence strictly after gaps > gap_split_s."""
    groups: list[list[AisRecord]] = []
    cur: list[AisRecord] = []
    prev_t: float | None = None
    for rec in records:
        if prev_t is not None and rec.timestamp - prev_t > gap_split_s:
            groups.append(cur)
            cur = []
        cur.append(rec)
        prev_t = rec.timestamp
    if cur:
        groups.append(cur)
    return groups


def stationary_cluster_filter(points, stationary_radius_m: float = 15.0) -> bool:
    """True when the cluster should be kept.

    Drops (returns False) exactly when the mean point-to-centroid
    haversine distance is strictly below the radius.
    """
    pts = [GeoPoint(p[0], p[1]) for p in np.asarray(points, dtype=np.float64).reshape(-1, 2)]
    c = centroid(pts)
    mean_dist = sum(haversine(p, c) for p in pts) / len(pts)
    return not mean_dist < stationary_radius_m


def _trailing_mean_speed_kmh(times: np.ndarray, lats: np.ndarray, lons: np.ndarray, window: int) -> float:
    # Mean implied speed over the consecutive pairs among the last
    # `window` points.
    n = len(times)
    lo = max(0, n - window)
    if n - lo < 2:
        return 0.0
    t = times[lo:]
    d = _kernels.haversine_m(lats[lo:-1], lons[lo:-1], lats[lo + 1:], lons[lo + 1:])
    dt = np.diff(t)
    return float(np.mean(d / dt * 3.6))


def merge_decision(a, b, cfg: CleaningConfig = CleaningConfig()) -> bool:
    """Whether segment b continues segment a.

    a and b are (n, 3) arrays of (epoch_s, lat, lon); a must end before
    b starts. True when the transition speed lies within the tolerance
    band around a's trailing mean speed.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 3)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 3)
    if b[0, 0] <= a[-1, 0]:
        raise ValueError("segment b must start after segment a ends")
    mean_speed = _trailing_mean_speed_kmh(a[:, 0], a[:, 1], a[:, 2], cfg.merge_window)
    dt = b[0, 0] - a[-1, 0]
    transition = haversine(GeoPoint(a[-1, 1], a[-1, 2]), GeoPoint(b[0, 1], b[0, 2])) / dt * 3.6
    lo = (1.0 - cfg.merge_tolerance) * mean_speed
    hi = (1.0 + cfg.merge_tolerance) * mean_speed
    return lo <= transition <= hi


def resample(points, resample_s: float = 60.0) -> np.ndarray:
    """Linear lat/lon interpolation onto exact resample_s marks.

    Input and output are (n, 3) arrays of (epoch_s, lat, lon); the grid
    starts at the first timestamp and never extrapolates past the last.
    """
    arr = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(arr) < 2 or arr[-1, 0] - arr[0, 0] < resample_s:
        raise TooShortSpanError(
            f"span {0.0 if len(arr) < 2 else arr[-1, 0] - arr[0, 0]:.1f} s "
            f"is shorter than one {resample_s:.0f} s interval"
        )
    t = arr[:, 0]
    steps = int((t[-1] - t[0]) // resample_s)
    grid = t[0] + resample_s * np.arange(steps + 1)
    out = np.empty((len(grid), 3), dtype=np.float64)
    out[:, 0] = grid
    out[:, 1] = np.interp(grid, t, arr[:, 1])
    out[:, 2] = np.interp(grid, t, arr[:, 2])
    return out


def trajectory_hash(mmsi: str, trajectory_number: int, cluster_hash: str) -> str:
    """Consolidated 128-bit digest of "mmsi|trajectory_number|cluster_hash"."""
    payload = f"{mmsi}|{trajectory_number}|{cluster_hash}".encode()
    return hashlib.sha256(payload).hexdigest()[:32]


# ---------------------------------------------------------------------------
# The full pipeline.

class _Segment:
    __slots__ = ("times", "lats", "lons", "cluster_hash", "after_gap", "tail_index")

    def __init__(self, times, lats, lons, cluster_hash, after_gap):
        self.times = times
        self.lats = lats
        self.lons = lons
        self.cluster_hash = cluster_hash
        # True when a >5 h gap separates this segment from the previous
        # one; gap boundaries are never merge candidates, otherwise the
        # merge stage would undo the gap split.
        self.after_gap = after_gap
        self.tail_index = 0  # original ordinal of the last absorbed segment

    def append(self, other: "_Segment") -> None:
        self.times = np.concatenate([self.times, other.times])
        self.lats = np.concatenate([self.lats, other.lats])
        self.lons = np.concatenate([self.lons, other.lons])


def _max_speed_kmh(times, lats, lons) -> float:
    if len(times) < 2:
        return 0.0
    d = _kernels.haversine_m(lats[:-1], lons[:-1], lats[1:], lons[1:])
    return float(np.max(d / np.diff(times) * 3.6))


def _clean_vessel(mmsi: str, times, lats, lons, gidx: int, cfg: CleaningConfig) -> list[CleanTrajectory]:
    order = np.argsort(times, kind="stable")
    times = times[order]
    lats = lats[order]
    lons = lons[order]

    local = dbscan(np.column_stack([lats, lons]), cfg.eps_local, cfg.min_pts)
    keep = local != NOISE
    for label in np.unique(local[keep]):
        sel = local == label
        pts = np.column_stack([lats[sel], lons[sel]])
        if not stationary_cluster_filter(pts, cfg.stationary_radius_m):
            keep &= ~sel
    times, lats, lons, local = times[keep], lats[keep], lons[keep], local[keep]
    if len(times) == 0:
        return []

    # Cut into segments on cluster change or long gap.
    boundaries = [0]
    gap_flags = [False]
    for i in range(1, len(times)):
        gap = times[i] - times[i - 1] > cfg.gap_split_s
        if gap or local[i] != local[i - 1]:
            boundaries.append(i)
            gap_flags.append(gap)
    boundaries.append(len(times))

    segments: list[_Segment] = []
    for k in range(len(boundaries) - 1):
        a, b = boundaries[k], boundaries[k + 1]
        chash = hashlib.sha256(f"{mmsi}|{gidx}|{int(local[a])}".encode()).hexdigest()[:16]
        seg = _Segment(times[a:b], lats[a:b], lons[a:b], chash, gap_flags[k])
        seg.tail_index = k
        segments.append(seg)

    # Teleport filter before merging; a discarded segment also breaks
    # the adjacency needed to merge across it.
    survivors = [s for s in segments if _max_speed_kmh(s.times, s.lats, s.lons) <= cfg.teleport_kmh]

    merged: list[_Segment] = []
    for seg in survivors:
        prev = merged[-1] if merged else None
        if (
            prev is not None
            and not seg.after_gap
            and seg.tail_index == prev.tail_index + 1
        ):
            a = np.column_stack([prev.times, prev.lats, prev.lons])
            b = np.column_stack([seg.times, seg.lats, seg.lons])
            if merge_decision(a, b, cfg):
                prev.append(seg)
                prev.tail_index = seg.tail_index
                continue
        merged.append(seg)

    out: list[CleanTrajectory] = []
    for number, seg in enumerate(merged):
        if len(seg.times) < cfg.min_points:
            continue
        span = seg.times[-1] - seg.times[0]
        if span < cfg.resample_s:
            continue
        sampled = resample(np.column_stack([seg.times, seg.lats, seg.lons]), cfg.resample_s)
        if len(sampled) < cfg.min_points:
            continue
        out.append(
            CleanTrajectory(
                id=trajectory_hash(mmsi, number, seg.cluster_hash),
                mmsi=mmsi,
                start=float(sampled[0, 0]),
                points=sampled[:, 1:].copy(),
                source_span=(float(seg.times[0]), float(seg.times[-1])),
            )
        )
    return out


def _clean_group(mmsi: str, group: list[AisRecord], cfg: CleaningConfig) -> list[CleanTrajectory]:
    # Exact duplicates first, then repeated timestamps (keep first).
    seen_full: set[tuple[float, float, float]] = set()
    seen_t: set[float] = set()
    deduped: list[AisRecord] = []
    for rec in group:
        key = (rec.timestamp, rec.lat, rec.lon)
        if key in seen_full or rec.timestamp in seen_t:
            continue
        seen_full.add(key)
        seen_t.add(rec.timestamp)
        if rec.sog == 0.0:
            continue
        deduped.append(rec)
    if not deduped:
        return []

    times = np.array([r.timestamp for r in deduped])
    lats = np.array([r.lat for r in deduped])
    lons = np.array([r.lon for r in deduped])

    labels = dbscan(np.column_stack([lats, lons]), cfg.eps_global, cfg.min_pts)
    out: list[CleanTrajectory] = []
    for gidx in range(int(labels.max()) + 1 if len(labels) else 0):
        sel = labels == gidx
        out.extend(_clean_vessel(mmsi, times[sel], lats[sel], lons[sel], gidx, cfg))
    return out


def clean(records: Iterable[AisRecord], cfg: CleaningConfig = CleaningConfig()) -> list[CleanTrajectory]:
    """Run the full pipeline; output is sorted by trajectory id."""
    groups: dict[str, list[AisRecord]] = {}
    for rec in records:
        groups.setdefault(rec.mmsi, []).append(rec)
    out: list[CleanTrajectory] = []
    for mmsi, group in groups.items():
        out.extend(_clean_group(mmsi, group, cfg))
    out.sort(key=lambda t: t.id)
    return out


# ---------------------------------------------------------------------------
# Trajectory file IO: NDJSON, one object per line, points at implicit
# 60 s spacing from "start".

def _iso(ts: float) -> str:
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat().replace("+00:00", "Z")


def write_trajectories(path: str, trajectories: Iterable[CleanTrajectory]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for t in trajectories:
            obj = {
                "id": t.id,
                "mmsi": t.mmsi,
                "start": _iso(t.start),
                "points": [[float(lat), float(lon)] for lat, lon in t.points],
            }
            fh.write(json.dumps(obj, separators=(",", ":")))
            fh.write("\n")


def read_trajectories(path: str) -> list[CleanTrajectory]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            start = _parse_timestamp(obj["start"])
            pts = np.asarray(obj["points"], dtype=np.float64).reshape(-1, 2)
            out.append(
                CleanTrajectory(
                    id=obj["id"],
                    mmsi=obj["mmsi"],
                    start=start,
                    points=pts,
                    source_span=(start, start + 60.0 * (len(pts) - 1)),
                )
            )
    return out


def trajectories_to_records(trajectories: Iterable[CleanTrajectory]) -> list[AisRecord]:
    """Re-express cleaned trajectories as raw records (for re-cleaning).

    SOG is backfilled from implied speeds (knots) so the zero-SOG filter
    does not eat moving points.
    """
    records = []
    for t in trajectories:
        pts = t.points
        speeds = _kernels.haversine_m(pts[:-1, 0], pts[:-1, 1], pts[1:, 0], pts[1:, 1]) / 60.0
        for i, (lat, lon) in enumerate(pts):
            ms = speeds[min(i, len(speeds) - 1)] if len(speeds) else 0.0
            records.append(
                AisRecord(t.mmsi, t.start + 60.0 * i, float(lat), float(lon), float(ms / 0.514444))
            )
    return records
