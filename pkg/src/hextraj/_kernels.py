"""Numerical kernels with optional numba acceleration.

Each kernel ships in two builds: a vectorized/looped numpy version
(suffix _np) and a numba @njit version (suffix _nb). The module-level
names (haversine_m, frechet_m, dbscan_labels) dispatch to the numba
build when it is importable and HEXTRAJ_NO_NUMBA is unset, otherwise
to numpy. Both builds are importable side by side so tests and
benchmarks can compare them directly.

Set HEXTRAJ_NO_NUMBA=1 to force the numpy path.
"""

from __future__ import annotations

import math
import os

import numpy as np

# IUGG mean Earth radius. Single source for the whole package.
EARTH_RADIUS_M = 6_371_008.8

NOISE = -1

if os.environ.get("HEXTRAJ_NO_NUMBA"):
    NUMBA_ENABLED = False
else:
    try:
        from numba import njit

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False


# ---------------------------------------------------------------------------
# Haversine over arrays.

def haversine_np(lat1, lon1, lat2, lon2):
    """Great-circle distance in metres; degree inputs, broadcasting ok."""
    lat1 = np.radians(np.asarray(lat1, dtype=np.float64))
    lon1 = np.radians(np.asarray(lon1, dtype=np.float64))
    lat2 = np.radians(np.asarray(lat2, dtype=np.float64))
    lon2 = np.radians(np.asarray(lon2, dtype=np.float64))
    sdlat = np.sin((lat2 - lat1) * 0.5)
    sdlon = np.sin((lon2 - lon1) * 0.5)
    h = sdlat * sdlat + np.cos(lat1) * np.cos(lat2) * sdlon * sdlon
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.minimum(h, 1.0)))


def _haversine_scalar(lat1, lon1, lat2, lon2):
    # Radian inputs; inner loop helper for the numba kernels.
    sdlat = math.sin((lat2 - lat1) * 0.5)
    sdlon = math.sin((lon2 - lon1) * 0.5)
    h = sdlat * sdlat + math.cos(lat1) * math.cos(lat2) * sdlon * sdlon
    if h > 1.0:
        h = 1.0
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(h))


def _haversine_nb_py(lat1, lon1, lat2, lon2):
    n = lat1.shape[0]
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = _haversine_scalar(
            math.radians(lat1[i]),
            math.radians(lon1[i]),
            math.radians(lat2[i]),
            math.radians(lon2[i]),
        )
    return out


def haversine_nb(lat1, lon1, lat2, lon2):
    """Element-wise haversine (metres); 1-D equal-length degree arrays."""
    lat1 = np.ascontiguousarray(lat1, dtype=np.float64)
    lon1 = np.ascontiguousarray(lon1, dtype=np.float64)
    lat2 = np.ascontiguousarray(lat2, dtype=np.float64)
    lon2 = np.ascontiguousarray(lon2, dtype=np.float64)
    return _haversine_nb_impl(lat1, lon1, lat2, lon2)


# ---------------------------------------------------------------------------
# Discrete Frechet distance.
#
# D(i,j) = max(d(a_i,b_j), min(D(i-1,j), D(i,j-1), D(i-1,j-1))), two-row DP.

def frechet_np(a_lat, a_lon, b_lat, b_lon):
    a_lat = np.asarray(a_lat, dtype=np.float64)
    b_lat = np.asarray(b_lat, dtype=np.float64)
    n = a_lat.shape[0]
    m = b_lat.shape[0]
    # n x m haversine matrix via broadcasting.
    dist = haversine_np(
        a_lat[:, None], np.asarray(a_lon, dtype=np.float64)[:, None],
        np.asarray(b_lat, dtype=np.float64)[None, :], np.asarray(b_lon, dtype=np.float64)[None, :],
    )
    prev = np.empty(m, dtype=np.float64)
    cur = np.empty(m, dtype=np.float64)
    prev[0] = dist[0, 0]
    for j in range(1, m):
        prev[j] = max(dist[0, j], prev[j - 1])
    for i in range(1, n):
        cur[0] = max(dist[i, 0], prev[0])
        row = dist[i]
        for j in range(1, m):
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            cur[j] = row[j] if row[j] > best else best
        prev, cur = cur, prev
    return float(prev[m - 1])


def _frechet_nb_py(a_lat, a_lon, b_lat, b_lon):
    n = a_lat.shape[0]
    m = b_lat.shape[0]
    ar_lat = np.empty(n, dtype=np.float64)
    ar_lon = np.empty(n, dtype=np.float64)
    br_lat = np.empty(m, dtype=np.float64)
    br_lon = np.empty(m, dtype=np.float64)
    for i in range(n):
        ar_lat[i] = math.radians(a_lat[i])
        ar_lon[i] = math.radians(a_lon[i])
    for j in range(m):
        br_lat[j] = math.radians(b_lat[j])
        br_lon[j] = math.radians(b_lon[j])

    prev = np.empty(m, dtype=np.float64)
    cur = np.empty(m, dtype=np.float64)
    prev[0] = _haversine_scalar(ar_lat[0], ar_lon[0], br_lat[0], br_lon[0])
    for j in range(1, m):
        d = _haversine_scalar(ar_lat[0], ar_lon[0], br_lat[j], br_lon[j])
        prev[j] = d if d > prev[j - 1] else prev[j - 1]
    for i in range(1, n):
        d = _haversine_scalar(ar_lat[i], ar_lon[i], br_lat[0], br_lon[0])
        cur[0] = d if d > prev[0] else prev[0]
        for j in range(1, m):
            best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            if prev[j - 1] < best:
                best = prev[j - 1]
            d = _haversine_scalar(ar_lat[i], ar_lon[i], br_lat[j], br_lon[j])
            cur[j] = d if d > best else best
        for j in range(m):
            prev[j] = cur[j]
    return prev[m - 1]


def frechet_nb(a_lat, a_lon, b_lat, b_lon):
    a_lat = np.ascontiguousarray(a_lat, dtype=np.float64)
    a_lon = np.ascontiguousarray(a_lon, dtype=np.float64)
    b_lat = np.ascontiguousarray(b_lat, dtype=np.float64)
    b_lon = np.ascontiguousarray(b_lon, dtype=np.float64)
    return float(_frechet_nb_impl(a_lat, a_lon, b_lat, b_lon))


# ---------------------------------------------------------------------------
# DBSCAN on Euclidean degree coordinates.
#
# Classic semantics: a point is core when it has >= min_pts neighbours
# within eps, itself included. Cluster ids are assigned in order of the
# first core point encountered (scanning by index), so labels are
# deterministic for a fixed point order. Non-core reachable points take
# the first cluster that claims them. Noise is labelled -1.

def dbscan_np(lat, lon, eps, min_pts):
    lat = np.asarray(lat, dtype=np.float64)
    lon = np.asarray(lon, dtype=np.float64)
    n = lat.shape[0]
    labels = np.full(n, NOISE, dtype=np.int32)
    if n == 0:
        return labels

    eps2 = eps * eps
    # Neighbour lists in one chunked pass; n is per-vessel so n^2/chunk
    # memory stays small.
    neighbors = []
    chunk = max(1, int(4_000_000 // max(n, 1)))
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        d2 = (lat[start:stop, None] - lat[None, :]) ** 2 + (lon[start:stop, None] - lon[None, :]) ** 2
        for row in d2:
            neighbors.append(np.nonzero(row <= eps2)[0])

    core = np.array([len(nb) >= min_pts for nb in neighbors], dtype=bool)
    cluster = 0
    for i in range(n):
        if labels[i] != NOISE or not core[i]:
            continue
        labels[i] = cluster
        queue = list(neighbors[i])
        qi = 0
        while qi < len(queue):
            p = queue[qi]
            qi += 1
            if labels[p] == NOISE:
                labels[p] = cluster
                if core[p]:
                    queue.extend(neighbors[p])
        cluster += 1
    return labels


def _dbscan_nb_py(lat, lon, eps, min_pts):
    n = lat.shape[0]
    labels = np.full(n, -1, dtype=np.int32)
    if n == 0:
        return labels
    eps2 = eps * eps

    counts = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = 0
        for j in range(n):
            dlat = lat[i] - lat[j]
            dlon = lon[i] - lon[j]
            if dlat * dlat + dlon * dlon <= eps2:
                c += 1
        counts[i] = c

    queue = np.empty(n, dtype=np.int64)
    cluster = 0
    for i in range(n):
        if labels[i] != -1 or counts[i] < min_pts:
            continue
        labels[i] = cluster
        queue[0] = i
        head = 0
        tail = 1
        while head < tail:
            p = queue[head]
            head += 1
            if counts[p] < min_pts:
                continue
            for j in range(n):
                if labels[j] != -1:
                    continue
                dlat = lat[p] - lat[j]
                dlon = lon[p] - lon[j]
                if dlat * dlat + dlon * dlon <= eps2:
                    labels[j] = cluster
                    queue[tail] = j
                    tail += 1
        cluster += 1
    return labels


def dbscan_nb(lat, lon, eps, min_pts):
    lat = np.ascontiguousarray(lat, dtype=np.float64)
    lon = np.ascontiguousarray(lon, dtype=np.float64)
    return _dbscan_nb_impl(lat, lon, float(eps), int(min_pts))


# ---------------------------------------------------------------------------
# Dispatch.

if NUMBA_ENABLED:
    # The scalar helper is a global of the kernels below, so it has to
    # be rebound to its jitted form before they compile.
    _haversine_scalar = njit(cache=True, nogil=True)(_haversine_scalar)
    _haversine_nb_impl = njit(cache=True, nogil=True)(_haversine_nb_py)
    _frechet_nb_impl = njit(cache=True, nogil=True)(_frechet_nb_py)
    _dbscan_nb_impl = njit(cache=True, nogil=True)(_dbscan_nb_py)
    haversine_m = haversine_nb
    frechet_m = frechet_nb
    dbscan_labels = dbscan_nb
else:
    # Plain-python stand-ins keep the _nb names importable for tests.
    _haversine_nb_impl = _haversine_nb_py
    _frechet_nb_impl = _frechet_nb_py
    _dbscan_nb_impl = _dbscan_nb_py
    haversine_m = haversine_np
    frechet_m = frechet_np
    dbscan_labels = dbscan_np
