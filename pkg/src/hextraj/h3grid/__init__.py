"""Minimal conforming H3 core: geo <-> cell for all 16 resolutions.

Ports the reference indexing algorithms (gnomonic projection onto the
icosahedron, IJK quantization, aperture-7 digit walk) with the canonical
lookup tables in _tables.py. Cell identifiers are plain Python ints with
the standard 64-bit layout: 1 reserved bit, 4 mode bits, 3 reserved bits,
4 resolution bits, 7 base-cell bits, 15 x 3 direction bits.

Verified bit-for-bit against vectors generated with h3o 0.7.1 (see
tests/data/h3_vectors.json.gz).
"""

from __future__ import annotations

import math

from ._tables import (
    BASE_CELL_DATA,
    BASE_PENTAGONS,
    FACE_AXES_AZ_RADS_CII,
    FACE_CENTER_GEO,
    FACE_CENTER_XYZ,
    FACE_IJK_BASE_CELLS,
    FACE_NEIGHBORS,
)

__all__ = [
    "latlng_to_cell",
    "cell_to_latlng",
    "is_valid_cell",
    "cell_resolution",
    "cell_base",
    "cell_to_parent",
    "is_pentagon_cell",
    "InvalidCellError",
]

_TWO_PI = 2.0 * math.pi

# Threshold below which a hex2d magnitude is treated as the face center.
_EPSILON = 1.0e-16

# Scaling between res-0 unit length and gnomonic unit length.
_RES0_U_GNOMONIC = 0.381966011250105
_INV_RES0_U_GNOMONIC = 2.618033988749896

# Rotation angle between Class II and Class III resolution axes,
# asin(sqrt(3/28)).
_AP7_ROT_RADS = 0.3334731722518321

_SQRT3_2 = 0.8660254037844386
_RSIN60 = 1.1547005383792515

# sqrt(7)^res and its inverse, res 0..16.
_SQRT7_POWERS = (
    1.0,
    2.6457513110645907,
    7.0,
    18.520259177452136,
    49.00000000000001,
    129.64181424216497,
    343.0000000000001,
    907.4926996951549,
    2401.000000000001,
    6352.448897866085,
    16807.000000000007,
    44467.1422850626,
    117649.00000000007,
    311269.9959954382,
    823543.0000000006,
    2178889.971968068,
    5764801.0,
)
_INV_SQRT7_POWERS = (
    1.0,
    0.3779644730092272,
    0.14285714285714285,
    0.05399492471560388,
    0.02040816326530612,
    0.007713560673657697,
    0.002915451895043731,
    0.0011019372390939565,
    0.0004164931278633901,
    0.00015741960558485093,
    0.00005949901826619858,
    0.00002248851508355013,
    0.000008499859752314082,
    0.000003212645011935733,
    0.0000012142656789020115,
    0.0000004589492874193903,
    0.00000017346652555743034,
)

# Max coordinate dimension and unit scale on a face, indexed by Class II
# resolution (odd entries unused).
_MAX_DIM_BY_CII_RES = (
    2, -1, 14, -1, 98, -1, 686, -1, 4802, -1, 33614, -1, 235298, -1,
    1647086, -1, 11529602,
)
_UNIT_SCALE_BY_CII_RES = (
    1, -1, 7, -1, 49, -1, 343, -1, 2401, -1, 16807, -1, 117649, -1,
    823543, -1, 5764801,
)

# Resolution 0, base cell 0, all direction digits unused.
_DEFAULT_CELL = 0x8001FFFFFFFFFFF

# Direction rotated by one 60-degree step; digits are 0 center, 1 K, 2 J,
# 3 JK, 4 I, 5 IK, 6 IJ.
_ROT_CCW = (0, 5, 3, 1, 6, 4, 2)
_ROT_CW = (0, 3, 6, 2, 5, 1, 4)


class InvalidCellError(ValueError):
    """Raised when a 64-bit value is not a valid cell identifier."""


# ---------------------------------------------------------------------------
# Bit twiddling.

def cell_resolution(cell: int) -> int:
    return (cell >> 52) & 0xF


def cell_base(cell: int) -> int:
    return (cell >> 45) & 0x7F


def _set_resolution(bits: int, res: int) -> int:
    return (bits & ~(0xF << 52)) | (res << 52)


def _set_base_cell(bits: int, base: int) -> int:
    return (bits & ~(0x7F << 45)) | (base << 45)


def _get_digit(bits: int, res: int) -> int:
    return (bits >> (3 * (15 - res))) & 7


def _set_digit(bits: int, res: int, digit: int) -> int:
    off = 3 * (15 - res)
    return (bits & ~(7 << off)) | (digit << off)


def _first_axe(bits: int) -> int:
    """First non-center direction digit, or 0 if none."""
    for r in range(1, cell_resolution(bits) + 1):
        d = _get_digit(bits, r)
        if d:
            return d
    return 0


def _rotate60_bits(bits: int, ccw: bool, count: int) -> int:
    table = _ROT_CCW if ccw else _ROT_CW
    count %= 6
    if count == 0:
        return bits
    for r in range(1, cell_resolution(bits) + 1):
        d = _get_digit(bits, r)
        for _ in range(count):
            d = table[d]
        bits = _set_digit(bits, r, d)
    return bits


def _pentagon_rotate60_ccw(bits: int) -> int:
    res = cell_resolution(bits)
    if res == 0:
        return bits
    # A leading JK digit would rotate onto the deleted K axis; step twice.
    count = 2 if _first_axe(bits) == 3 else 1
    for r in range(1, res + 1):
        d = _get_digit(bits, r)
        for _ in range(count):
            d = _ROT_CCW[d]
        bits = _set_digit(bits, r, d)
    return bits


def _is_pentagon_base(base: int) -> bool:
    return bool((BASE_PENTAGONS >> base) & 1)


def is_pentagon_cell(cell: int) -> bool:
    return _is_pentagon_base(cell_base(cell)) and _first_axe(cell) == 0


def is_valid_cell(cell: int) -> bool:
    if cell < 0 or cell >> 64:
        return False
    if (cell >> 56) & 0b1000_0111:
        return False
    if (cell >> 59) & 0xF != 1:
        return False
    base = cell_base(cell)
    if base > 121:
        return False
    res = cell_resolution(cell)
    # Digits past the resolution must all be the unused marker (7),
    # digits up to it must not be.
    tail_bits = 3 * (15 - res)
    if (~cell) & ((1 << tail_bits) - 1):
        return False
    first_nonzero = 0
    for r in range(1, res + 1):
        d = _get_digit(cell, r)
        if d == 7:
            return False
        if d and not first_nonzero:
            first_nonzero = d
    # Pentagons delete the K-axis subsequence.
    if first_nonzero == 1 and _is_pentagon_base(base):
        return False
    return True


def _check_cell(cell: int) -> None:
    if not is_valid_cell(cell):
        raise InvalidCellError(f"not a valid cell identifier: {cell:#x}")


def cell_to_parent(cell: int, res: int) -> int:
    _check_cell(cell)
    own = cell_resolution(cell)
    if res > own or res < 0:
        raise InvalidCellError(f"cannot take res-{res} parent of res-{own} cell")
    bits = _set_resolution(cell, res)
    for r in range(res + 1, own + 1):
        bits = _set_digit(bits, r, 7)
    return bits


# ---------------------------------------------------------------------------
# IJK coordinate arithmetic. Coordinates are plain (i, j, k) int tuples;
# normalization keeps the minimal non-negative representative.

def _normalize(i: int, j: int, k: int) -> tuple[int, int, int]:
    m = min(i, j, k)
    return (i - m, j - m, k - m)


def _round_half_away(x: float) -> float:
    if x >= 0.0:
        return math.floor(x + 0.5)
    return math.ceil(x - 0.5)


def _up_aperture7(c: tuple[int, int, int], ccw: bool) -> tuple[int, int, int]:
    ci = c[0] - c[2]
    cj = c[1] - c[2]
    if ccw:
        ni = (3 * ci - cj) / 7.0
        nj = (ci + 2 * cj) / 7.0
    else:
        ni = (2 * ci + cj) / 7.0
        nj = (3 * cj - ci) / 7.0
    return _normalize(int(_round_half_away(ni)), int(_round_half_away(nj)), 0)


def _down_aperture7(c: tuple[int, int, int], ccw: bool) -> tuple[int, int, int]:
    # Unit vectors of resolution r expressed at resolution r+1.
    if ccw:
        iv, jv, kv = (3, 0, 1), (1, 3, 0), (0, 1, 3)
    else:
        iv, jv, kv = (3, 1, 0), (0, 3, 1), (1, 0, 3)
    i, j, k = c
    return _normalize(
        iv[0] * i + jv[0] * j + kv[0] * k,
        iv[1] * i + jv[1] * j + kv[1] * k,
        iv[2] * i + jv[2] * j + kv[2] * k,
    )


def _neighbor(c: tuple[int, int, int], digit: int) -> tuple[int, int, int]:
    return _normalize(
        c[0] + ((digit >> 2) & 1),
        c[1] + ((digit >> 1) & 1),
        c[2] + (digit & 1),
    )


def _rotate60(c: tuple[int, int, int], ccw: bool) -> tuple[int, int, int]:
    if ccw:
        iv, jv, kv = (1, 1, 0), (0, 1, 1), (1, 0, 1)
    else:
        iv, jv, kv = (1, 0, 1), (1, 1, 0), (0, 1, 1)
    i, j, k = c
    return _normalize(
        iv[0] * i + jv[0] * j + kv[0] * k,
        iv[1] * i + jv[1] * j + kv[1] * k,
        iv[2] * i + jv[2] * j + kv[2] * k,
    )


def _ijk_to_hex2d(c: tuple[int, int, int]) -> tuple[float, float]:
    ci = float(c[0] - c[2])
    cj = float(c[1] - c[2])
    return (ci - 0.5 * cj, cj * _SQRT3_2)


def _hex2d_to_ijk(x: float, y: float) -> tuple[int, int, int]:
    """Quantize cartesian hex2d coordinates to the containing cell (DGGRID)."""
    a1 = abs(x)
    a2 = abs(y)

    x2 = a2 * _RSIN60
    x1 = a1 + x2 / 2.0

    m1 = int(x1)
    m2 = int(x2)

    r1 = x1 - m1
    r2 = x2 - m2

    if r1 < 0.5:
        if r1 < 1.0 / 3.0:
            i = m1
            j = m2 + (1 if r2 >= (1.0 + r1) / 2.0 else 0)
        else:
            i = m1 + (1 if (1.0 - r1) <= r2 < (2.0 * r1) else 0)
            j = m2 + (1 if r2 >= (1.0 - r1) else 0)
    elif r1 < 2.0 / 3.0:
        j = m2 + (1 if r2 >= (1.0 - r1) else 0)
        i = m1 + (1 if (2.0 * r1 - 1.0) >= r2 or r2 >= (1.0 - r1) else 0)
    else:
        i = m1 + 1
        j = m2 + (1 if r2 >= (r1 / 2.0) else 0)

    # Fold across the axes for negative x / y.
    if x < 0.0:
        offset = j % 2
        axis_i = (j + offset) // 2
        diff = i - axis_i
        i -= 2 * diff + offset
    if y < 0.0:
        i -= (2 * j + 1) // 2
        j = -j

    return _normalize(i, j, 0)


# ---------------------------------------------------------------------------
# Spherical helpers (all radians).

def _pos_angle(a: float) -> float:
    if a < 0.0:
        a += _TWO_PI
    elif a >= _TWO_PI:
        a -= _TWO_PI
    return a


def _azimuth(lat1: float, lng1: float, lat2: float, lng2: float) -> float:
    return math.atan2(
        math.cos(lat2) * math.sin(lng2 - lng1),
        math.cos(lat1) * math.sin(lat2)
        - math.sin(lat1) * math.cos(lat2) * math.cos(lng2 - lng1),
    )


def _coord_at(lat: float, lng: float, azimuth: float, distance: float) -> tuple[float, float]:
    """Destination point at (azimuth, distance) from (lat, lng) on the unit sphere."""
    if distance < _EPSILON:
        return (lat, lng)
    azimuth = _pos_angle(azimuth)
    due_north = azimuth <= _EPSILON
    due_south = abs(azimuth - math.pi) <= _EPSILON

    if due_north or due_south:
        lat2 = lat + distance if due_north else lat - distance
    else:
        s = math.sin(lat) * math.cos(distance) + math.cos(lat) * math.sin(distance) * math.cos(azimuth)
        lat2 = math.asin(min(1.0, max(-1.0, s)))

    if abs(lat2 - math.pi / 2) <= _EPSILON:
        return (math.pi / 2, 0.0)
    if abs(lat2 + math.pi / 2) <= _EPSILON:
        return (-math.pi / 2, 0.0)

    if due_north or due_south:
        lng2 = lng
    else:
        sinlng = math.sin(azimuth) * math.sin(distance) / math.cos(lat2)
        sinlng = min(1.0, max(-1.0, sinlng))
        coslng = (math.sin(lat) * math.sin(-lat2) + math.cos(distance)) / math.cos(lat) / math.cos(lat2)
        lng2 = lng + math.atan2(sinlng, coslng)

    while lng2 > math.pi:
        lng2 -= _TWO_PI
    while lng2 < -math.pi:
        lng2 += _TWO_PI
    return (lat2, lng2)


# ---------------------------------------------------------------------------
# geo -> cell.

def _closest_face(lat: float, lng: float) -> tuple[int, float]:
    """Icosahedron face nearest the point, with squared 3D chord distance."""
    r = math.cos(lat)
    x = math.cos(lng) * r
    y = math.sin(lng) * r
    z = math.sin(lat)
    best = 0
    best_d = 5.0
    for face, (cx, cy, cz) in enumerate(FACE_CENTER_XYZ):
        dx = x - cx
        dy = y - cy
        dz = z - cz
        d = dx * dx + dy * dy + dz * dz
        if d < best_d:
            best = face
            best_d = d
    return best, best_d


def _geo_to_hex2d(lat: float, lng: float, res: int, face: int, sqd: float) -> tuple[float, float]:
    r = math.acos(1.0 - sqd / 2.0)
    if r < _EPSILON:
        return (0.0, 0.0)
    # Gnomonic scaling, then scale to the resolution's unit length.
    r = math.tan(r) * _INV_RES0_U_GNOMONIC * _SQRT7_POWERS[res]

    clat, clng = FACE_CENTER_GEO[face]
    theta = FACE_AXES_AZ_RADS_CII[face][0] - _azimuth(clat, clng, lat, lng)
    if res % 2 == 1:
        theta -= _AP7_ROT_RADS
    return (r * math.cos(theta), r * math.sin(theta))


def latlng_to_cell(lat: float, lng: float, res: int) -> int:
    """Index the location at the given resolution (degrees in, cell id out)."""
    if not (math.isfinite(lat) and math.isfinite(lng)):
        raise ValueError("latitude/longitude must be finite")
    if not 0 <= res <= 15:
        raise ValueError(f"resolution must be in [0, 15], got {res}")

    lat_r = math.radians(lat)
    lng_r = math.radians(lng)
    face, sqd = _closest_face(lat_r, lng_r)
    x, y = _geo_to_hex2d(lat_r, lng_r, res, face, sqd)
    coord = _hex2d_to_ijk(x, y)

    bits = _set_resolution(_DEFAULT_CELL, res)
    if res == 0:
        base, _count = FACE_IJK_BASE_CELLS[face][coord[0]][coord[1]][coord[2]]
        return _set_base_cell(bits, base)

    # Build direction digits from the finest resolution up; coord ends as the
    # base cell's IJK on this face.
    for r in range(res, 0, -1):
        last = coord
        ccw = r % 2 == 1
        coord = _up_aperture7(coord, ccw)
        center = _down_aperture7(coord, ccw)
        di, dj, dk = _normalize(last[0] - center[0], last[1] - center[1], last[2] - center[2])
        bits = _set_digit(bits, r, (di << 2) | (dj << 1) | dk)

    base, count = FACE_IJK_BASE_CELLS[face][coord[0]][coord[1]][coord[2]]
    bits = _set_base_cell(bits, base)

    if _is_pentagon_base(base):
        # Rotate out of the deleted K-axis subsequence first.
        if _first_axe(bits) == 1:
            offsets = BASE_CELL_DATA[base][4]
            cw = offsets is not None and face in offsets
            bits = _rotate60_bits(bits, not cw, 1)
        for _ in range(count):
            bits = _pentagon_rotate60_ccw(bits)
    else:
        bits = _rotate60_bits(bits, True, count)
    return bits


# ---------------------------------------------------------------------------
# cell -> geo.

def _adjust_overage(
    face: int,
    coord: tuple[int, int, int],
    class2_res: int,
    is_pent4: bool,
) -> tuple[bool, int, tuple[int, int, int]]:
    """Move coordinates onto the neighboring face if they overflow this one."""
    i, j, k = coord
    max_dim = _MAX_DIM_BY_CII_RES[class2_res]
    if i + j + k <= max_dim:
        return (False, face, coord)

    if k > 0:
        if j > 0:
            orient = FACE_NEIGHBORS[face][3]  # jk quadrant
        else:
            if is_pent4:
                # Rotate about the pentagon center to skip the deleted axis.
                ri, rj, rk = _rotate60((i - max_dim, j, k), False)
                i, j, k = ri + max_dim, rj, rk
            orient = FACE_NEIGHBORS[face][2]  # ki quadrant
    else:
        orient = FACE_NEIGHBORS[face][1]  # ij quadrant

    nface, ti, tj, tk, ccw_rot60 = orient
    for _ in range(ccw_rot60):
        i, j, k = _rotate60((i, j, k), True)
    scale = _UNIT_SCALE_BY_CII_RES[class2_res]
    return (True, nface, _normalize(i + ti * scale, j + tj * scale, k + tk * scale))


def _hex2d_to_latlng(x: float, y: float, face: int, res: int) -> tuple[float, float]:
    r = math.hypot(x, y)
    if r < _EPSILON:
        return FACE_CENTER_GEO[face]

    r *= _INV_SQRT7_POWERS[res]
    r = math.atan(r * _RES0_U_GNOMONIC)

    theta = math.atan2(y, x)
    if res % 2 == 1:
        theta = _pos_angle(theta + _AP7_ROT_RADS)
    theta = _pos_angle(FACE_AXES_AZ_RADS_CII[face][0] - theta)

    clat, clng = FACE_CENTER_GEO[face]
    return _coord_at(clat, clng, theta, r)


def cell_to_latlng(cell: int) -> tuple[float, float]:
    """Center point of the cell as (lat, lng) in degrees."""
    _check_cell(cell)
    res = cell_resolution(cell)
    base = cell_base(cell)
    pentagon = _is_pentagon_base(base)

    bits = cell
    # The IK subsequence of a pentagon is folded back before traversal.
    if pentagon and _first_axe(bits) == 5:
        bits = _rotate60_bits(bits, False, 1)

    home_face, hi, hj, hk = BASE_CELL_DATA[base][:4]
    face = home_face
    coord = (hi, hj, hk)
    possible_overage = pentagon or res != 0 or coord != (0, 0, 0)

    for r in range(1, res + 1):
        coord = _down_aperture7(coord, r % 2 == 1)
        coord = _neighbor(coord, _get_digit(bits, r))

    if possible_overage:
        original = coord
        if res % 2 == 1:
            # Drop into the finer Class II grid for the overage test.
            coord = _down_aperture7(coord, False)
            class2_res = res + 1
        else:
            class2_res = res

        is_pent4 = pentagon and _first_axe(bits) == 4
        moved, face, coord = _adjust_overage(face, coord, class2_res, is_pent4)
        if moved:
            if pentagon:
                while True:
                    again, face, coord = _adjust_overage(face, coord, class2_res, False)
                    if not again:
                        break
            if class2_res != res:
                coord = _up_aperture7(coord, False)
        elif class2_res != res:
            coord = original

    x, y = _ijk_to_hex2d(coord)
    lat, lng = _hex2d_to_latlng(x, y, face, res)
    return (math.degrees(lat), math.degrees(lng))
