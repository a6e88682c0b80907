"""Cell identifier codec: 64-bit cells, hex text, and pseudo-octal text.

The pseudo-octal form is 17 characters: two lowercase hex characters for
the 7-bit base cell, then the 15 resolution digits as octal characters.
It drops the 12 header bits entirely, which is safe because every cell
this package produces is resolution 10 in cell mode, so the header is a
constant and is reassembled on decode.

geo <-> cell conversion delegates to the conforming H3 core in
hextraj.h3grid; the codec itself is a pure bit transform.
"""

from __future__ import annotations

from . import h3grid
from .geo_core import GeoPoint
from .h3grid import InvalidCellError as MalformedCellError

__all__ = [
    "MalformedCellError",
    "PseudoOctalParseError",
    "BaseCellRangeError",
    "geo_to_cell",
    "cell_to_geo",
    "to_pseudo_octal",
    "from_pseudo_octal",
    "cell_to_hex",
    "hex_to_cell",
]

_HEX_CHARS = frozenset("0123456789abcdef")
_OCTAL_CHARS = frozenset("01234567")


class PseudoOctalParseError(ValueError):
    """Input string is not 2 lowercase hex chars + 15 octal chars."""


class BaseCellRangeError(ValueError):
    """Parsed base cell is outside [0, 121]."""


def geo_to_cell(p: GeoPoint, res: int = 10) -> int:
    """Cell containing the point at the given resolution."""
    return h3grid.latlng_to_cell(p[0], p[1], res)


def cell_to_geo(c: int) -> GeoPoint:
    """Center point of a valid cell."""
    lat, lon = h3grid.cell_to_latlng(c)
    return GeoPoint(lat, lon)


def to_pseudo_octal(c: int) -> str:
    """Render a cell-mode identifier as 17 pseudo-octal characters."""
    if (c >> 59) & 0xF != 1 or c < 0 or c >> 64:
        raise MalformedCellError(f"not a cell-mode identifier: {c:#x}")
    base = (c >> 45) & 0x7F
    digits = "".join(str((c >> u) & 7) for u in range(42, -1, -3))
    return format(base, "02x") + digits


def from_pseudo_octal(s: str, res: int = 10) -> int:
    """Rebuild the 64-bit identifier from its pseudo-octal rendering."""
    if len(s) != 17:
        raise PseudoOctalParseError(f"expected 17 characters, got {len(s)}")
    if not (set(s[:2]) <= _HEX_CHARS):
        raise PseudoOctalParseError(f"base cell chars must be lowercase hex: {s[:2]!r}")
    if not (set(s[2:]) <= _OCTAL_CHARS):
        raise PseudoOctalParseError(f"digit chars must be octal: {s[2:]!r}")
    base = int(s[:2], 16)
    if base > 121:
        raise BaseCellRangeError(f"base cell {base} outside [0, 121]")
    # Header: reserved 0, mode 1, reserved 000, resolution, then base cell.
    value = ((1 << 7) | res) << 7 | base
    for ch in s[2:]:
        value = (value << 3) | int(ch)
    return value


def cell_to_hex(c: int) -> str:
    """Canonical lowercase hex text (leading zeros of the word dropped)."""
    if not h3grid.is_valid_cell(c):
        raise MalformedCellError(f"not a valid cell identifier: {c:#x}")
    return format(c, "x")


def hex_to_cell(s: str) -> int:
    """Parse canonical hex text into a validated cell identifier."""
    try:
        c = int(s, 16)
    except ValueError:
        raise MalformedCellError(f"not hexadecimal: {s!r}") from None
    if not h3grid.is_valid_cell(c):
        raise MalformedCellError(f"not a valid cell identifier: {s!r}")
    return c
