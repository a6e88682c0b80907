#!/usr/bin/env python3
"""Regenerate hextraj/h3grid/_tables.py from an h3o source checkout.

The canonical H3 lookup tables (icosahedron face geometry, base cell
metadata, face/IJK orientation) are identical across every conforming H3
implementation. We extract them from the h3o Rust crate (MIT/Apache-2.0)
rather than hand-typing 1000+ constants.

Usage:
    python3 tools/extract_h3_tables.py /path/to/h3o-x.y.z > src/hextraj/h3grid/_tables.py
"""
import re
import sys
from pathlib import Path


def parse_center_point(src: str) -> list[tuple[str, str, str]]:
    block = src.split("pub static CENTER_POINT")[1].split("];")[0]
    pat = re.compile(
        r"Vec3d\s*\{x:\s*(-?[\d.e-]+),\s*y:\s*(-?[\d.e-]+),\s*z:\s*(-?[\d.e-]+)\}"
    )
    out = pat.findall(block)
    assert len(out) == 20, len(out)
    return out


def parse_center_geo(src: str) -> list[tuple[str, str]]:
    block = src.split("pub static CENTER_GEO")[1].split("];")[0]
    pat = re.compile(r"LatLng::new_unchecked\(\s*(-?[\d.e-]+),\s*(-?[\d.e-]+)\)")
    out = pat.findall(block)
    assert len(out) == 20, len(out)
    return out


def parse_axes(src: str) -> list[tuple[str, str, str]]:
    block = src.split("pub static AXES_AZ_RADS_CII")[1].split("=", 1)[1].split("];")[0]
    pat = re.compile(r"\[\s*(-?[\d.e-]+),\s*(-?[\d.e-]+),\s*(-?[\d.e-]+)\]")
    out = pat.findall(block)
    assert len(out) == 20, len(out)
    return out


def parse_neighbors(src: str) -> list[list[tuple[int, int, int, int, int]]]:
    block = src.split("pub static NEIGHBORS")[1].split("\n];")[0]
    pat = re.compile(
        r"face_orient_ijk!\((\d+),\s*\((-?\d+),\s*(-?\d+),\s*(-?\d+)\),\s*(\d+)\)"
    )
    flat = [tuple(int(x) for x in m) for m in pat.findall(block)]
    assert len(flat) == 80, len(flat)
    return [flat[i * 4 : (i + 1) * 4] for i in range(20)]


def parse_metadata(src: str) -> list[tuple]:
    block = src.split("const METADATA")[1].split("\n];")[0]
    pat = re.compile(
        r"metadata!\((\d+),\s*\[(\d+),\s*(\d+),\s*(\d+)\](?:,\s*\((\d+),\s*(\d+)\))?\)"
    )
    out = []
    for m in pat.findall(block):
        home, i, j, k = int(m[0]), int(m[1]), int(m[2]), int(m[3])
        offsets = (int(m[4]), int(m[5])) if m[4] else None
        out.append((home, i, j, k, offsets))
    assert len(out) == 122, len(out)
    return out


def parse_base_pentagons(src: str) -> int:
    m = re.search(r"const BASE_PENTAGONS: u128 = (0x[0-9a-fA-F_]+);", src)
    return int(m.group(1).replace("_", ""), 16)


def parse_face_ijk_base_cells(src: str) -> list:
    block = src.split("const FACE_IJK_BASE_CELLS")[1].split("\n];")[0]
    pat = re.compile(r"bcr!\(\s*(\d+),\s*(\d+)\)")
    flat = [(int(a), int(b)) for a, b in pat.findall(block)]
    assert len(flat) == 20 * 27, len(flat)
    # Row-major [face][i][j][k].
    out = []
    idx = 0
    for _ in range(20):
        face = []
        for _ in range(3):
            plane = []
            for _ in range(3):
                plane.append([flat[idx], flat[idx + 1], flat[idx + 2]])
                idx += 3
            face.append(plane)
        out.append(face)
    return out


def main() -> None:
    root = Path(sys.argv[1])
    face_rs = (root / "src" / "face.rs").read_text()
    base_rs = (root / "src" / "base_cell.rs").read_text()
    fijk_rs = (root / "src" / "coord" / "faceijk.rs").read_text()

    cp = parse_center_point(face_rs)
    cg = parse_center_geo(face_rs)
    az = parse_axes(face_rs)
    nb = parse_neighbors(face_rs)
    md = parse_metadata(base_rs)
    pent = parse_base_pentagons(base_rs)
    fibc = parse_face_ijk_base_cells(fijk_rs)

    w = sys.stdout.write
    w('"""Canonical H3 lookup tables (generated, do not edit).\n\n')
    w("Icosahedron face geometry and base-cell constants shared by every\n")
    w("conforming H3 implementation. Regenerate with\n")
    w("tools/extract_h3_tables.py from an h3o source tree.\n")
    w('"""\n\n')

    w("# Unit-sphere 3D center point of each icosahedron face.\n")
    w("FACE_CENTER_XYZ = (\n")
    for x, y, z in cp:
        w(f"    ({x}, {y}, {z}),\n")
    w(")\n\n")

    w("# Face center as (lat, lng) in radians.\n")
    w("FACE_CENTER_GEO = (\n")
    for lat, lng in cg:
        w(f"    ({lat}, {lng}),\n")
    w(")\n\n")

    w("# Azimuth (radians) from each face center to each of its Class II\n")
    w("# i/j/k axes; only the i-axis entry is used for indexing.\n")
    w("FACE_AXES_AZ_RADS_CII = (\n")
    for a, b, c in az:
        w(f"    ({a}, {b}, {c}),\n")
    w(")\n\n")

    w("# Face neighbor orientation: [face][quadrant] -> (face, ti, tj, tk,\n")
    w("# ccw_rot60) with quadrants 0=central, 1=IJ, 2=KI, 3=JK.\n")
    w("FACE_NEIGHBORS = (\n")
    for row in nb:
        w("    (")
        w(", ".join(repr(t) for t in row))
        w("),\n")
    w(")\n\n")

    w("# Base cell -> (home face, i, j, k, cw offset faces or None).\n")
    w("BASE_CELL_DATA = (\n")
    for home, i, j, k, off in md:
        w(f"    ({home}, {i}, {j}, {k}, {off!r}),\n")
    w(")\n\n")

    w("# Bitmap over base cells 0..121; bit set means pentagon.\n")
    w(f"BASE_PENTAGONS = {hex(pent)}\n\n")

    w("# [face][i][j][k] -> (base cell, ccw 60-degree rotations) for\n")
    w("# coordinates in {0,1,2}^3 on that face.\n")
    w("FACE_IJK_BASE_CELLS = (\n")
    for face in fibc:
        w("    (\n")
        for plane in face:
            w("        (")
            w(", ".join(repr(tuple(cell)) for cell in plane))
            w("),\n")
        w("    ),\n")
    w(")\n")


if __name__ == "__main__":
    main()
