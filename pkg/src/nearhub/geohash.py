"""Base-32 geohash cells used for spatial bucketing.

Cells are addressed two ways: as the usual base-32 string and as integer
(col, row) grid indices at a fixed precision. The index form makes ring
expansion and box covers cheap; the string form is the bucket key.
Boundary convention: a coordinate exactly on a cell edge belongs to the
cell above/east of the edge (floor indexing).
"""
from __future__ import annotations

import math

BASE32 = "0123456789bcdefghjkmnpqrstuvwxyz"
_CHAR_INDEX = {c: i for i, c in enumerate(BASE32)}

# Lookup tables: spread a byte's bits to even positions, and turn 10-bit
# chunks into character pairs. Cell addressing is hot (covering sets touch
# thousands of cells per query), so the bit work is table-driven.
_SPREAD8 = [0] * 256
for _v in range(256):
    _s = 0
    for _b in range(8):
        _s |= ((_v >> _b) & 1) << (2 * _b)
    _SPREAD8[_v] = _s
_PAIR1024 = [BASE32[_v >> 5] + BASE32[_v & 31] for _v in range(1024)]


def _spread(value: int) -> int:
    """Bit k of value moves to bit 2k (supports up to 30-bit inputs)."""
    return (_SPREAD8[value & 255]
            | (_SPREAD8[(value >> 8) & 255] << 16)
            | (_SPREAD8[(value >> 16) & 255] << 32))


def _bit_split(precision: int) -> tuple[int, int]:
    total = 5 * precision
    lon_bits = (total + 1) // 2
    return lon_bits, total - lon_bits


def grid_size(precision: int) -> tuple[int, int]:
    """(columns, rows) of the cell grid at this precision."""
    lon_bits, lat_bits = _bit_split(precision)
    return 1 << lon_bits, 1 << lat_bits


def cell_dims_deg(precision: int) -> tuple[float, float]:
    """(lon width, lat height) of one cell in degrees."""
    cols, rows = grid_size(precision)
    return 360.0 / cols, 180.0 / rows


def indices_for(lat: float, lon: float, precision: int) -> tuple[int, int]:
    cols, rows = grid_size(precision)
    if lon >= 180.0:
        lon -= 360.0
    col = min(int((lon + 180.0) / 360.0 * cols), cols - 1)
    row = min(int((lat + 90.0) / 180.0 * rows), rows - 1)
    return max(col, 0), max(row, 0)


def cell_at(col: int, row: int, precision: int) -> str:
    """Base-32 cell string for grid indices (lon bits first, interleaved)."""
    total = 5 * precision
    # The longitude bit stream starts at the MSB; whether that lands on an
    # even or odd bit position (counted from the LSB) depends on parity.
    if total % 2 == 0:
        value = (_spread(col) << 1) | _spread(row)
    else:
        value = _spread(col) | (_spread(row) << 1)
    if precision % 2:
        out = [BASE32[(value >> (total - 5)) & 31]]
        shift = total - 15
    else:
        out = []
        shift = total - 10
    while shift >= 0:
        out.append(_PAIR1024[(value >> shift) & 1023])
        shift -= 10
    return "".join(out)


def encode(lat: float, lon: float, precision: int) -> str:
    """Cell containing the coordinate."""
    col, row = indices_for(lat, lon, precision)
    return cell_at(col, row, precision)


def indices_of(cell: str) -> tuple[int, int]:
    precision = len(cell)
    value = 0
    for ch in cell:
        value = (value << 5) | _CHAR_INDEX[ch]
    col = row = 0
    for i in range(5 * precision):
        bit = (value >> (5 * precision - 1 - i)) & 1
        if i % 2 == 0:
            col = (col << 1) | bit
        else:
            row = (row << 1) | bit
    return col, row


def cell_bounds(cell: str) -> tuple[float, float, float, float]:
    """(south, west, north, east) bounds of a cell in degrees."""
    precision = len(cell)
    col, row = indices_of(cell)
    lon_w, lat_h = cell_dims_deg(precision)
    west = -180.0 + col * lon_w
    south = -90.0 + row * lat_h
    return south, west, south + lat_h, west + lon_w


def _col_range(west: float, east: float, wraps: bool, precision: int) -> list[int]:
    cols, _ = grid_size(precision)
    c_west, _ = indices_for(0.0, west, precision)
    c_east, _ = indices_for(0.0, east, precision)
    if wraps:
        return list(range(c_west, cols)) + list(range(0, c_east + 1))
    return list(range(c_west, c_east + 1))


def covering_cells(
    south: float,
    west: float,
    north: float,
    east: float,
    precision: int,
    max_cells: int,
) -> list[str] | None:
    """All cells intersecting the box, or None when that exceeds max_cells.

    west > east means the box wraps the antimeridian.
    """
    _, rows = grid_size(precision)
    _, r_south = indices_for(south, 0.0, precision)
    _, r_north = indices_for(north, 0.0, precision)
    wraps = west > east
    cols_needed = _estimate_cols(west, east, wraps, precision)
    if (r_north - r_south + 1) * cols_needed > max_cells:
        return None
    col_list = _col_range(west, east, wraps, precision)
    return [
        cell_at(col, row, precision)
        for row in range(r_south, r_north + 1)
        for col in col_list
    ]


def _estimate_cols(west: float, east: float, wraps: bool, precision: int) -> int:
    cols, _ = grid_size(precision)
    span = (east - west) if not wraps else (360.0 - (west - east))
    lon_w, _ = cell_dims_deg(precision)
    return min(cols, int(math.ceil(span / lon_w)) + 1)
