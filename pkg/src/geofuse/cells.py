"""A hierarchical latitude/longitude grid over the sphere.

Level ``l`` splits the sphere into ``2**l`` equal latitude bands and
``2**(l+1)`` equal longitude columns, ``2**(2l+1)`` cells in total; each
cell splits exactly into four children one level down. Cells are half-open
on both axes except the top band, which is closed at +90. Cell edges are
exact binary fractions of 45 degrees, so bounds and centers are exact
floats and point location round-trips without tolerance hacks.

The equirectangular layout trades equal cell area (cells shrink toward the
poles) for adjacency, hierarchy and point location that are exactly
specifiable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from .geo import GeoPoint

MAX_LEVEL = 24


def rows_at(level: int) -> int:
    return 1 << level


def cols_at(level: int) -> int:
    return 1 << (level + 1)


def cell_count(level: int) -> int:
    """Number of cells at a level: rows * cols = 2**(2*level + 1)."""
    return 1 << (2 * level + 1)


def check_level(level: int) -> None:
    if not isinstance(level, int) or not 0 <= level <= MAX_LEVEL:
        raise ValueError(f"level must be an integer in [0, {MAX_LEVEL}], got {level!r}")


@dataclass(frozen=True, order=True)
class CellId:
    """Address of one grid cell: (level, latitude row, longitude column).

    Row 0 is the southernmost band, column 0 starts at longitude -180.
    Ordering is lexicographic on (level, row, col).
    """

    level: int
    row: int
    col: int

    def __post_init__(self) -> None:
        check_level(self.level)
        if not 0 <= self.row < rows_at(self.level):
            raise ValueError(f"row {self.row} outside [0, {rows_at(self.level)}) at level {self.level}")
        if not 0 <= self.col < cols_at(self.level):
            raise ValueError(f"col {self.col} outside [0, {cols_at(self.level)}) at level {self.level}")

    @property
    def token(self) -> str:
        """Serialized text form, e.g. ``L3/5/11``."""
        return f"L{self.level}/{self.row}/{self.col}"

    @classmethod
    def from_token(cls, token: str) -> "CellId":
        if not isinstance(token, str) or not token.startswith("L"):
            raise ValueError(f"bad cell token {token!r}")
        parts = token[1:].split("/")
        if len(parts) != 3:
            raise ValueError(f"bad cell token {token!r}")
        try:
            level, row, col = (int(part) for part in parts)
        except ValueError:
            raise ValueError(f"bad cell token {token!r}") from None
        return cls(level, row, col)


@dataclass(frozen=True)
class CellBounds:
    """Rectangular lat/lng extent of a cell, half-open except at lat +90."""

    lat_min: float
    lat_max: float
    lng_min: float
    lng_max: float

    def contains(self, p: GeoPoint) -> bool:
        lat_ok = self.lat_min <= p.lat < self.lat_max or (self.lat_max == 90.0 and p.lat == 90.0)
        return lat_ok and self.lng_min <= p.lng < self.lng_max


def bounds(c: CellId) -> CellBounds:
    lat_h = 180.0 / rows_at(c.level)
    lng_w = 360.0 / cols_at(c.level)
    return CellBounds(
        lat_min=-90.0 + c.row * lat_h,
        lat_max=-90.0 + (c.row + 1) * lat_h,
        lng_min=-180.0 + c.col * lng_w,
        lng_max=-180.0 + (c.col + 1) * lng_w,
    )


def cell_at(p: GeoPoint, level: int) -> CellId:
    """The cell containing a point; the top row absorbs lat = +90."""
    check_level(level)
    nrows = rows_at(level)
    ncols = cols_at(level)
    row = min(int((p.lat + 90.0) / 180.0 * nrows), nrows - 1)
    col = min(int((p.lng + 180.0) / 360.0 * ncols), ncols - 1)
    return CellId(level, row, col)


def cell_center(c: CellId) -> GeoPoint:
    b = bounds(c)
    return GeoPoint((b.lat_min + b.lat_max) / 2.0, (b.lng_min + b.lng_max) / 2.0)


def neighbors(c: CellId) -> set[CellId]:
    """Edge-sharing neighbors: east/west wrap around, north/south stop at the poles.

    Diagonal (corner-touching) cells are NOT adjacent; this keeps regions
    built from adjacency edge-connected.
    """
    ncols = cols_at(c.level)
    out = {
        CellId(c.level, c.row, (c.col + 1) % ncols),
        CellId(c.level, c.row, (c.col - 1) % ncols),
    }
    if c.row + 1 < rows_at(c.level):
        out.add(CellId(c.level, c.row + 1, c.col))
    if c.row > 0:
        out.add(CellId(c.level, c.row - 1, c.col))
    return out


def children(c: CellId) -> tuple[CellId, CellId, CellId, CellId]:
    """The four cells one level down that exactly tile this cell."""
    if c.level >= MAX_LEVEL:
        raise ValueError(f"cells at level {MAX_LEVEL} have no children")
    lvl = c.level + 1
    return (
        CellId(lvl, 2 * c.row, 2 * c.col),
        CellId(lvl, 2 * c.row, 2 * c.col + 1),
        CellId(lvl, 2 * c.row + 1, 2 * c.col),
        CellId(lvl, 2 * c.row + 1, 2 * c.col + 1),
    )


def parent(c: CellId) -> CellId:
    if c.level == 0:
        raise ValueError("level-0 cells have no parent")
    return CellId(c.level - 1, c.row // 2, c.col // 2)


def all_cells(level: int) -> Iterator[CellId]:
    """Every cell at a level, in (row, col) order."""
    check_level(level)
    for row in range(rows_at(level)):
        for col in range(cols_at(level)):
            yield CellId(level, row, col)
