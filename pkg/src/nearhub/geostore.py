"""Spatial index of current user fixes and static POIs.

A geohash grid (default precision 6, cells roughly 1.2 km x 0.6 km) buckets
both user presence records and points of interest. Radius queries scan the
covering cell set of the query disk; k-nearest-neighbor queries expand
rings of cells outward from the center. Both fall back to a full scan when
the cell arithmetic would touch more buckets than the store holds, so
results are always exactly the brute-force answer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, NamedTuple

from . import geohash
from .errors import RadiusOutOfRange, StaleUpdate
from .geomath import EARTH_RADIUS_M, GeoPoint, circle_bbox, haversine
from .localization import Fix, fix_from_dict, fix_to_dict

MAX_QUERY_RADIUS_M = 50_000.0

_METERS_PER_DEG = EARTH_RADIUS_M * math.pi / 180.0


class PoiCategory(str, Enum):
    RESTAURANT = "Restaurant"
    HOSPITAL = "Hospital"
    BANK = "Bank"
    OTHER = "Other"


@dataclass(frozen=True)
class Poi:
    poi_id: str
    name: str
    category: PoiCategory
    position: GeoPoint

    def __post_init__(self):
        object.__setattr__(self, "category", PoiCategory(self.category))


@dataclass(frozen=True)
class PresenceRecord:
    user_id: str
    fix: Fix
    online: bool
    updated_at: int


class QueryHit(NamedTuple):
    record: PresenceRecord
    distance_m: float


class PoiHit(NamedTuple):
    poi: Poi
    distance_m: float


class SpatialStore:
    """Geohash-bucketed index of presence records and POIs."""

    def __init__(self, precision: int = 6):
        if not 1 <= precision <= 12:
            raise ValueError("precision must be in [1, 12]")
        self.precision = precision
        self._records: dict[str, PresenceRecord] = {}
        self._user_cells: dict[str, set[str]] = {}
        self._pois: dict[str, Poi] = {}
        self._poi_cells: dict[str, set[str]] = {}

    # -- presence records ---------------------------------------------------

    def __len__(self) -> int:
        return len(self._records)

    def get(self, user_id: str) -> PresenceRecord | None:
        return self._records.get(user_id)

    def records(self) -> Iterable[PresenceRecord]:
        return self._records.values()

    def upsert_position(self, user_id: str, fix: Fix) -> Fix | None:
        """Replace a user's record; rejects timestamps older than stored."""
        prev = self._records.get(user_id)
        if prev is not None and fix.timestamp < prev.updated_at:
            raise StaleUpdate(
                f"fix timestamp {fix.timestamp} older than stored {prev.updated_at}"
            )
        new_cell = self._cell(fix.position)
        if prev is not None:
            old_cell = self._cell(prev.fix.position)
            if old_cell != new_cell:
                self._remove_member(self._user_cells, old_cell, user_id)
        self._user_cells.setdefault(new_cell, set()).add(user_id)
        self._records[user_id] = PresenceRecord(
            user_id=user_id,
            fix=fix,
            online=prev.online if prev is not None else False,
            updated_at=fix.timestamp,
        )
        return prev.fix if prev is not None else None

    def remove_user(self, user_id: str) -> bool:
        prev = self._records.pop(user_id, None)
        if prev is None:
            return False
        self._remove_member(self._user_cells, self._cell(prev.fix.position), user_id)
        return True

    def set_online(self, user_id: str, online: bool) -> bool:
        prev = self._records.get(user_id)
        if prev is None:
            return False
        self._records[user_id] = replace(prev, online=online)
        return True

    def query_radius(
        self, center: GeoPoint, radius_m: float, online_only: bool = False
    ) -> list[QueryHit]:
        """Records within the closed ball, sorted by (distance, user_id)."""
        self._check_radius(radius_m)
        hits = [
            QueryHit(self._records[uid], d)
            for uid, d in self._radius_hits(self._user_cells, center, radius_m)
            if not online_only or self._records[uid].online
        ]
        hits.sort(key=lambda h: (h.distance_m, h.record.user_id))
        return hits

    def query_knn(self, center: GeoPoint, k: int) -> list[QueryHit]:
        """The k records nearest to center (fewer if the store is smaller).

        Expanding search: the covering-cell disk is doubled until it holds
        k records (or the whole store), which makes the k nearest provably
        inside the scanned cells.
        """
        if k < 1:
            raise ValueError("k must be >= 1")
        if not self._records:
            return []
        _, lat_h = geohash.cell_dims_deg(self.precision)
        radius = lat_h * _METERS_PER_DEG
        need = min(k, len(self._records))
        while True:
            hits = self._radius_hits(self._user_cells, center, radius)
            if len(hits) >= need:
                hits.sort(key=lambda h: (h[1], h[0]))
                return [
                    QueryHit(self._records[uid], d) for uid, d in hits[:k]
                ]
            radius *= 2.0

    # -- POIs ---------------------------------------------------------------

    def add_poi(self, poi: Poi) -> None:
        if poi.poi_id in self._pois:
            raise ValueError(f"duplicate poi_id {poi.poi_id!r}")
        self._pois[poi.poi_id] = poi
        self._poi_cells.setdefault(self._cell(poi.position), set()).add(poi.poi_id)

    def load_poi_file(self, path) -> int:
        """Seed POIs from a UTF-8 TSV: poi_id, name, category, lat, lon."""
        count = 0
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 5:
                    raise ValueError(f"{path}:{line_no}: expected 5 tab-separated fields")
                poi_id, name, category, lat, lon = parts
                self.add_poi(
                    Poi(poi_id, name, PoiCategory(category), GeoPoint(float(lat), float(lon)))
                )
                count += 1
        return count

    def search_poi(
        self,
        center: GeoPoint,
        radius_m: float,
        category: PoiCategory | None = None,
        name: str | None = None,
    ) -> list[PoiHit]:
        """POIs within radius matching the category and/or name substring
        (case-insensitive), sorted by (distance, poi_id)."""
        self._check_radius(radius_m)
        needle = name.casefold() if name else None
        hits = []
        for poi_id, d in self._radius_hits(self._poi_cells, center, radius_m, self._pois):
            poi = self._pois[poi_id]
            if category is not None and poi.category != PoiCategory(category):
                continue
            if needle is not None and needle not in poi.name.casefold():
                continue
            hits.append(PoiHit(poi, d))
        hits.sort(key=lambda h: (h.distance_m, h.poi.poi_id))
        return hits

    # -- integrity ----------------------------------------------------------

    def audit(self) -> None:
        """Verify the cell maps exactly mirror the records (test builds call
        this after every mutation)."""
        seen: set[str] = set()
        for cell, members in self._user_cells.items():
            if not members:
                raise AssertionError(f"empty bucket {cell}")
            for uid in members:
                if uid in seen:
                    raise AssertionError(f"user {uid} appears in two cells")
                seen.add(uid)
                rec = self._records.get(uid)
                if rec is None:
                    raise AssertionError(f"bucket member {uid} has no record")
                if self._cell(rec.fix.position) != cell:
                    raise AssertionError(f"user {uid} bucketed in wrong cell")
        if seen != set(self._records):
            raise AssertionError("records missing from cell index")

    # -- persistence --------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "records": {
                uid: {
                    "fix": fix_to_dict(rec.fix),
                    "online": rec.online,
                    "updated_at": rec.updated_at,
                }
                for uid, rec in self._records.items()
            },
        }

    def load_dict(self, data: dict) -> None:
        self.precision = int(data["precision"])
        self._records.clear()
        self._user_cells.clear()
        for uid, rec in data["records"].items():
            fix = fix_from_dict(rec["fix"])
            self._records[uid] = PresenceRecord(
                user_id=uid,
                fix=fix,
                online=bool(rec["online"]),
                updated_at=int(rec["updated_at"]),
            )
            self._user_cells.setdefault(self._cell(fix.position), set()).add(uid)

    # -- internals ----------------------------------------------------------

    def _cell(self, p: GeoPoint) -> str:
        return geohash.encode(p.lat, p.lon, self.precision)

    @staticmethod
    def _remove_member(cells: dict[str, set[str]], cell: str, member: str) -> None:
        bucket = cells.get(cell)
        if bucket is not None:
            bucket.discard(member)
            if not bucket:
                del cells[cell]

    @staticmethod
    def _check_radius(radius_m: float) -> None:
        if not (0 < radius_m <= MAX_QUERY_RADIUS_M):
            raise RadiusOutOfRange(
                f"radius must be in (0, {MAX_QUERY_RADIUS_M:.0f}] m, got {radius_m}"
            )

    def _radius_hits(
        self,
        cells: dict[str, set[str]],
        center: GeoPoint,
        radius_m: float,
        objects: dict | None = None,
    ) -> list[tuple[str, float]]:
        """(id, distance) of every bucket member within the closed ball.

        Scans the covering cell set of the disk; when that set would be
        larger than the store itself, scans every bucket instead (cheaper
        and trivially complete).
        """
        if objects is None:
            objects = self._records
        get_pos = (
            (lambda obj: obj.fix.position)
            if objects is self._records
            else (lambda obj: obj.position)
        )
        capped = min(radius_m, math.pi * EARTH_RADIUS_M)
        box = circle_bbox(center, capped)
        cover = geohash.covering_cells(
            box.south, box.west, box.north, box.east,
            self.precision, max_cells=max(1024, 2 * len(cells)),
        )
        if cover is None:
            candidates: set[str] = set()
            for members in cells.values():
                candidates.update(members)
        else:
            candidates = set()
            for cell in cover:
                members = cells.get(cell)
                if members:
                    candidates.update(members)
        return [
            (oid, d)
            for oid in candidates
            if (d := haversine(center, get_pos(objects[oid]))) <= radius_m
        ]
