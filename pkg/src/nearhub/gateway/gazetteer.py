"""City name <-> coordinate lookups.

Queries take the "City, Country" form (exactly one comma); matching is
case-insensitive and whitespace-tolerant. Reverse lookup returns the
nearest known city centroid within a cutoff, used to scope news, weather,
and the forum to wherever the user currently is.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..errors import MalformedQuery, UnknownCity
from ..geomath import GeoPoint, haversine


@dataclass(frozen=True)
class GazetteerEntry:
    city: str
    country: str
    centroid: GeoPoint

    @property
    def display(self) -> str:
        return f"{self.city}, {self.country}"


class Gazetteer:
    def __init__(self, entries: list[GazetteerEntry] | None = None):
        self._entries: dict[tuple[str, str], GazetteerEntry] = {}
        for entry in entries or []:
            self.add(entry)

    def add(self, entry: GazetteerEntry) -> None:
        key = (entry.city.casefold(), entry.country.casefold())
        if key in self._entries:
            raise ValueError(f"duplicate gazetteer entry {entry.display!r}")
        self._entries[key] = entry

    @classmethod
    def from_file(cls, path: str | Path) -> "Gazetteer":
        """UTF-8 TSV: city, country, lat, lon."""
        gaz = cls()
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 4:
                    raise ValueError(f"{path}:{line_no}: expected 4 tab-separated fields")
                city, country, lat, lon = parts
                gaz.add(GazetteerEntry(city, country, GeoPoint(float(lat), float(lon))))
        return gaz

    def __len__(self) -> int:
        return len(self._entries)

    def entries(self) -> list[GazetteerEntry]:
        return sorted(self._entries.values(), key=lambda e: (e.country, e.city))

    def geocode(self, query: str) -> GazetteerEntry:
        """Resolve "City, Country" to its entry."""
        parts = query.split(",")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise MalformedQuery(
                'expected "City, Country" with exactly one comma'
            )
        key = (parts[0].strip().casefold(), parts[1].strip().casefold())
        entry = self._entries.get(key)
        if entry is None:
            raise UnknownCity(f"no gazetteer entry for {query.strip()!r}")
        return entry

    def reverse(self, point: GeoPoint, max_km: float = 100.0) -> GazetteerEntry | None:
        """Nearest city centroid within max_km, or None."""
        best = None
        best_d = max_km * 1000.0
        for entry in self._entries.values():
            d = haversine(point, entry.centroid)
            if d <= best_d:
                best, best_d = entry, d
        return best
