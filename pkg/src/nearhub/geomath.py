"""Pure spherical geodesy: WGS84 points, great-circle distance, bounding
boxes, and a local tangent-plane (ENU) projection used by the position
solvers.

Earth is modeled as a sphere of radius R = 6 371 000 m. At the neighborhood
scales this package cares about (tens of meters of target accuracy), the
ellipsoidal correction is far below the positioning noise floor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import OutOfProjectionRange

EARTH_RADIUS_M = 6_371_000.0

# Hard range limit of the tangent-plane projection. Past this the small-angle
# assumptions start to matter and callers get an explicit error instead of
# silently degraded coordinates.
MAX_PROJECTION_RANGE_M = 100_000.0

_DEG = math.pi / 180.0


def normalize_lon(lon: float) -> float:
    """Map a longitude in degrees onto the half-open interval (-180, 180]."""
    if -180.0 < lon <= 180.0:
        return lon
    lon = math.fmod(lon + 180.0, 360.0)
    if lon < 0:
        lon += 360.0
    lon -= 180.0
    return 180.0 if lon == -180.0 else lon


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position. lat in [-90, 90], lon normalized to (-180, 180]."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise ValueError("latitude/longitude must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        object.__setattr__(self, "lon", normalize_lon(self.lon))


@dataclass(frozen=True)
class EnuPoint:
    """Planar east/north offsets in meters from a declared origin GeoPoint."""

    east: float
    north: float

    def __post_init__(self):
        if not (math.isfinite(self.east) and math.isfinite(self.north)):
            raise ValueError("ENU coordinates must be finite")

    def norm(self) -> float:
        return math.hypot(self.east, self.north)


@dataclass(frozen=True)
class BoundingBox:
    """Degree-aligned box. May wrap the antimeridian, in which case
    west > east and ``wraps`` is true."""

    south: float
    west: float
    north: float
    east: float

    def __post_init__(self):
        if self.south > self.north:
            raise ValueError("south must not exceed north")

    @property
    def wraps(self) -> bool:
        return self.west > self.east

    def contains(self, p: GeoPoint) -> bool:
        if not self.south <= p.lat <= self.north:
            return False
        if self.wraps:
            return p.lon >= self.west or p.lon <= self.east
        return self.west <= p.lon <= self.east


def haversine(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    phi1 = a.lat * _DEG
    phi2 = b.lat * _DEG
    dphi = (b.lat - a.lat) * _DEG
    dlam = (b.lon - a.lon) * _DEG
    s = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    s = min(1.0, max(0.0, s))
    return 2.0 * EARTH_RADIUS_M * math.asin(math.sqrt(s))


# Relative disagreement between the planar norm and the great-circle
# distance beyond which a projection result is refused rather than returned.
_PROJECTION_TOLERANCE = 1e-3


def to_enu(origin: GeoPoint, p: GeoPoint) -> EnuPoint:
    """Project ``p`` onto the tangent plane at ``origin``.

    Equirectangular projection scaled at the mid-latitude of the segment,
    which keeps the planar norm within 0.1% of the great-circle distance
    over the full <100 km working range. Exactly invertible by from_enu.
    Segments that straddle a pole cannot meet that bound and raise
    OutOfProjectionRange instead of returning degraded coordinates.
    """
    d = haversine(origin, p)
    if d >= MAX_PROJECTION_RANGE_M:
        raise OutOfProjectionRange(
            f"{d:.0f} m from origin exceeds {MAX_PROJECTION_RANGE_M:.0f} m"
        )
    dlat = (p.lat - origin.lat) * _DEG
    dlon_deg = normalize_lon(p.lon - origin.lon)
    scale = math.cos(origin.lat * _DEG + dlat / 2.0)
    if abs(scale) < 1e-9:
        raise OutOfProjectionRange("projection degenerate this close to a pole")
    enu = EnuPoint(east=EARTH_RADIUS_M * dlon_deg * _DEG * scale,
                   north=EARTH_RADIUS_M * dlat)
    if d > 0 and abs(enu.norm() - d) > _PROJECTION_TOLERANCE * d:
        raise OutOfProjectionRange("projection error exceeds tolerance (near-pole segment)")
    return enu


def from_enu(origin: GeoPoint, e: EnuPoint) -> GeoPoint:
    """Inverse of to_enu for the same origin."""
    if e.norm() >= MAX_PROJECTION_RANGE_M:
        raise OutOfProjectionRange(
            f"{e.norm():.0f} m from origin exceeds {MAX_PROJECTION_RANGE_M:.0f} m"
        )
    dlat = e.north / EARTH_RADIUS_M
    scale = math.cos(origin.lat * _DEG + dlat / 2.0)
    if abs(scale) < 1e-9:
        raise OutOfProjectionRange("projection degenerate this close to a pole")
    dlon = e.east / (EARTH_RADIUS_M * scale)
    return GeoPoint(lat=origin.lat + dlat / _DEG, lon=origin.lon + dlon / _DEG)


def circle_bbox(center: GeoPoint, radius_m: float) -> BoundingBox:
    """Smallest lat/lon box containing the great-circle disk around center.

    Clamps at the poles; when the disk contains a pole every longitude is
    inside, so the box spans the full longitude range.
    """
    if radius_m <= 0:
        raise ValueError("radius must be positive")
    ang = radius_m / EARTH_RADIUS_M
    dlat = ang / _DEG
    north = center.lat + dlat
    south = center.lat - dlat
    if north >= 90.0 or south <= -90.0:
        return BoundingBox(south=max(-90.0, south), west=-180.0,
                           north=min(90.0, north), east=180.0)
    # asin argument is safe: the pole-inclusion case was handled above.
    dlon = math.degrees(math.asin(min(1.0, math.sin(ang) / math.cos(center.lat * _DEG))))
    west = normalize_lon(center.lon - dlon)
    east = normalize_lon(center.lon + dlon)
    if dlon >= 180.0:
        west, east = -180.0, 180.0
    return BoundingBox(south=south, west=west, north=north, east=east)
