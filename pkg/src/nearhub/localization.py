"""Position fixes from beacon measurements.

Three estimator families, matching how phones actually get located:

* range trilateration (GPS-style pseudoranges to known anchors),
* TDOA multilateration (arrival-time differences against a reference
  tower, hyperbolic geometry),
* single-beacon proximity (cell/short-range radio: the beacon position
  with its coverage radius as the accuracy).

The nonlinear solvers run in a local ENU frame centered at the beacon
centroid and use damped Gauss-Newton (Levenberg damping). Every fix
carries an accuracy radius derived from the residuals and the anchor
geometry, never below the floor of the radio technology involved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    AmbiguousSolution,
    DegenerateGeometry,
    EmptyInput,
    InsufficientBeacons,
    NoConvergence,
    OutOfProjectionRange,
)
from .geomath import EnuPoint, GeoPoint, from_enu, normalize_lon, to_enu

SPEED_OF_LIGHT_M_S = 299_792_458.0


class BeaconKind(str, Enum):
    GPS_PSEUDO = "GpsPseudo"
    CELL_TOWER = "CellTower"
    WIFI_AP = "WifiAp"
    BLUETOOTH_NODE = "BluetoothNode"


class FixMethod(str, Enum):
    TRILATERATION = "Trilateration"
    TDOA = "Tdoa"
    PROXIMITY = "Proximity"


# Technology floors for the reported accuracy radius, in meters. Solver
# output below these values claims more precision than the radio layer
# can deliver, so accuracy is clamped up to the floor.
ACCURACY_FLOORS_M = {
    BeaconKind.GPS_PSEUDO: 10.0,
    BeaconKind.WIFI_AP: 30.0,
    BeaconKind.CELL_TOWER: 500.0,
    BeaconKind.BLUETOOTH_NODE: 5.0,
}

# Beacons closer than this are treated as the same anchor.
_DISTINCT_EPS_M = 1e-3
# Beacons within this distance of their common best-fit line are degenerate
# (mirror-solution ambiguity).
_COLLINEARITY_TOL_M = 1.0

_GN_STEP_TOL_M = 1e-8
_GN_MAX_ITER = 100
_LAMBDA_START = 1e-3


@dataclass(frozen=True)
class Beacon:
    """A transmitter at a known position."""

    id: str
    position: GeoPoint
    kind: BeaconKind
    range_radius: float = 1000.0

    def __post_init__(self):
        object.__setattr__(self, "kind", BeaconKind(self.kind))
        if not (math.isfinite(self.range_radius) and self.range_radius > 0):
            raise ValueError("range_radius must be positive and finite")


@dataclass(frozen=True)
class RangeMeasurement:
    """Measured distance to one beacon with its noise scale."""

    beacon: Beacon
    range: float
    sigma: float

    def __post_init__(self):
        if not (math.isfinite(self.range) and self.range >= 0):
            raise ValueError("range must be finite and non-negative")
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError("sigma must be positive")


@dataclass(frozen=True)
class TdoaMeasurement:
    """Arrival-time difference of one beacon relative to the shared
    reference beacon (beacon minus reference), in seconds."""

    reference: Beacon
    beacon: Beacon
    delta_t: float
    sigma_t: float

    def __post_init__(self):
        if not math.isfinite(self.delta_t):
            raise ValueError("delta_t must be finite")
        if not (math.isfinite(self.sigma_t) and self.sigma_t > 0):
            raise ValueError("sigma_t must be positive")
        from .geomath import haversine

        baseline = haversine(self.reference.position, self.beacon.position)
        tolerance = 5.0 * SPEED_OF_LIGHT_M_S * self.sigma_t + 1.0
        if abs(self.delta_t) * SPEED_OF_LIGHT_M_S > baseline + tolerance:
            raise ValueError(
                "physically infeasible delta_t: range difference exceeds baseline"
            )


@dataclass(frozen=True)
class Fix:
    """A single position estimate with its quality metadata."""

    position: GeoPoint
    accuracy: float
    method: FixMethod
    residual_rms: float
    timestamp: int

    def __post_init__(self):
        object.__setattr__(self, "method", FixMethod(self.method))
        if self.residual_rms < 0:
            raise ValueError("residual_rms must be non-negative")


def fix_to_dict(fix: Fix) -> dict:
    return {
        "lat": fix.position.lat,
        "lon": fix.position.lon,
        "accuracy": fix.accuracy,
        "method": fix.method.value,
        "residual_rms": fix.residual_rms,
        "timestamp": fix.timestamp,
    }


def fix_from_dict(d: dict) -> Fix:
    return Fix(
        position=GeoPoint(d["lat"], d["lon"]),
        accuracy=float(d["accuracy"]),
        method=FixMethod(d["method"]),
        residual_rms=float(d["residual_rms"]),
        timestamp=int(d["timestamp"]),
    )


def _beacon_frame(positions: list[GeoPoint]) -> tuple[GeoPoint, np.ndarray]:
    """ENU frame at the beacon centroid; returns (origin, (n,2) coords)."""
    lat0 = sum(p.lat for p in positions) / len(positions)
    anchor = positions[0].lon
    lon0 = anchor + sum(normalize_lon(p.lon - anchor) for p in positions) / len(positions)
    origin = GeoPoint(lat0, lon0)
    coords = np.array(
        [(e.east, e.north) for e in (to_enu(origin, p) for p in positions)],
        dtype=float,
    )
    return origin, coords


def _check_geometry(coords: np.ndarray) -> None:
    n = len(coords)
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(coords[i] - coords[j])) < _DISTINCT_EPS_M:
                raise DegenerateGeometry("beacon positions are not pairwise distinct")
    centered = coords - coords.mean(axis=0)
    # Perpendicular spread off the principal axis measures collinearity.
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    perp = centered @ vt[-1]
    if np.max(np.abs(perp)) <= _COLLINEARITY_TOL_M:
        raise DegenerateGeometry("beacons are collinear within tolerance")


def _damped_gauss_newton(fun, p0: np.ndarray) -> tuple[np.ndarray, float, bool]:
    """Levenberg-damped Gauss-Newton on a 2D residual model.

    ``fun(p) -> (residuals, jacobian)``. Damping starts at 1e-3, grows x10
    when a step would increase the cost and shrinks /10 on acceptance.
    Converged when the proposed step is shorter than 1e-8 m, or when two
    accepted steps in a row improve the cost by less than 1e-8 relative:
    large-residual instances can zigzag across the valley floor with slowly
    shrinking steps, and that stationarity test ends them at the minimum
    instead of burning the iteration cap.
    """
    p = np.asarray(p0, dtype=float).copy()
    lam = _LAMBDA_START
    r, jac = fun(p)
    cost = float(r @ r)
    stalled = 0
    for _ in range(_GN_MAX_ITER):
        grad = jac.T @ r
        hess = jac.T @ jac + lam * np.eye(2)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            lam = min(lam * 10.0, 1e12)
            continue
        if float(np.hypot(*step)) < _GN_STEP_TOL_M:
            return p, cost, True
        r_new, jac_new = fun(p + step)
        cost_new = float(r_new @ r_new)
        if cost_new < cost:
            stalled = stalled + 1 if cost - cost_new <= 1e-8 * max(cost, 1e-30) else 0
            p = p + step
            r, jac, cost = r_new, jac_new, cost_new
            lam = max(lam / 10.0, 1e-12)
            if stalled >= 2:
                return p, cost, True
        else:
            lam = min(lam * 10.0, 1e12)
    return p, cost, False


def _grid_seeds(coords: np.ndarray) -> list[np.ndarray]:
    """3x3 grid of starting points over the beacon bounding box."""
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    xs = np.linspace(lo[0], hi[0], 3)
    ys = np.linspace(lo[1], hi[1], 3)
    return [np.array([x, y]) for x in xs for y in ys]


def _gdop(j_geo: np.ndarray) -> float:
    """sqrt(trace((J^T J)^-1)) of the unweighted geometry Jacobian."""
    m = j_geo.T @ j_geo
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        inv = np.linalg.pinv(m)
    tr = float(np.trace(inv))
    return math.sqrt(tr) if tr > 0 else float("inf")


def _accuracy_floor(kinds) -> float:
    return min(ACCURACY_FLOORS_M[BeaconKind(k)] for k in kinds)


def trilaterate(measurements: list[RangeMeasurement], timestamp: int = 0) -> Fix:
    """Least-squares position from >=3 range measurements.

    Minimizes sum_i ((|p - b_i| - r_i) / sigma_i)^2 in the ENU frame at the
    beacon centroid, starting from the range-weighted beacon centroid.
    """
    n = len(measurements)
    if n < 3:
        raise InsufficientBeacons(f"trilateration needs >=3 ranges, got {n}")
    origin, coords = _beacon_frame([m.beacon.position for m in measurements])
    _check_geometry(coords)

    ranges = np.array([m.range for m in measurements])
    sigmas = np.array([m.sigma for m in measurements])

    def fun(p):
        diff = p - coords
        dist = np.maximum(np.hypot(diff[:, 0], diff[:, 1]), 1e-12)
        residuals = (dist - ranges) / sigmas
        jac = diff / dist[:, None] / sigmas[:, None]
        return residuals, jac

    weights = 1.0 / np.clip(ranges, 1.0, None)
    p0 = (coords * weights[:, None]).sum(axis=0) / weights.sum()
    best = _damped_gauss_newton(fun, p0)
    # Retry from grid seeds when the centroid start stalls or lands on a
    # clearly bad residual (threshold ~ chi-square for n-2 dof).
    if not best[2] or best[1] > 4.0 * max(n - 2, 1):
        for seed in _grid_seeds(coords):
            cand = _damped_gauss_newton(fun, seed)
            if (cand[2], -cand[1]) > (best[2], -best[1]):
                best = cand
    p_hat, cost, converged = best
    if not converged:
        raise NoConvergence("no seed met the step tolerance within the iteration cap")

    diff = p_hat - coords
    dist = np.maximum(np.hypot(diff[:, 0], diff[:, 1]), 1e-12)
    residual_rms = float(np.sqrt(np.mean((dist - ranges) ** 2)))
    gdop = _gdop(diff / dist[:, None])
    floor = _accuracy_floor(m.beacon.kind for m in measurements)
    try:
        position = from_enu(origin, EnuPoint(float(p_hat[0]), float(p_hat[1])))
    except OutOfProjectionRange as exc:
        raise NoConvergence("solution left the projection range") from exc
    return Fix(
        position=position,
        accuracy=max(floor, residual_rms * gdop),
        method=FixMethod.TRILATERATION,
        residual_rms=residual_rms,
        timestamp=timestamp,
    )


def multilaterate_tdoa(measurements: list[TdoaMeasurement], timestamp: int = 0) -> Fix:
    """Hyperbolic multilateration from arrival-time differences.

    Minimizes sum_i ((|p-b_i| - |p-b_0| - c*dt_i) / (c*sigma_t_i))^2 with
    Gauss-Newton restarted from a 3x3 grid of seeds over the beacon box;
    reports AmbiguousSolution when two separated local minima explain the
    data about equally well.
    """
    m = len(measurements)
    if m < 2:
        raise InsufficientBeacons(f"TDOA needs >=2 measurements, got {m}")
    reference = measurements[0].reference
    if any(meas.reference != reference for meas in measurements):
        raise ValueError("all TDOA measurements must share one reference beacon")

    positions = [reference.position] + [meas.beacon.position for meas in measurements]
    origin, coords = _beacon_frame(positions)
    _check_geometry(coords)
    ref_xy = coords[0]
    others = coords[1:]

    c = SPEED_OF_LIGHT_M_S
    range_deltas = np.array([meas.delta_t * c for meas in measurements])
    sigmas_m = np.array([meas.sigma_t * c for meas in measurements])

    def fun(p):
        d_ref = max(float(np.hypot(*(p - ref_xy))), 1e-12)
        diff = p - others
        dist = np.maximum(np.hypot(diff[:, 0], diff[:, 1]), 1e-12)
        residuals = (dist - d_ref - range_deltas) / sigmas_m
        jac = (diff / dist[:, None] - (p - ref_xy) / d_ref) / sigmas_m[:, None]
        return residuals, jac

    candidates = []
    for seed in _grid_seeds(coords):
        p_hat, cost, converged = _damped_gauss_newton(fun, seed)
        if converged:
            candidates.append((cost, p_hat))
    if not candidates:
        raise NoConvergence("no seed met the step tolerance within the iteration cap")
    candidates.sort(key=lambda item: item[0])
    best_cost, p_hat = candidates[0]

    d_ref = max(float(np.hypot(*(p_hat - ref_xy))), 1e-12)
    diff = p_hat - others
    dist = np.maximum(np.hypot(diff[:, 0], diff[:, 1]), 1e-12)
    residual_rms = float(
        np.sqrt(np.mean((dist - d_ref - range_deltas) ** 2))
    )
    j_geo = diff / dist[:, None] - (p_hat - ref_xy) / d_ref
    gdop = _gdop(j_geo)
    kinds = [reference.kind] + [meas.beacon.kind for meas in measurements]
    accuracy = max(_accuracy_floor(kinds), residual_rms * gdop)

    for cost, other in candidates[1:]:
        separated = float(np.hypot(*(other - p_hat))) > 2.0 * accuracy
        comparable = cost <= 1.05 * best_cost + 1e-9
        if separated and comparable:
            raise AmbiguousSolution(
                "two well-separated minima explain the measurements equally well"
            )

    try:
        position = from_enu(origin, EnuPoint(float(p_hat[0]), float(p_hat[1])))
    except OutOfProjectionRange as exc:
        raise NoConvergence("solution left the projection range") from exc
    return Fix(
        position=position,
        accuracy=accuracy,
        method=FixMethod.TDOA,
        residual_rms=residual_rms,
        timestamp=timestamp,
    )


def proximity_fix(beacon: Beacon, timestamp: int = 0) -> Fix:
    """Fix at the beacon position with its coverage radius as accuracy."""
    return Fix(
        position=beacon.position,
        accuracy=beacon.range_radius,
        method=FixMethod.PROXIMITY,
        residual_rms=0.0,
        timestamp=timestamp,
    )


_METHOD_RANK = {FixMethod.TRILATERATION: 0, FixMethod.TDOA: 1, FixMethod.PROXIMITY: 2}


def best_fix(available: list[Fix]) -> Fix:
    """Pick the most useful fix: smallest accuracy, then most recent,
    then Trilateration > Tdoa > Proximity."""
    if not available:
        raise EmptyInput("no fixes to choose from")
    return min(available, key=lambda f: (f.accuracy, -f.timestamp, _METHOD_RANK[f.method]))
