"""Positioning accuracy benchmark with figure output.

Runs the range and TDOA solvers over randomized beacon geometries at
several injected noise levels, writes the error statistics as a TSV, and
renders matplotlib figures next to it: error-vs-noise curves and one
example geometry with its recovered fix.
"""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

from .geomath import EnuPoint, GeoPoint, from_enu, haversine
from .localization import (
    Beacon,
    BeaconKind,
    RangeMeasurement,
    TdoaMeasurement,
    SPEED_OF_LIGHT_M_S,
    multilaterate_tdoa,
    trilaterate,
)

ORIGIN = GeoPoint(38.9140, 121.6147)
SIGMAS_M = (0.0, 1.0, 5.0, 20.0)


def _geo(e: float, n: float) -> GeoPoint:
    return from_enu(ORIGIN, EnuPoint(e, n))


def random_geometry(rng: np.random.Generator, n_beacons: int = 4):
    """Non-degenerate centered beacon layout and a truth point inside its
    hull. Measurements are generated in this plane, so the layout is kept
    centered on the frame origin to make the planar metric exact."""
    while True:
        pts = rng.uniform(-1500.0, 1500.0, size=(n_beacons, 2))
        pts -= pts.mean(axis=0)
        s = np.linalg.svd(pts, compute_uv=False)
        if s[-1] > 100.0:  # comfortably non-collinear
            break
    weights = rng.dirichlet(np.ones(n_beacons))
    truth = weights @ pts
    return pts, truth


def run_trilateration_trials(trials: int, sigma_m: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    errors = np.empty(trials)
    for t in range(trials):
        pts, truth = random_geometry(rng)
        noise = rng.standard_normal(len(pts)) * sigma_m
        ranges = np.maximum(0.0, np.linalg.norm(pts - truth, axis=1) + noise)
        beacons = [
            Beacon(f"b{i}", _geo(*p), BeaconKind.GPS_PSEUDO) for i, p in enumerate(pts)
        ]
        measurements = [
            RangeMeasurement(b, float(ranges[i]), max(sigma_m, 1.0))
            for i, b in enumerate(beacons)
        ]
        fix = trilaterate(measurements)
        errors[t] = haversine(fix.position, _geo(*truth))
    return errors


def run_tdoa_trials(trials: int, sigma_m: float, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    c = SPEED_OF_LIGHT_M_S
    errors = np.empty(trials)
    for t in range(trials):
        pts, truth = random_geometry(rng, n_beacons=5)
        dists = np.linalg.norm(pts - truth, axis=1)
        noise = rng.standard_normal(len(pts) - 1) * sigma_m
        beacons = [
            Beacon(f"t{i}", _geo(*p), BeaconKind.CELL_TOWER) for i, p in enumerate(pts)
        ]
        measurements = [
            TdoaMeasurement(
                beacons[0], b,
                float(dists[i + 1] - dists[0] + noise[i]) / c,
                max(sigma_m, 1.0) / c,
            )
            for i, b in enumerate(beacons[1:])
        ]
        fix = multilaterate_tdoa(measurements)
        errors[t] = haversine(fix.position, _geo(*truth))
    return errors


def run_benchmark(trials: int = 200, seed: int = 7) -> list[dict]:
    rows = []
    for method, runner in (("trilateration", run_trilateration_trials),
                           ("tdoa", run_tdoa_trials)):
        for sigma in SIGMAS_M:
            errors = runner(trials, sigma, seed)
            rows.append({
                "method": method,
                "sigma_m": sigma,
                "trials": trials,
                "median_m": float(np.median(errors)),
                "p90_m": float(np.percentile(errors, 90)),
                "max_m": float(errors.max()),
            })
    return rows


def write_report(out_dir: str | Path, trials: int = 200, seed: int = 7) -> dict:
    """Run the benchmark; write report.tsv and the figures. Returns paths."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_benchmark(trials=trials, seed=seed)

    tsv = out / "report.tsv"
    columns = ["method", "sigma_m", "trials", "median_m", "p90_m", "max_m"]
    with open(tsv, "w", encoding="utf-8") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(str(row[c]) for c in columns) + "\n")

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method, marker in (("trilateration", "o"), ("tdoa", "s")):
        xs = [r["sigma_m"] for r in rows if r["method"] == method]
        med = [max(r["median_m"], 1e-9) for r in rows if r["method"] == method]
        p90 = [max(r["p90_m"], 1e-9) for r in rows if r["method"] == method]
        ax.plot(xs, med, marker=marker, label=f"{method} median")
        ax.plot(xs, p90, marker=marker, linestyle="--", alpha=0.6,
                label=f"{method} p90")
    ax.set_yscale("log")
    ax.set_xlabel("injected range noise sigma (m)")
    ax.set_ylabel("position error (m)")
    ax.set_title(f"Solver accuracy vs noise ({trials} trials per point)")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    fig.tight_layout()
    curve_png = out / "error_vs_noise.png"
    fig.savefig(curve_png, dpi=120)
    plt.close(fig)

    geometry_png = out / "example_geometry.png"
    _plot_example_geometry(geometry_png, seed)

    return {"tsv": str(tsv), "figures": [str(curve_png), str(geometry_png)],
            "rows": rows}


def _plot_example_geometry(path: Path, seed: int) -> None:
    import matplotlib.pyplot as plt

    rng = np.random.default_rng(seed)
    pts, truth = random_geometry(rng)
    beacons = [Beacon(f"b{i}", _geo(*p), BeaconKind.GPS_PSEUDO)
               for i, p in enumerate(pts)]
    noise = rng.standard_normal(len(pts)) * 5.0
    ranges = np.maximum(0.0, np.linalg.norm(pts - truth, axis=1) + noise)
    measurements = [
        RangeMeasurement(b, float(ranges[i]), 5.0) for i, b in enumerate(beacons)
    ]
    fix = trilaterate(measurements)
    # Plot in the local frame for readability.
    from .geomath import to_enu
    e = to_enu(ORIGIN, fix.position)
    est = np.array([e.east, e.north])

    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    ax.scatter(pts[:, 0], pts[:, 1], marker="^", s=80, label="beacons")
    for i, m in enumerate(measurements):
        circle = plt.Circle(pts[i], m.range, fill=False, alpha=0.25)
        ax.add_patch(circle)
    ax.scatter(*truth, marker="*", s=140, label="truth")
    ax.scatter(*est, marker="x", s=90, label="estimate")
    ax.set_aspect("equal")
    ax.set_xlabel("east (m)")
    ax.set_ylabel("north (m)")
    err = math.hypot(*(est - truth))
    ax.set_title(f"Range solve, sigma=5 m (error {err:.1f} m)")
    ax.legend(loc="upper right")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
