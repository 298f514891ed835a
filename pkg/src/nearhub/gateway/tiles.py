"""Slippy-map tile layer: on-disk cache in front of configurable upstreams.

Tiles are addressed (layer, z, x, y) in the usual web-Mercator scheme with
z in [0, 19]. An upstream of "synthetic" renders a deterministic 256x256
PNG labeling the tile instead of fetching anything, which keeps map tests
and demos fully offline.
"""
from __future__ import annotations

import hashlib
import io
import os
import urllib.request
from pathlib import Path

from PIL import Image, ImageDraw, ImageFont

from ..errors import TileOutOfRange, UpstreamUnavailable

LAYERS = ("normal", "satellite", "hybrid")
MAX_ZOOM = 19
TILE_SIZE = 256

_LAYER_BASE = {
    "normal": (226, 232, 220),
    "satellite": (38, 48, 58),
    "hybrid": (104, 116, 98),
}
_LAYER_INK = {
    "normal": (40, 60, 40),
    "satellite": (220, 228, 235),
    "hybrid": (245, 240, 220),
}


def check_tile_ref(layer: str, z: int, x: int, y: int) -> None:
    if layer not in LAYERS:
        raise TileOutOfRange(f"unknown layer {layer!r}")
    if not 0 <= z <= MAX_ZOOM:
        raise TileOutOfRange(f"zoom {z} outside [0, {MAX_ZOOM}]")
    limit = 1 << z
    if not (0 <= x < limit and 0 <= y < limit):
        raise TileOutOfRange(f"x/y {x}/{y} outside [0, {limit}) at z={z}")


def render_synthetic_tile(layer: str, z: int, x: int, y: int) -> bytes:
    """Deterministic test tile: solid tint, border, and the coordinates."""
    digest = hashlib.sha256(f"{layer}/{z}/{x}/{y}".encode()).digest()
    base = _LAYER_BASE[layer]
    tint = tuple(
        min(255, max(0, c + (digest[i] % 33) - 16)) for i, c in enumerate(base)
    )
    img = Image.new("RGB", (TILE_SIZE, TILE_SIZE), tint)
    draw = ImageDraw.Draw(img)
    ink = _LAYER_INK[layer]
    draw.rectangle([0, 0, TILE_SIZE - 1, TILE_SIZE - 1], outline=ink, width=1)
    font = ImageFont.load_default()
    lines = [layer, f"z={z}", f"x={x}", f"y={y}"]
    for i, line in enumerate(lines):
        draw.text((12, 12 + 18 * i), line, fill=ink, font=font)
    # A small per-tile glyph so adjacent tiles are visually distinct.
    gx, gy = 140 + digest[4] % 80, 140 + digest[5] % 80
    draw.ellipse([gx - 6, gy - 6, gx + 6, gy + 6], outline=ink, width=2)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _default_fetcher(url: str) -> tuple[bytes, str]:
    req = urllib.request.Request(url, headers={"User-Agent": "nearhub-tiles/0.1"})
    with urllib.request.urlopen(req, timeout=10) as resp:
        return resp.read(), resp.headers.get("Content-Type", "image/png")


class TileService:
    def __init__(self, cache_dir: str | Path, upstreams: dict[str, str],
                 fetcher=None):
        self.cache_dir = Path(cache_dir)
        self.upstreams = {layer: upstreams.get(layer, "synthetic") for layer in LAYERS}
        self._fetch = fetcher or _default_fetcher

    def _cache_path(self, layer: str, z: int, x: int, y: int) -> Path:
        return self.cache_dir / layer / str(z) / str(x) / f"{y}.png"

    def get(self, layer: str, z: int, x: int, y: int) -> tuple[bytes, str]:
        check_tile_ref(layer, z, x, y)
        path = self._cache_path(layer, z, x, y)
        if path.exists():
            return path.read_bytes(), "image/png"
        upstream = self.upstreams[layer]
        if upstream == "synthetic":
            data = render_synthetic_tile(layer, z, x, y)
        else:
            url = upstream.format(z=z, x=x, y=y)
            try:
                data, _ = self._fetch(url)
            except Exception as exc:
                raise UpstreamUnavailable(f"tile fetch failed: {exc}") from exc
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        return data, "image/png"
