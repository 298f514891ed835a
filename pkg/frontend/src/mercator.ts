// Web-Mercator tile math for the slippy map.

export const TILE_SIZE = 256;

export interface WorldPoint {
  x: number; // in tile units at the given zoom
  y: number;
}

export function latLonToWorld(lat: number, lon: number, zoom: number): WorldPoint {
  const n = 2 ** zoom;
  const clamped = Math.max(-85.05112878, Math.min(85.05112878, lat));
  const rad = (clamped * Math.PI) / 180;
  return {
    x: ((lon + 180) / 360) * n,
    y: ((1 - Math.log(Math.tan(rad) + 1 / Math.cos(rad)) / Math.PI) / 2) * n,
  };
}

export function worldToLatLon(x: number, y: number, zoom: number): { lat: number; lon: number } {
  const n = 2 ** zoom;
  const lon = (x / n) * 360 - 180;
  const merc = Math.PI * (1 - (2 * y) / n);
  const lat = (Math.atan(Math.sinh(merc)) * 180) / Math.PI;
  return { lat, lon };
}

export interface TilePlacement {
  tx: number; // tile x index (wrapped)
  ty: number;
  left: number; // CSS px within the viewport
  top: number;
}

// Tiles needed to cover a viewport centered on (lat, lon), with their
// pixel placement. Y is clamped to the world, X wraps.
export function tilesForViewport(
  lat: number, lon: number, zoom: number, width: number, height: number,
): TilePlacement[] {
  const n = 2 ** zoom;
  const center = latLonToWorld(lat, lon, zoom);
  const leftWorld = center.x - width / 2 / TILE_SIZE;
  const topWorld = center.y - height / 2 / TILE_SIZE;
  const out: TilePlacement[] = [];
  const first_tx = Math.floor(leftWorld);
  const first_ty = Math.floor(topWorld);
  for (let ty = first_ty; ty * TILE_SIZE < (topWorld + height / TILE_SIZE) * TILE_SIZE; ty++) {
    if (ty < 0 || ty >= n) continue;
    for (let tx = first_tx; (tx - leftWorld) * TILE_SIZE < width; tx++) {
      out.push({
        tx: ((tx % n) + n) % n,
        ty,
        left: Math.round((tx - leftWorld) * TILE_SIZE),
        top: Math.round((ty - topWorld) * TILE_SIZE),
      });
    }
  }
  return out;
}

// Pixel offset of a coordinate within the same viewport.
export function pixelInViewport(
  lat: number, lon: number, centerLat: number, centerLon: number,
  zoom: number, width: number, height: number,
): { left: number; top: number } {
  const center = latLonToWorld(centerLat, centerLon, zoom);
  const p = latLonToWorld(lat, lon, zoom);
  return {
    left: Math.round(width / 2 + (p.x - center.x) * TILE_SIZE),
    top: Math.round(height / 2 + (p.y - center.y) * TILE_SIZE),
  };
}
