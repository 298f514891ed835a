// Slippy-map view: a grid of gateway tiles plus user/POI markers with the
// privacy-filtered popup the server returned. No client-side geo data is
// cached beyond what gets rendered.

import type { ApiClient, NearbyHit } from "./api.js";
import { pixelInViewport, tilesForViewport } from "./mercator.js";
import { profileCard } from "./render.js";
import type { ViewState } from "./state.js";

export class MapView {
  root: HTMLElement;
  private doc: Document;
  private api: ApiClient;
  width: number;
  height: number;

  constructor(doc: Document, api: ApiClient, width = 640, height = 480) {
    this.doc = doc;
    this.api = api;
    this.width = width;
    this.height = height;
    this.root = doc.createElement("div");
    this.root.className = "map-view";
  }

  render(state: ViewState, hits: NearbyHit[]): void {
    const { centerLat, centerLon, zoom, layer } = state.map;
    this.root.textContent = "";
    const tiles = this.doc.createElement("div");
    tiles.className = "tile-layer";
    for (const tile of tilesForViewport(centerLat, centerLon, zoom,
                                        this.width, this.height)) {
      const img = this.doc.createElement("img");
      img.className = "tile";
      img.src = this.api.tileUrl(layer, zoom, tile.tx, tile.ty);
      img.style.left = `${tile.left}px`;
      img.style.top = `${tile.top}px`;
      tiles.appendChild(img);
    }
    this.root.appendChild(tiles);

    const markers = this.doc.createElement("div");
    markers.className = "marker-layer";
    for (const hit of hits) {
      markers.appendChild(this.marker(state, hit));
    }
    this.root.appendChild(markers);
  }

  private marker(state: ViewState, hit: NearbyHit): HTMLElement {
    const node = this.doc.createElement("div");
    node.className = hit.online ? "marker online" : "marker offline";
    node.dataset.username = hit.username;
    const pos = pixelInViewport(hit.fix.lat, hit.fix.lon,
                                state.map.centerLat, state.map.centerLon,
                                state.map.zoom, this.width, this.height);
    node.style.left = `${pos.left}px`;
    node.style.top = `${pos.top}px`;
    node.title = hit.nickname;
    // Pointing at an avatar opens the server-filtered details popup.
    const popup = this.doc.createElement("div");
    popup.className = "marker-popup";
    popup.appendChild(profileCard(this.doc, hit.profile));
    node.appendChild(popup);
    node.addEventListener("click", () => node.classList.toggle("open"));
    return node;
  }
}
