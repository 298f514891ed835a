// Client view state and its invariants: zoom stays within [0, 19], the
// layer is one of the three served by the gateway, and the event cursor
// only moves forward.

export const LAYERS = ["normal", "satellite", "hybrid"] as const;
export type Layer = (typeof LAYERS)[number];

export const MIN_ZOOM = 0;
export const MAX_ZOOM = 19;

export interface MapState {
  centerLat: number;
  centerLon: number;
  zoom: number;
  layer: Layer;
}

export interface ViewState {
  token: string | null;
  username: string | null;
  map: MapState;
  selectedPeer: string | null;
  openPanel: "map" | "friends" | "chat" | "homepage" | "settings";
  lastEventSeq: number;
}

export function initialState(): ViewState {
  return {
    token: null,
    username: null,
    map: { centerLat: 38.914, centerLon: 121.6147, zoom: 12, layer: "normal" },
    selectedPeer: null,
    openPanel: "map",
    lastEventSeq: 0,
  };
}

export function clampZoom(zoom: number): number {
  return Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, Math.round(zoom)));
}

export function zoomIn(state: ViewState): void {
  state.map.zoom = clampZoom(state.map.zoom + 1);
}

export function zoomOut(state: ViewState): void {
  state.map.zoom = clampZoom(state.map.zoom - 1);
}

export function setLayer(state: ViewState, layer: string): boolean {
  if ((LAYERS as readonly string[]).includes(layer)) {
    state.map.layer = layer as Layer;
    return true;
  }
  return false;
}

// Handset-style bindings: 1/2/3 pick the layer, * and + zoom in,
// # and - zoom out.
export function handleMapKey(state: ViewState, key: string): boolean {
  switch (key) {
    case "1":
      return setLayer(state, "normal");
    case "2":
      return setLayer(state, "satellite");
    case "3":
      return setLayer(state, "hybrid");
    case "*":
    case "+":
      zoomIn(state);
      return true;
    case "#":
    case "-":
      zoomOut(state);
      return true;
    default:
      return false;
  }
}

export function advanceCursor(state: ViewState, seq: number): void {
  if (seq > state.lastEventSeq) state.lastEventSeq = seq;
}
