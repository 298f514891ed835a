// Application shell: one instance per browser session. All data shown in
// the DOM comes straight from API responses; the event loop only triggers
// re-fetches or in-place restyles, never invents state.

import { ApiClient, ApiError } from "./api.js";
import type { ChatMessage, NearbyHit, StreamEvent } from "./api.js";
import { EventLoop } from "./events.js";
import { MapView } from "./map.js";
import { banner, chatRow, feedItem, friendRow, profileCard } from "./render.js";
import { advanceCursor, handleMapKey, initialState, type ViewState } from "./state.js";

export class NearhubApp {
  doc: Document;
  api: ApiClient;
  state: ViewState;
  events: EventLoop;
  root: HTMLElement;
  map: MapView;
  friendsPanel: HTMLElement;
  chatPanel: HTMLElement;
  homePanel: HTMLElement;
  settingsPanel: HTMLElement;
  banners: HTMLElement;
  private heartbeatTimer: ReturnType<typeof setInterval> | null = null;

  constructor(doc: Document, baseUrl: string) {
    this.doc = doc;
    this.api = new ApiClient(baseUrl);
    this.state = initialState();
    this.events = new EventLoop(this.api);
    this.root = doc.createElement("div");
    this.root.className = "nearhub-app";
    this.banners = this.section("banners");
    this.map = new MapView(doc, this.api);
    this.root.appendChild(this.map.root);
    this.friendsPanel = this.section("friends-panel");
    this.chatPanel = this.section("chat-panel");
    this.homePanel = this.section("home-panel");
    this.settingsPanel = this.section("settings-panel");
    this.events.onEvent((event) => this.dispatch(event));
  }

  private section(className: string): HTMLElement {
    const node = this.doc.createElement("div");
    node.className = className;
    this.root.appendChild(node);
    return node;
  }

  mount(parent: HTMLElement): void {
    parent.appendChild(this.root);
  }

  // -- session ---------------------------------------------------------------

  async login(username: string, password: string): Promise<void> {
    const result = await this.api.login(username, password);
    this.state.token = result.token;
    this.state.username = result.username;
    await this.api.heartbeat();
  }

  startBackground(): void {
    this.events.start();
    this.heartbeatTimer = setInterval(() => {
      void this.api.heartbeat().catch(() => undefined);
    }, 20_000);
  }

  stopBackground(): void {
    this.events.stop();
    if (this.heartbeatTimer !== null) clearInterval(this.heartbeatTimer);
  }

  async pollOnce(): Promise<StreamEvent[]> {
    return this.events.pollOnce(false);
  }

  // -- errors ------------------------------------------------------------------

  showError(err: unknown): void {
    if (err instanceof ApiError) {
      this.banners.appendChild(banner(this.doc, err.code, err.message));
    } else {
      throw err;
    }
  }

  // -- map ---------------------------------------------------------------------

  async locateByCity(query: string): Promise<void> {
    try {
      const place = await this.api.geocode(query);
      this.state.map.centerLat = place.lat;
      this.state.map.centerLon = place.lon;
      await this.api.submitPosition({ gps: { lat: place.lat, lon: place.lon, accuracy: 5000 } });
      await this.refreshMap();
    } catch (err) {
      this.showError(err);
    }
  }

  async locateByGps(lat: number, lon: number, accuracy = 15): Promise<void> {
    await this.api.submitPosition({ gps: { lat, lon, accuracy } });
    this.state.map.centerLat = lat;
    this.state.map.centerLon = lon;
    await this.refreshMap();
  }

  async refreshMap(): Promise<void> {
    let hits: NearbyHit[] = [];
    try {
      hits = await this.api.nearby();
    } catch (err) {
      this.showError(err);
    }
    this.lastHits = hits;
    this.map.render(this.state, hits);
  }

  handleKey(key: string): boolean {
    const handled = handleMapKey(this.state, key);
    if (handled) this.map.render(this.state, this.lastHits);
    return handled;
  }

  private lastHits: NearbyHit[] = [];

  // -- friends -------------------------------------------------------------------

  async refreshFriends(): Promise<void> {
    const friends = await this.api.friends();
    this.friendsPanel.textContent = "";
    for (const friend of friends) {
      this.friendsPanel.appendChild(friendRow(this.doc, friend));
    }
  }

  // Find friends by username, city, or interests. Interest queries render
  // the recommendation API's results verbatim; username queries fetch the
  // (privacy-filtered) profile; city queries recenter the map.
  async searchFriends(query: string): Promise<HTMLElement> {
    const box = this.doc.createElement("div");
    box.className = "search-results";
    const old = this.friendsPanel.querySelector(".search-results");
    if (old) old.remove();
    this.friendsPanel.appendChild(box);
    try {
      if (query.startsWith("interests:")) {
        for (const hit of await this.api.recommend()) {
          const row = this.doc.createElement("div");
          row.className = "search-result";
          row.dataset.username = hit.username;
          row.textContent =
            `${hit.username} — score ${hit.score.toFixed(3)}, ` +
            `${hit.shared_interest_count} shared interests`;
          box.appendChild(row);
        }
      } else if (query.startsWith("city:")) {
        const place = await this.api.geocode(query.slice(5).trim());
        this.state.map.centerLat = place.lat;
        this.state.map.centerLon = place.lon;
        const row = this.doc.createElement("div");
        row.className = "search-result";
        row.textContent = `map moved to ${place.city}, ${place.country}`;
        box.appendChild(row);
        await this.refreshMap();
      } else {
        const profile = await this.api.profile(query.trim());
        box.appendChild(profileCard(this.doc, profile));
      }
    } catch (err) {
      this.showError(err);
    }
    return box;
  }

  private restylePresence(username: string, online: boolean): void {
    const rows = this.friendsPanel.querySelectorAll<HTMLElement>(".friend");
    rows.forEach((row) => {
      if (row.dataset.username === username) {
        row.classList.toggle("online", online);
        row.classList.toggle("offline", !online);
        const dot = row.querySelector(".presence-dot");
        if (dot) dot.textContent = online ? "●" : "○";
      }
    });
  }

  // -- chat ------------------------------------------------------------------------

  async openChat(peer: string): Promise<void> {
    this.state.selectedPeer = peer;
    this.chatPanel.textContent = "";
    const log = this.doc.createElement("div");
    log.className = "chat-log";
    log.dataset.peer = peer;
    this.chatPanel.appendChild(log);
    const history = await this.api.chatHistory(peer);
    for (const message of [...history].reverse()) {
      this.appendChatRow(message);
    }
  }

  async sendChat(text: string): Promise<void> {
    if (!this.state.selectedPeer) return;
    // The row appears when the echo event arrives, keeping the log
    // consistent with what the server actually recorded.
    await this.api.chatSend(this.state.selectedPeer, text);
  }

  private appendChatRow(message: ChatMessage): void {
    const log = this.chatPanel.querySelector<HTMLElement>(".chat-log");
    if (!log) return;
    const existing = log.querySelector(
      `[data-msg-id="${message.msg_id}"][data-conversation="${message.conversation}"]`);
    if (existing) return;
    log.appendChild(chatRow(this.doc, message, this.state.username ?? ""));
  }

  // -- homepage ----------------------------------------------------------------------

  async openHomepage(): Promise<void> {
    this.homePanel.textContent = "";
    const feedBox = this.doc.createElement("div");
    feedBox.className = "feed";
    const feed = await this.api.feed();
    for (const event of feed) {
      feedBox.appendChild(feedItem(this.doc, event));
    }
    this.homePanel.appendChild(feedBox);

    const blogBox = this.doc.createElement("div");
    blogBox.className = "blogs";
    for (const post of await this.api.blogList()) {
      const row = this.doc.createElement("div");
      row.className = `blog-row state-${String(post.state).toLowerCase()}`;
      row.dataset.postId = String(post.post_id);
      row.textContent = `${post.title} (${post.state})`;
      blogBox.appendChild(row);
    }
    this.homePanel.appendChild(blogBox);

    const visitorsBox = this.doc.createElement("div");
    visitorsBox.className = "visitors";
    for (const visit of await this.api.visitors()) {
      const row = this.doc.createElement("div");
      row.className = "visitor-row";
      row.textContent = visit.visitor_username;
      visitorsBox.appendChild(row);
    }
    this.homePanel.appendChild(visitorsBox);
  }

  async viewProfile(username: string): Promise<HTMLElement> {
    const profile = await this.api.profile(username);
    await this.api.recordVisit(username).catch(() => undefined);
    const card = profileCard(this.doc, profile);
    this.homePanel.appendChild(card);
    return card;
  }

  // -- settings -----------------------------------------------------------------------

  async openSettings(): Promise<void> {
    const tiers = await this.api.privacy();
    this.settingsPanel.textContent = "";
    for (const [field, tier] of Object.entries(tiers)) {
      const row = this.doc.createElement("div");
      row.className = "privacy-row";
      row.dataset.field = field;
      const label = this.doc.createElement("span");
      label.textContent = field;
      row.appendChild(label);
      const select = this.doc.createElement("select");
      for (const option of ["Everyone", "FriendsOnly", "Nobody"]) {
        const opt = this.doc.createElement("option");
        opt.value = option;
        opt.textContent = option;
        opt.selected = option === tier;
        select.appendChild(opt);
      }
      select.addEventListener("change", () => {
        void this.setPrivacy(field, select.value);
      });
      row.appendChild(select);
      this.settingsPanel.appendChild(row);
    }
  }

  async setPrivacy(field: string, tier: string): Promise<void> {
    await this.api.setPrivacy({ [field]: tier });
  }

  // -- event dispatch -------------------------------------------------------------------

  private dispatch(event: StreamEvent): void {
    advanceCursor(this.state, event.seq);
    switch (event.kind) {
      case "presence": {
        this.restylePresence(String(event.username), Boolean(event.online));
        break;
      }
      case "chat":
      case "chat_echo": {
        const message = event.message as ChatMessage;
        const peer = this.state.selectedPeer;
        if (peer && (message.sender_username === peer
                     || message.sender_username === this.state.username)) {
          this.appendChatRow(message);
        }
        break;
      }
      case "mail": {
        this.banners.appendChild(
          banner(this.doc, "MailArrived",
                 `new mail from ${event.from_username}: ${event.subject}`));
        break;
      }
      case "feed": {
        // Hint only; the homepage refreshes from the API when opened.
        this.homePanel.dataset.feedDirty = "1";
        break;
      }
      default:
        break;
    }
  }
}
