// Typed client for the gateway API. Every call returns the "ok" payload or
// throws ApiError carrying the server's wire code verbatim.

export class ApiError extends Error {
  code: string;
  status: number;
  recoveryHint: boolean;

  constructor(status: number, payload: { code?: string; message?: string; recovery_hint?: boolean }) {
    super(`${payload.code ?? "Unknown"}: ${payload.message ?? ""}`);
    this.code = payload.code ?? "Unknown";
    this.status = status;
    this.recoveryHint = payload.recovery_hint === true;
  }
}

export interface Fix {
  lat: number;
  lon: number;
  accuracy: number;
  method: string;
  residual_rms: number;
  timestamp: number;
}

export interface ProfileView {
  user_id: string;
  username: string;
  nickname: string;
  avatar: string | null;
  interests: string[];
  sections: Record<string, Record<string, unknown>>;
}

export interface NearbyHit {
  username: string;
  nickname: string;
  distance_m: number;
  online: boolean;
  fix: Fix;
  profile: ProfileView;
}

export interface FriendRow {
  username: string;
  nickname: string;
  avatar: string | null;
  alias: string | null;
  group: string;
  online: boolean;
  last_seen: number | null;
}

export interface ChatMessage {
  msg_id: number;
  conversation: string;
  sender: string;
  sender_username: string;
  body: string | null;
  blob_id: string | null;
  sent_at: number;
  delivered: boolean;
}

export interface StreamEvent {
  seq: number;
  kind: string;
  at: number;
  [key: string]: unknown;
}

export class ApiClient {
  baseUrl: string;
  token: string | null = null;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  private headers(): Record<string, string> {
    return this.token ? { Authorization: `Bearer ${this.token}` } : {};
  }

  private async unwrap<T>(resp: Response): Promise<T> {
    const body = await resp.json();
    if (body.error) throw new ApiError(resp.status, body.error);
    return body.ok as T;
  }

  async get<T>(path: string, params?: Record<string, string | number | boolean | undefined>): Promise<T> {
    const url = new URL(this.baseUrl + path);
    for (const [key, value] of Object.entries(params ?? {})) {
      if (value !== undefined) url.searchParams.set(key, String(value));
    }
    const resp = await fetch(url, { headers: this.headers() });
    return this.unwrap<T>(resp);
  }

  async send<T>(method: string, path: string, body?: unknown): Promise<T> {
    const resp = await fetch(this.baseUrl + path, {
      method,
      headers: { ...this.headers(), "Content-Type": "application/json" },
      body: JSON.stringify(body ?? {}),
    });
    return this.unwrap<T>(resp);
  }

  // -- calls ---------------------------------------------------------------

  register(fields: Record<string, unknown>) {
    return this.send<{ username: string }>("POST", "/api/v1/register", fields);
  }

  activate(username: string, code: string) {
    return this.send("POST", "/api/v1/activate", { username, code });
  }

  async login(username: string, password: string) {
    const result = await this.send<{ token: string; username: string; is_admin: boolean }>(
      "POST", "/api/v1/login", { username, password });
    this.token = result.token;
    return result;
  }

  profile(user?: string) {
    return this.get<ProfileView>("/api/v1/profile", user ? { user } : undefined);
  }

  updateProfile(section: string, fields: Record<string, unknown>) {
    return this.send("PUT", "/api/v1/profile", { section, fields });
  }

  privacy() {
    return this.get<Record<string, string>>("/api/v1/privacy");
  }

  setPrivacy(tiers: Record<string, string>) {
    return this.send<{ privacy: Record<string, string> }>("PUT", "/api/v1/privacy", tiers);
  }

  geocode(query: string) {
    return this.get<{ city: string; country: string; lat: number; lon: number }>(
      "/api/v1/geocode", { q: query });
  }

  submitPosition(payload: Record<string, unknown>) {
    return this.send<{ fix: Fix }>("POST", "/api/v1/position", payload);
  }

  nearby(radius = 5000, friendsOnly = false) {
    return this.get<NearbyHit[]>("/api/v1/nearby", {
      radius, friends_only: friendsOnly,
    });
  }

  poi(radius = 5000, category?: string, name?: string) {
    return this.get<{ poi_id: string; name: string; category: string; lat: number; lon: number; distance_m: number }[]>(
      "/api/v1/poi", { radius, category, name });
  }

  friends() {
    return this.get<FriendRow[]>("/api/v1/friends");
  }

  friendRequest(username: string) {
    return this.send("POST", "/api/v1/requests", { username });
  }

  friendAccept(username: string) {
    return this.send("POST", "/api/v1/friends", { username });
  }

  friendRemove(username: string) {
    return this.send("DELETE", `/api/v1/friends/${encodeURIComponent(username)}`);
  }

  setAlias(username: string, alias: string | null) {
    return this.send("POST", `/api/v1/friends/${encodeURIComponent(username)}/alias`, { alias });
  }

  requests() {
    return this.get<{ incoming: string[]; outgoing: string[] }>("/api/v1/requests");
  }

  recommend(k = 10) {
    return this.get<{ username: string; score: number; shared_interest_count: number }[]>(
      "/api/v1/recommend", { k });
  }

  chatSend(to: string, text: string) {
    return this.send<ChatMessage>("POST", "/api/v1/chat", { to, text });
  }

  chatHistory(peer: string, before?: number, limit = 50) {
    return this.get<ChatMessage[]>("/api/v1/chat/history", { peer, before, limit });
  }

  chatSettings(historySaving: boolean) {
    return this.send("PUT", "/api/v1/chat/settings", { history_saving: historySaving });
  }

  mailList(box: "inbox" | "sent" = "inbox") {
    return this.get<{ mails: Record<string, unknown>[]; unread: number }>(
      "/api/v1/mail", { box });
  }

  mailSend(to: string, subject: string, body: string) {
    return this.send("POST", "/api/v1/mail", { to, subject, body });
  }

  heartbeat() {
    return this.send("POST", "/api/v1/heartbeat");
  }

  events(since: number, timeoutSeconds: number, wait: boolean) {
    return this.get<{ events: StreamEvent[]; latest: number }>("/api/v1/events", {
      since, timeout: timeoutSeconds, wait,
    });
  }

  feed(before?: number, limit = 20) {
    return this.get<Record<string, unknown>[]>("/api/v1/feed", { before, limit });
  }

  blogWrite(title: string, body: string) {
    return this.send<{ post_id: string; state: string }>("POST", "/api/v1/blog", { title, body });
  }

  blogPublish(postId: string) {
    return this.send("POST", `/api/v1/blog/${encodeURIComponent(postId)}/publish`);
  }

  blogList(author?: string) {
    return this.get<Record<string, unknown>[]>("/api/v1/blog", author ? { author } : undefined);
  }

  visitors() {
    return this.get<{ visitor_username: string; visited_at: number }[]>("/api/v1/visitors");
  }

  recordVisit(owner: string) {
    return this.send("POST", "/api/v1/visit", { owner });
  }

  weather(city: string) {
    return this.get<{ city: string; days: Record<string, unknown>[] }>("/api/v1/weather", { city });
  }

  tileUrl(layer: string, z: number, x: number, y: number): string {
    return `${this.baseUrl}/api/v1/tiles/${layer}/${z}/${x}/${y}`;
  }
}
