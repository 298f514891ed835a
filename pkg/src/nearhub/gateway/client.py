"""Typed HTTP client for the gateway API, shared by the CLI and tests."""
from __future__ import annotations

import requests


class ApiError(Exception):
    """Server-side error surfaced with its wire code intact."""

    def __init__(self, status: int, payload: dict):
        self.status = status
        self.code = payload.get("code", "Unknown")
        self.message = payload.get("message", "")
        self.payload = payload
        super().__init__(f"{self.code}: {self.message}")


class ApiClient:
    def __init__(self, base_url: str, token: str | None = None, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.token = token
        self.timeout = timeout
        self._session = requests.Session()

    # -- plumbing ---------------------------------------------------------------

    def _headers(self) -> dict:
        return {"Authorization": f"Bearer {self.token}"} if self.token else {}

    def _unwrap(self, resp: requests.Response):
        body = resp.json()
        if "error" in body:
            raise ApiError(resp.status_code, body["error"])
        return body["ok"]

    def get(self, path: str, params: dict | None = None, timeout: float | None = None):
        resp = self._session.get(
            self.base_url + path, params=params or {},
            headers=self._headers(), timeout=timeout or self.timeout,
        )
        return self._unwrap(resp)

    def post(self, path: str, body: dict | None = None):
        resp = self._session.post(
            self.base_url + path, json=body or {},
            headers=self._headers(), timeout=self.timeout,
        )
        return self._unwrap(resp)

    def put(self, path: str, body: dict | None = None):
        resp = self._session.put(
            self.base_url + path, json=body or {},
            headers=self._headers(), timeout=self.timeout,
        )
        return self._unwrap(resp)

    def delete(self, path: str):
        resp = self._session.delete(
            self.base_url + path, headers=self._headers(), timeout=self.timeout,
        )
        return self._unwrap(resp)

    # -- calls -------------------------------------------------------------------

    def register(self, **fields):
        return self.post("/api/v1/register", fields)

    def activate(self, username: str, code: str):
        return self.post("/api/v1/activate", {"username": username, "code": code})

    def login(self, username: str, password: str):
        result = self.post("/api/v1/login", {"username": username, "password": password})
        self.token = result["token"]
        return result

    def recover(self, username: str):
        return self.post("/api/v1/recover", {"username": username})

    def redeem(self, username: str, code: str, new_password: str):
        return self.post("/api/v1/redeem", {
            "username": username, "code": code, "new_password": new_password,
        })

    def profile(self, user: str | None = None):
        return self.get("/api/v1/profile", {"user": user} if user else None)

    def update_profile(self, section: str, fields: dict):
        return self.put("/api/v1/profile", {"section": section, "fields": fields})

    def privacy(self):
        return self.get("/api/v1/privacy")

    def set_privacy(self, tiers: dict):
        return self.put("/api/v1/privacy", tiers)

    def geocode(self, query: str):
        return self.get("/api/v1/geocode", {"q": query})

    def submit_position(self, payload: dict):
        return self.post("/api/v1/position", payload)

    def nearby(self, radius: float = 5000, friends_only: bool = False,
               online_only: bool = False):
        return self.get("/api/v1/nearby", {
            "radius": radius,
            "friends_only": str(friends_only).lower(),
            "online_only": str(online_only).lower(),
        })

    def knn(self, k: int = 10):
        return self.get("/api/v1/knn", {"k": k})

    def poi(self, radius: float = 5000, category: str | None = None,
            name: str | None = None):
        params = {"radius": radius}
        if category:
            params["category"] = category
        if name:
            params["name"] = name
        return self.get("/api/v1/poi", params)

    def friends(self):
        return self.get("/api/v1/friends")

    def friend_request(self, username: str):
        return self.post("/api/v1/requests", {"username": username})

    def requests_list(self):
        return self.get("/api/v1/requests")

    def friend_accept(self, username: str):
        return self.post("/api/v1/friends", {"username": username})

    def friend_remove(self, username: str):
        return self.delete(f"/api/v1/friends/{username}")

    def recommend(self, k: int = 10):
        return self.get("/api/v1/recommend", {"k": k})

    def chat_send(self, to: str, text: str | None = None, blob_id: str | None = None):
        body = {"to": to}
        if text is not None:
            body["text"] = text
        if blob_id is not None:
            body["blob_id"] = blob_id
        return self.post("/api/v1/chat", body)

    def chat_history(self, peer: str, before: int | None = None, limit: int = 50):
        params = {"peer": peer, "limit": limit}
        if before is not None:
            params["before"] = before
        return self.get("/api/v1/chat/history", params)

    def chat_settings(self, history_saving: bool):
        return self.put("/api/v1/chat/settings", {"history_saving": history_saving})

    def mail_send(self, to: str, subject: str, body: str):
        return self.post("/api/v1/mail", {"to": to, "subject": subject, "body": body})

    def mail_list(self, box: str = "inbox"):
        return self.get("/api/v1/mail", {"box": box})

    def mail_get(self, mail_id: str):
        return self.get(f"/api/v1/mail/{mail_id}")

    def mail_delete(self, mail_id: str):
        return self.delete(f"/api/v1/mail/{mail_id}")

    def heartbeat(self):
        return self.post("/api/v1/heartbeat")

    def presence(self, usernames: list[str]):
        return self.get("/api/v1/presence", {"users": ",".join(usernames)})

    def events(self, since: int = 0, timeout: float = 25.0, wait: bool = True):
        return self.get("/api/v1/events", {
            "since": since, "timeout": timeout, "wait": str(wait).lower(),
        }, timeout=timeout + 10.0)

    def feed(self, before: int | None = None, limit: int = 20):
        params = {"limit": limit}
        if before is not None:
            params["before"] = before
        return self.get("/api/v1/feed", params)

    def weather(self, city: str, date: str | None = None):
        params = {"city": city}
        if date:
            params["date"] = date
        return self.get("/api/v1/weather", params)

    def news(self, before: int | None = None, limit: int = 20):
        params = {"limit": limit}
        if before is not None:
            params["before"] = before
        return self.get("/api/v1/news", params)

    def news_subscribe(self, sections: list[str]):
        return self.post("/api/v1/news/subscribe", {"sections": sections})

    def forum_post(self, title: str, body: str):
        return self.post("/api/v1/forum", {"title": title, "body": body})

    def forum_list(self):
        return self.get("/api/v1/forum")

    def forum_queue(self):
        return self.get("/api/v1/forum/queue")

    def forum_moderate(self, post_id: str, action: str):
        return self.post(f"/api/v1/forum/{post_id}/moderate", {"action": action})

    def forum_reply(self, post_id: str, body: str):
        return self.post(f"/api/v1/forum/{post_id}/reply", {"body": body})

    def upload_blob(self, data: bytes, media: str = "application/octet-stream"):
        resp = self._session.post(
            self.base_url + "/api/v1/blob", data=data,
            headers={**self._headers(), "Content-Type": media},
            timeout=self.timeout,
        )
        return self._unwrap(resp)

    def fetch_blob(self, blob_id: str) -> bytes:
        resp = self._session.get(
            self.base_url + f"/api/v1/blob/{blob_id}",
            headers=self._headers(), timeout=self.timeout,
        )
        if resp.headers.get("Content-Type", "").startswith("application/json"):
            self._unwrap(resp)
        return resp.content

    def tile(self, layer: str, z: int, x: int, y: int) -> bytes:
        resp = self._session.get(
            self.base_url + f"/api/v1/tiles/{layer}/{z}/{x}/{y}",
            headers=self._headers(), timeout=self.timeout,
        )
        if resp.headers.get("Content-Type", "").startswith("application/json"):
            self._unwrap(resp)
        return resp.content
