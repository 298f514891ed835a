"""HTTP/1.1 + JSON gateway over the application core.

Every response body is either {"ok": payload} or {"error": {"code", ...}}
with the domain error code verbatim. All endpoints live under /api/v1 and
require a bearer session token except register/activate/login/recover/
redeem. Long-poll event delivery holds GET /events open for up to 25 s.

The route table is data: each entry names the module operations it
realizes, which the endpoint-coverage test checks against the operation
catalog.
"""
from __future__ import annotations

import json
import logging
import re
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from ..app import App
from ..errors import BadRequest, DomainError, TileOutOfRange
from .tiles import TileService

log = logging.getLogger(__name__)

API_PREFIX = "/api/v1"
MAX_BODY = 8 * 1024 * 1024

_STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}


@dataclass
class Request:
    method: str
    path: str
    params: dict
    headers: dict
    raw_body: bytes
    path_args: dict = field(default_factory=dict)
    token: str = ""

    @property
    def json(self) -> dict:
        if not self.raw_body:
            return {}
        try:
            body = json.loads(self.raw_body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BadRequest(f"request body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise BadRequest("request body must be a JSON object")
        return body

    def param(self, name: str, default=None):
        values = self.params.get(name)
        return values[0] if values else default

    def int_param(self, name: str, default=None):
        raw = self.param(name)
        if raw is None or raw == "":
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise BadRequest(f"query parameter {name!r} must be an integer") from exc

    def float_param(self, name: str, default=None):
        raw = self.param(name)
        if raw is None or raw == "":
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise BadRequest(f"query parameter {name!r} must be a number") from exc

    def bool_param(self, name: str, default: bool = False) -> bool:
        raw = self.param(name)
        if raw is None or raw == "":
            return default
        return raw.lower() in ("1", "true", "yes")


@dataclass
class Route:
    method: str
    pattern: str
    handler: object
    ops: tuple
    auth: bool = True
    regex: re.Pattern = None

    def __post_init__(self):
        parts = []
        for segment in self.pattern.strip("/").split("/"):
            if segment.startswith("{") and segment.endswith("}"):
                parts.append(f"(?P<{segment[1:-1]}>[^/]+)")
            else:
                parts.append(re.escape(segment))
        self.regex = re.compile("^/" + "/".join(parts) + "$")


class ServerContext:
    def __init__(self, app: App, tiles: TileService, webui_dir: str | None = None):
        self.app = app
        self.tiles = tiles
        self.webui_dir = Path(webui_dir) if webui_dir else None


# -- handlers (ctx, req) -> JSON-able payload or (status, content_type, bytes) --


def h_register(ctx, req):
    return ctx.app.register(req.json)


def h_activate(ctx, req):
    body = req.json
    return ctx.app.activate(body["username"], str(body["code"]))


def h_login(ctx, req):
    body = req.json
    return ctx.app.login(body["username"], body["password"])


def h_recover(ctx, req):
    return ctx.app.recover(req.json["username"])


def h_redeem(ctx, req):
    body = req.json
    return ctx.app.redeem(body["username"], str(body["code"]), body["new_password"])


def h_profile_get(ctx, req):
    return ctx.app.profile_view(req.token, req.param("user"))


def h_profile_put(ctx, req):
    body = req.json
    return ctx.app.update_profile(req.token, body["section"], body["fields"])


def h_privacy_get(ctx, req):
    return ctx.app.privacy_get(req.token)


def h_privacy_put(ctx, req):
    return ctx.app.privacy_set(req.token, req.json)


def h_nearby(ctx, req):
    return ctx.app.nearby(
        req.token,
        radius_m=req.float_param("radius", 5000.0),
        friends_only=req.bool_param("friends_only"),
        online_only=req.bool_param("online_only"),
    )


def h_knn(ctx, req):
    return ctx.app.knn(req.token, k=req.int_param("k", 10))


def h_poi(ctx, req):
    return ctx.app.poi_search(
        req.token,
        radius_m=req.float_param("radius", 5000.0),
        category=req.param("category"),
        name=req.param("name"),
        lat=req.float_param("lat"),
        lon=req.float_param("lon"),
    )


def h_position(ctx, req):
    return ctx.app.submit_position(req.token, req.json)


def h_friends_get(ctx, req):
    return ctx.app.friends_list(req.token)


def h_friends_post(ctx, req):
    return ctx.app.friend_accept(req.token, req.json["username"])


def h_friend_delete(ctx, req):
    return ctx.app.friend_remove(req.token, req.path_args["username"])


def h_friend_group(ctx, req):
    return ctx.app.friend_move_group(req.token, req.path_args["username"],
                                     req.json["group"])


def h_friend_alias(ctx, req):
    return ctx.app.friend_set_alias(req.token, req.path_args["username"],
                                    req.json.get("alias"))


def h_requests_get(ctx, req):
    return ctx.app.requests_list(req.token)


def h_requests_post(ctx, req):
    return ctx.app.friend_request(req.token, req.json["username"])


def h_groups_get(ctx, req):
    return ctx.app.groups_list(req.token)


def h_groups_post(ctx, req):
    body = req.json
    return ctx.app.manage_group(req.token, body["action"], body["name"],
                                body.get("new_name"))


def h_recommend(ctx, req):
    return ctx.app.recommend(req.token, k=req.int_param("k", 10))


def h_chat_post(ctx, req):
    body = req.json
    return ctx.app.send_chat(req.token, body["to"], text=body.get("text"),
                             blob_id=body.get("blob_id"))


def h_chat_history(ctx, req):
    return ctx.app.chat_history(
        req.token, req.param("peer"),
        before_id=req.int_param("before"), limit=req.int_param("limit", 50),
    )


def h_chat_settings(ctx, req):
    return ctx.app.set_history_saving(req.token, bool(req.json["history_saving"]))


def h_mail_post(ctx, req):
    body = req.json
    return ctx.app.send_mail(req.token, body["to"], body.get("subject", ""),
                             body.get("body", ""))


def h_mail_list(ctx, req):
    return ctx.app.list_mail(req.token, req.param("box", "inbox"))


def h_mail_get(ctx, req):
    return ctx.app.get_mail(req.token, req.path_args["mail_id"])


def h_mail_delete(ctx, req):
    return ctx.app.delete_mail(req.token, req.path_args["mail_id"])


def h_blob_post(ctx, req):
    media = req.headers.get("content-type", "application/octet-stream")
    return ctx.app.upload_blob(req.token, req.raw_body, media)


def h_blob_get(ctx, req):
    data, media = ctx.app.fetch_blob(req.token, req.path_args["blob_id"])
    return 200, media, data


def h_heartbeat(ctx, req):
    return ctx.app.heartbeat(req.token)


def h_presence(ctx, req):
    users = [u for u in (req.param("users") or "").split(",") if u]
    return ctx.app.presence_of(req.token, users)


def h_events(ctx, req):
    return ctx.app.events(
        req.token,
        since=req.int_param("since", 0),
        timeout_s=req.float_param("timeout", 25.0),
        wait=req.bool_param("wait", True),
    )


def h_feed(ctx, req):
    return ctx.app.feed(req.token, before=req.int_param("before"),
                        limit=req.int_param("limit", 20))


def h_comment(ctx, req):
    body = req.json
    return ctx.app.comment(req.token, body["target_kind"], body["target_id"],
                           body["text"])


def h_blog_post(ctx, req):
    body = req.json
    return ctx.app.blog_write(req.token, body["title"], body["body"])


def h_blog_list(ctx, req):
    return ctx.app.blog_list(req.token, req.param("author"))


def h_blog_get(ctx, req):
    return ctx.app.blog_view(req.token, req.path_args["post_id"])


def h_blog_put(ctx, req):
    body = req.json
    return ctx.app.blog_edit(req.token, req.path_args["post_id"],
                             title=body.get("title"), body=body.get("body"))


def h_blog_publish(ctx, req):
    return ctx.app.blog_publish(req.token, req.path_args["post_id"])


def h_blog_delete(ctx, req):
    return ctx.app.blog_delete(req.token, req.path_args["post_id"])


def h_album_post(ctx, req):
    return ctx.app.album_create(req.token, req.json["title"])


def h_album_list(ctx, req):
    return ctx.app.albums(req.token, req.param("owner"))


def h_album_delete(ctx, req):
    return ctx.app.album_delete(req.token, req.path_args["album_id"])


def h_photo_upload(ctx, req):
    return ctx.app.photo_upload(req.token, req.path_args["album_id"],
                                req.json["photos"])


def h_photo_put(ctx, req):
    return ctx.app.photo_edit(req.token, req.path_args["photo_id"],
                              req.json["caption"])


def h_photo_delete(ctx, req):
    return ctx.app.photo_delete(req.token, req.path_args["photo_id"])


def h_visit(ctx, req):
    return ctx.app.record_visit(req.token, req.json["owner"])


def h_visitors(ctx, req):
    return ctx.app.visitors(req.token)


def h_weather(ctx, req):
    city = req.param("city")
    if city is None:
        raise BadRequest("missing 'city' query parameter")
    return ctx.app.weather(req.token, city, date=req.param("date"))


def h_news(ctx, req):
    return ctx.app.news_feed(req.token, before=req.int_param("before"),
                             limit=req.int_param("limit", 20))


def h_news_subscribe(ctx, req):
    return ctx.app.subscribe_news(req.token, list(req.json["sections"]))


def h_forum_post(ctx, req):
    body = req.json
    return ctx.app.forum_post(req.token, body["title"], body["body"])


def h_forum_list(ctx, req):
    return ctx.app.forum_list(req.token)


def h_forum_queue(ctx, req):
    return ctx.app.forum_queue(req.token)


def h_forum_moderate(ctx, req):
    return ctx.app.forum_moderate(req.token, req.path_args["post_id"],
                                  req.json["action"])


def h_forum_reply(ctx, req):
    return ctx.app.forum_reply(req.token, req.path_args["post_id"],
                               req.json["body"])


def h_geocode(ctx, req):
    query = req.param("q")
    if query is None:
        raise BadRequest("missing 'q' query parameter")
    return ctx.app.geocode(req.token, query)


def h_tile(ctx, req):
    args = req.path_args
    try:
        z, x, y = int(args["z"]), int(args["x"]), int(args["y"])
    except ValueError as exc:
        raise TileOutOfRange("tile coordinates must be integers") from exc
    data, media = ctx.tiles.get(args["layer"], z, x, y)
    return 200, media, data


ROUTES = [
    Route("POST", "/register", h_register, ("identity.register",), auth=False),
    Route("POST", "/activate", h_activate, ("identity.activate",), auth=False),
    Route("POST", "/login", h_login, ("identity.login",), auth=False),
    Route("POST", "/recover", h_recover, ("identity.recover_password",), auth=False),
    Route("POST", "/redeem", h_redeem, ("identity.redeem_recovery",), auth=False),
    Route("GET", "/profile", h_profile_get, ("social.filter_profile",)),
    Route("PUT", "/profile", h_profile_put, ("identity.update_profile",)),
    Route("GET", "/privacy", h_privacy_get, ()),
    Route("PUT", "/privacy", h_privacy_put, ("social.set_privacy",)),
    Route("GET", "/nearby", h_nearby, ("geostore.query_radius", "social.visible_nearby")),
    Route("GET", "/knn", h_knn, ("geostore.query_knn",)),
    Route("GET", "/poi", h_poi, ("geostore.search_poi",)),
    Route("POST", "/position", h_position, (
        "geostore.upsert_position", "localization.trilaterate",
        "localization.multilaterate_tdoa", "localization.proximity_fix",
        "localization.best_fix",
    )),
    Route("GET", "/friends", h_friends_get, ()),
    Route("POST", "/friends", h_friends_post, ("social.accept_friend",)),
    Route("DELETE", "/friends/{username}", h_friend_delete, ("social.remove_friend",)),
    Route("POST", "/friends/{username}/group", h_friend_group, ("social.move_to_group",)),
    Route("POST", "/friends/{username}/alias", h_friend_alias, ("social.set_alias",)),
    Route("GET", "/requests", h_requests_get, ()),
    Route("POST", "/requests", h_requests_post, ("social.add_friend",)),
    Route("GET", "/groups", h_groups_get, ()),
    Route("POST", "/groups", h_groups_post, ("social.manage_group",)),
    Route("GET", "/recommend", h_recommend, ("social.recommend",)),
    Route("POST", "/chat", h_chat_post, ("messaging.send_chat",)),
    Route("GET", "/chat/history", h_chat_history, ("messaging.chat_history",)),
    Route("PUT", "/chat/settings", h_chat_settings, ("messaging.set_history_saving",)),
    Route("POST", "/mail", h_mail_post, ("messaging.send_mail",)),
    Route("GET", "/mail", h_mail_list, ("messaging.list_mail",)),
    Route("GET", "/mail/{mail_id}", h_mail_get, ("messaging.read_mail",)),
    Route("DELETE", "/mail/{mail_id}", h_mail_delete, ("messaging.delete_mail",)),
    Route("POST", "/blob", h_blob_post, ("messaging.upload_blob",)),
    Route("GET", "/blob/{blob_id}", h_blob_get, ("messaging.fetch_blob",)),
    Route("POST", "/heartbeat", h_heartbeat, ("messaging.heartbeat",)),
    Route("GET", "/presence", h_presence, ("messaging.presence_of",)),
    Route("GET", "/events", h_events, ("gateway.events",)),
    Route("GET", "/feed", h_feed, ("content.friend_feed",)),
    Route("POST", "/comment", h_comment, ("content.comment",)),
    Route("POST", "/blog", h_blog_post, ("content.blog_write",)),
    Route("GET", "/blog", h_blog_list, ()),
    Route("GET", "/blog/{post_id}", h_blog_get, ("content.blog_view",)),
    Route("PUT", "/blog/{post_id}", h_blog_put, ("content.blog_edit",)),
    Route("POST", "/blog/{post_id}/publish", h_blog_publish, ("content.blog_publish",)),
    Route("DELETE", "/blog/{post_id}", h_blog_delete, ("content.blog_delete",)),
    Route("POST", "/album", h_album_post, ("content.album_create",)),
    Route("GET", "/album", h_album_list, ()),
    Route("DELETE", "/album/{album_id}", h_album_delete, ("content.album_delete",)),
    Route("POST", "/album/{album_id}/photos", h_photo_upload, ("content.photo_upload",)),
    Route("PUT", "/photo/{photo_id}", h_photo_put, ("content.photo_edit",)),
    Route("DELETE", "/photo/{photo_id}", h_photo_delete, ("content.photo_delete",)),
    Route("POST", "/visit", h_visit, ("content.record_visit",)),
    Route("GET", "/visitors", h_visitors, ("content.list_visitors",)),
    Route("GET", "/weather", h_weather, ("localinfo.weather",)),
    Route("GET", "/news", h_news, ("localinfo.news_feed",)),
    Route("POST", "/news/subscribe", h_news_subscribe, ("localinfo.subscribe_news",)),
    Route("POST", "/forum", h_forum_post, ("localinfo.forum_post",)),
    Route("GET", "/forum", h_forum_list, ("localinfo.forum_list",)),
    Route("GET", "/forum/queue", h_forum_queue, ()),
    Route("POST", "/forum/{post_id}/moderate", h_forum_moderate, ("localinfo.forum_moderate",)),
    Route("POST", "/forum/{post_id}/reply", h_forum_reply, ("localinfo.forum_reply",)),
    Route("GET", "/geocode", h_geocode, ("gateway.geocode",)),
    Route("GET", "/tiles/{layer}/{z}/{x}/{y}", h_tile, ("gateway.tile",)),
]

# Endpoints usable without a session token (the recovery flow included).
PUBLIC_ROUTES = {("POST", p) for p in
                 ("/register", "/activate", "/login", "/recover", "/redeem")}


def _json_bytes(payload: dict) -> bytes:
    return json.dumps(payload, ensure_ascii=False).encode("utf-8")


class GatewayHandler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server_version = "nearhub/0.1"
    ctx: ServerContext = None  # set by make_server

    # quiet request logging; errors still go to the logger
    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        if length > MAX_BODY:
            raise BadRequest("request body too large")
        return self.rfile.read(length) if length else b""

    def _respond(self, status: int, content_type: str, body: bytes):
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _respond_json(self, status: int, payload: dict):
        self._respond(status, "application/json; charset=utf-8", _json_bytes(payload))

    def _handle(self, method: str):
        parsed = urlparse(self.path)
        path = parsed.path
        try:
            if not path.startswith(API_PREFIX):
                return self._serve_static(method, path)
            sub = path[len(API_PREFIX):] or "/"
            for route in ROUTES:
                if route.method != method:
                    continue
                match = route.regex.match(sub)
                if match is None:
                    continue
                req = Request(
                    method=method,
                    path=path,
                    params=parse_qs(parsed.query),
                    headers={k.lower(): v for k, v in self.headers.items()},
                    raw_body=self._read_body(),
                    path_args=match.groupdict(),
                )
                auth = self.headers.get("Authorization", "")
                req.token = auth.removeprefix("Bearer ").strip()
                if route.auth:
                    # Resolve eagerly so missing tokens fail uniformly.
                    self.ctx.app._auth(req.token)
                result = route.handler(self.ctx, req)
                if isinstance(result, tuple):
                    status, content_type, body = result
                    return self._respond(status, content_type, body)
                return self._respond_json(200, {"ok": result})
            return self._respond_json(
                404, {"error": {"code": "NotFound", "message": f"no route {method} {path}"}}
            )
        except DomainError as exc:
            return self._respond_json(exc.http_status, {"error": exc.payload()})
        except (ValueError, KeyError, TypeError) as exc:
            err = BadRequest(f"{exc.__class__.__name__}: {exc}")
            return self._respond_json(err.http_status, {"error": err.payload()})
        except (BrokenPipeError, ConnectionResetError):
            raise
        except Exception:
            log.exception("internal error handling %s %s", method, path)
            return self._respond_json(
                500, {"error": {"code": "InternalError", "message": "unexpected failure"}}
            )

    def _serve_static(self, method: str, path: str):
        if method != "GET" or self.ctx.webui_dir is None:
            return self._respond_json(
                404, {"error": {"code": "NotFound", "message": f"no route {path}"}}
            )
        rel = path.lstrip("/") or "index.html"
        target = (self.ctx.webui_dir / rel).resolve()
        root = self.ctx.webui_dir.resolve()
        if not str(target).startswith(str(root)) or not target.is_file():
            return self._respond_json(
                404, {"error": {"code": "NotFound", "message": f"no file {path}"}}
            )
        media = _STATIC_TYPES.get(target.suffix, "application/octet-stream")
        return self._respond(200, media, target.read_bytes())

    def do_GET(self):
        self._handle("GET")

    def do_POST(self):
        self._handle("POST")

    def do_PUT(self):
        self._handle("PUT")

    def do_DELETE(self):
        self._handle("DELETE")


def make_server(app: App, tiles: TileService, listen_addr: str,
                webui_dir: str | None = None) -> ThreadingHTTPServer:
    host, _, port = listen_addr.rpartition(":")
    handler = type("BoundHandler", (GatewayHandler,),
                   {"ctx": ServerContext(app, tiles, webui_dir)})
    server = ThreadingHTTPServer((host or "127.0.0.1", int(port)), handler)
    server.daemon_threads = True
    return server


def serve_in_thread(server: ThreadingHTTPServer) -> threading.Thread:
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
