"""Application core: composes every store into one deterministic state
machine behind the write-ahead-logged engine, and exposes the operations
the gateway and CLI call.

Mutations are named operations whose args carry *everything* nondeterministic
(timestamps, tokens, SMS codes, password digests), so replaying the log
rebuilds byte-identical state. Reads never touch the log.
"""
from __future__ import annotations

import base64
import secrets
import threading
import time
from dataclasses import dataclass
from datetime import date as date_cls
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

from .errors import BadRequest, NoFixForViewer, NotFriends, NotVisible
from .geomath import GeoPoint, haversine
from .geostore import PoiCategory, SpatialStore
from .identity import IdentityStore, hash_password, validate_registration
from .localization import (
    Beacon,
    Fix,
    FixMethod,
    RangeMeasurement,
    TdoaMeasurement,
    best_fix,
    fix_from_dict,
    fix_to_dict,
    multilaterate_tdoa,
    proximity_fix,
    trilaterate,
)
from .content import ContentStore
from .gateway.gazetteer import Gazetteer
from .localinfo import ForumStore, NewsStore, SyntheticWeather, weather_report
from .messaging import MessagingStore
from .social import SocialStore, filter_profile, location_visible, score_candidates
from .wal import StateEngine

DEFAULT_NEARBY_RADIUS_M = 5000.0


def _packaged(name: str) -> Path:
    return Path(str(resources.files("nearhub") / "data" / name))


@dataclass
class AppConfig:
    data_dir: str | None = None
    gazetteer_path: str | None = None
    poi_path: str | None = None
    news_path: str | None = None
    provider_seed: int = 42
    session_ttl_hours: float = 24.0
    geohash_precision: int = 6
    snapshot_every: int = 1000
    scrypt_n: int = 2**14
    liveness_window_ms: int = 60_000


class SecureTokens:
    """Production randomness: unguessable session tokens, 6-digit codes."""

    def token(self) -> str:
        # Leading "t" keeps tokens from starting with "-", which trips up
        # shells and option parsers; entropy stays 128 bits.
        return "t" + secrets.token_urlsafe(16)

    def code6(self) -> str:
        return f"{secrets.randbelow(10 ** 6):06d}"


class SequentialTokens:
    """Deterministic token source for tests and demos."""

    def __init__(self, prefix: str = "tok"):
        self.prefix = prefix
        self._n = 0

    def token(self) -> str:
        self._n += 1
        return f"{self.prefix}-{self._n:06d}"

    def code6(self) -> str:
        self._n += 1
        return f"{self._n % 10 ** 6:06d}"


class MemoryOutbox:
    """SMS transport that keeps messages in memory (tests)."""

    def __init__(self):
        self.messages: list[tuple[int, str, str]] = []

    def send(self, now_ms: int, phone: str, text: str) -> None:
        self.messages.append((now_ms, phone, text))


class OutboxFile:
    """Default SMS transport: one line per message, tab separated
    ISO-8601 timestamp, phone, text."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)

    def send(self, now_ms: int, phone: str, text: str) -> None:
        stamp = datetime.fromtimestamp(now_ms / 1000.0, tz=timezone.utc).isoformat()
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(f"{stamp}\t{phone}\t{text}\n")


class AppState:
    """Every store the operation log governs."""

    def __init__(self, geohash_precision: int = 6, liveness_window_ms: int = 60_000):
        self.identity = IdentityStore()
        self.social = SocialStore()
        self.geostore = SpatialStore(geohash_precision)
        self.messaging = MessagingStore(liveness_window_ms)
        self.content = ContentStore()
        self.news = NewsStore()
        self.forum = ForumStore()

    def to_snapshot(self) -> dict:
        return {
            "identity": self.identity.to_dict(),
            "social": self.social.to_dict(),
            "geostore": self.geostore.to_dict(),
            "messaging": self.messaging.to_dict(),
            "content": self.content.to_dict(),
            "news": self.news.to_dict(),
            "forum": self.forum.to_dict(),
        }

    def load_snapshot(self, data: dict) -> None:
        self.identity.load_dict(data["identity"])
        self.social.load_dict(data["social"])
        self.geostore.load_dict(data["geostore"])
        self.messaging.load_dict(data["messaging"])
        self.content.load_dict(data["content"])
        self.news.load_dict(data["news"])
        self.forum.load_dict(data["forum"])


# ---------------------------------------------------------------------------
# operations (the WAL vocabulary)
# ---------------------------------------------------------------------------


def _username(state: AppState, user_id: str) -> str:
    return state.identity.require_user(user_id).username


def _feed_fanout(state: AppState, actor: str, event: dict, now: int) -> None:
    summary = {
        "event_id": event["event_id"],
        "kind": event["kind"],
        "actor_username": event["actor_username"],
        "occurred_at": event["occurred_at"],
    }
    for friend in sorted(state.social.friends_of(actor)):
        state.messaging.push_event(friend, "feed", {"event": summary}, now)


def _presence_fanout(state: AppState, user_id: str, online: bool, now: int) -> None:
    state.geostore.set_online(user_id, online)
    payload = {
        "user_id": user_id,
        "username": _username(state, user_id),
        "online": online,
    }
    for friend in sorted(state.social.friends_of(user_id)):
        state.messaging.push_event(friend, "presence", dict(payload), now)


def _op_register(state: AppState, a: dict):
    rec = state.identity.register(a["fields"], a["digest"], a["code"], a["now"])
    state.social.init_user(rec.user_id)
    text = f"Your activation code is {a['code']}"
    return (
        {"user_id": rec.user_id, "username": rec.username},
        [("sms", rec.phone, text)],
    )


def _op_activate(state: AppState, a: dict):
    rec = state.identity.activate(a["username"], a["code"], a["now"])
    return {"username": rec.username, "activated": True}, []


def _op_login(state: AppState, a: dict):
    uid = state.identity.resolve_username(a["username"])
    sess = state.identity.create_session(uid, a["token"], a["now"], a["ttl_ms"])
    if state.messaging.heartbeat(uid, a["now"]):
        _presence_fanout(state, uid, True, a["now"])
    return (
        {
            "token": sess.token,
            "user_id": uid,
            "username": a["username"],
            "expires_at": sess.expires_at,
            "is_admin": state.identity.require_user(uid).is_admin,
        },
        [],
    )


def _op_recover(state: AppState, a: dict):
    rec = state.identity.start_recovery(a["username"], a["code"], a["now"])
    text = f"Your password recovery code is {a['code']}"
    return {"username": rec.username, "dispatched": True}, [("sms", rec.phone, text)]


def _op_redeem(state: AppState, a: dict):
    rec = state.identity.redeem_recovery(a["username"], a["code"], a["digest"], a["now"])
    return {"username": rec.username, "password_changed": True}, []


def _op_profile_update(state: AppState, a: dict):
    uid = a["user_id"]
    changed = state.identity.update_profile(uid, a["section"], a["fields"])
    uname = _username(state, uid)
    if "avatar" in changed:
        event = state.content.add_event(
            uid, uname, "AvatarChanged", {"avatar": changed["avatar"]}, a["now"]
        )
        _feed_fanout(state, uid, event, a["now"])
    rest = sorted(set(changed) - {"avatar"})
    if rest:
        event = state.content.add_event(
            uid, uname, "ProfileUpdated",
            {"section": a["section"], "fields": rest}, a["now"],
        )
        _feed_fanout(state, uid, event, a["now"])
    return {"changed": changed, "profile": state.identity.profile_dict(uid)}, []


def _op_admin_create(state: AppState, a: dict):
    rec = state.identity.create_admin(a["username"], a.get("digest"))
    if not state.social.has_user(rec.user_id):
        state.social.init_user(rec.user_id)
    return {"user_id": rec.user_id, "username": rec.username, "is_admin": True}, []


def _op_friend_request(state: AppState, a: dict):
    state.identity.require_user(a["target_id"])
    status = state.social.request_friend(a["user_id"], a["target_id"])
    return {"status": status, "target": _username(state, a["target_id"])}, []


def _op_friend_accept(state: AppState, a: dict):
    state.identity.require_user(a["requester_id"])
    state.social.accept_friend(a["user_id"], a["requester_id"])
    return {"status": "accepted", "friend": _username(state, a["requester_id"])}, []


def _op_friend_remove(state: AppState, a: dict):
    state.social.remove_friend(a["user_id"], a["friend_id"])
    return {"removed": _username(state, a["friend_id"])}, []


def _op_friend_move_group(state: AppState, a: dict):
    state.social.move_to_group(a["user_id"], a["friend_id"], a["group"])
    return {"friend": _username(state, a["friend_id"]), "group": a["group"]}, []


def _op_friend_set_alias(state: AppState, a: dict):
    state.social.set_alias(a["user_id"], a["friend_id"], a.get("alias"))
    return {"friend": _username(state, a["friend_id"]), "alias": a.get("alias")}, []


def _op_group_manage(state: AppState, a: dict):
    uid, action = a["user_id"], a["action"]
    if action == "create":
        state.social.create_group(uid, a["name"])
    elif action == "rename":
        state.social.rename_group(uid, a["name"], a["new_name"])
    elif action == "delete":
        state.social.delete_group(uid, a["name"])
    else:
        raise ValueError(f"unknown group action {action!r}")
    groups = [
        {"group_id": g.group_id, "name": g.name} for g in state.social.groups_of(uid)
    ]
    return {"groups": groups}, []


def _op_privacy_set(state: AppState, a: dict):
    tiers = state.social.set_privacy(a["user_id"], a["tiers"])
    return {"privacy": tiers}, []


def _op_position_submit(state: AppState, a: dict):
    uid = a["user_id"]
    state.identity.require_user(uid)
    fix = fix_from_dict(a["fix"])
    prev = state.geostore.upsert_position(uid, fix)
    state.geostore.set_online(uid, state.messaging.is_online(uid, a["now"]))
    return (
        {"fix": fix_to_dict(fix), "previous": fix_to_dict(prev) if prev else None},
        [],
    )


def _op_chat_send(state: AppState, a: dict):
    sender, recipient = a["user_id"], a["recipient_id"]
    state.identity.require_user(recipient)
    if not state.social.is_friend(sender, recipient):
        raise NotFriends("chat is limited to friends")
    message = state.messaging.send_chat(
        sender,
        _username(state, sender),
        recipient,
        a["now"],
        text=a.get("text"),
        blob_id=a.get("blob_id"),
        recipient_online=state.messaging.is_online(recipient, a["now"]),
    )
    return dict(message), []


def _op_chat_set_history(state: AppState, a: dict):
    enabled = state.messaging.set_history_saving(a["user_id"], a["enabled"])
    return {"history_saving": enabled}, []


def _op_events_ack(state: AppState, a: dict):
    state.messaging.ack_events(a["user_id"], a["upto"])
    return {"acked": a["upto"]}, []


def _op_mail_send(state: AppState, a: dict):
    sender, recipient = a["user_id"], a["recipient_id"]
    state.identity.require_user(recipient)
    mail = state.messaging.send_mail(
        sender, _username(state, sender), recipient,
        a["subject"], a["body"], a["now"],
    )
    return dict(mail), []


def _op_mail_read(state: AppState, a: dict):
    return state.messaging.mark_read(a["user_id"], a["mail_id"]), []


def _op_mail_delete(state: AppState, a: dict):
    state.messaging.delete_mail(a["user_id"], a["mail_id"])
    return {"deleted": a["mail_id"]}, []


def _op_blob_put(state: AppState, a: dict):
    data = base64.b64decode(a["data_b64"])
    blob_id = state.messaging.put_blob(data, a["media"])
    return {"blob_id": blob_id, "bytes": len(data)}, []


def _op_comment_add(state: AppState, a: dict):
    uid, kind, target_id = a["user_id"], a["target_kind"], a["target_id"]
    if kind == "event":
        target = state.content.event(int(target_id))
        if target is None:
            raise NotVisible(f"no feed event {target_id!r}")
        visible = target["actor"] == uid or state.social.is_friend(uid, target["actor"])
        if not visible:
            raise NotVisible("feed events are visible to friends only")
    elif kind == "blog":
        target = state.content.blog_view(uid, str(target_id))
    elif kind == "photo":
        target = state.content.photo(str(target_id))
        if target is None:
            raise NotVisible(f"no photo {target_id!r}")
    else:
        raise ValueError(f"unknown comment target kind {kind!r}")
    comment = state.content.append_comment(
        target, uid, _username(state, uid), a["text"], a["now"]
    )
    return dict(comment), []


def _op_blog_write(state: AppState, a: dict):
    post = state.content.blog_write(a["user_id"], a["title"], a["body"], a["now"])
    return dict(post), []


def _op_blog_edit(state: AppState, a: dict):
    post = state.content.blog_edit(
        a["user_id"], a["post_id"], a.get("title"), a.get("body")
    )
    return dict(post), []


def _op_blog_publish(state: AppState, a: dict):
    uid = a["user_id"]
    post = state.content.blog_publish(uid, a["post_id"], a["now"])
    event = state.content.add_event(
        uid, _username(state, uid), "BlogPublished",
        {"post_id": post["post_id"], "title": post["title"]}, a["now"],
    )
    _feed_fanout(state, uid, event, a["now"])
    return dict(post), []


def _op_blog_delete(state: AppState, a: dict):
    state.content.blog_delete(a["user_id"], a["post_id"])
    return {"deleted": a["post_id"]}, []


def _op_album_create(state: AppState, a: dict):
    album = state.content.album_create(a["user_id"], a["title"], a["now"])
    return dict(album), []


def _op_album_delete(state: AppState, a: dict):
    state.content.album_delete(a["user_id"], a["album_id"])
    return {"deleted": a["album_id"]}, []


def _op_photo_upload(state: AppState, a: dict):
    uid = a["user_id"]
    created = state.content.photo_upload(
        uid, a["album_id"], a["photos"], state.messaging.has_blob, a["now"]
    )
    event = state.content.add_event(
        uid, _username(state, uid), "PhotosUploaded",
        {"album_id": a["album_id"], "count": len(created)}, a["now"],
    )
    _feed_fanout(state, uid, event, a["now"])
    return {"photos": [dict(p) for p in created]}, []


def _op_photo_edit(state: AppState, a: dict):
    photo = state.content.photo_edit(a["user_id"], a["photo_id"], a["caption"])
    return dict(photo), []


def _op_photo_delete(state: AppState, a: dict):
    state.content.photo_delete(a["user_id"], a["photo_id"])
    return {"deleted": a["photo_id"]}, []


def _op_visit_record(state: AppState, a: dict):
    owner = a["owner_id"]
    state.identity.require_user(owner)
    state.content.record_visit(
        owner, a["user_id"], _username(state, a["user_id"]), a["now"]
    )
    return {"recorded": True}, []


def _op_news_subscribe(state: AppState, a: dict):
    sections = state.news.subscribe(a["user_id"], a["sections"])
    return {"sections": sections}, []


def _op_forum_post(state: AppState, a: dict):
    uid = a["user_id"]
    post = state.forum.post(
        uid, _username(state, uid), a["city"], a["title"], a["body"], a["now"]
    )
    return dict(post), []


def _op_forum_moderate(state: AppState, a: dict):
    is_admin = state.identity.require_user(a["user_id"]).is_admin
    post = state.forum.moderate(is_admin, a["post_id"], a["approve"])
    return dict(post), []


def _op_forum_reply(state: AppState, a: dict):
    uid = a["user_id"]
    reply = state.forum.reply(
        uid, _username(state, uid), a["post_id"], a["body"], a["now"]
    )
    return dict(reply), []


def _op_heartbeat(state: AppState, a: dict):
    uid = a["user_id"]
    if state.messaging.heartbeat(uid, a["now"]):
        _presence_fanout(state, uid, True, a["now"])
    return state.messaging.presence_view(uid, a["now"]), []


def _op_presence_sweep(state: AppState, a: dict):
    flipped = state.messaging.sweep_offline(a["now"])
    for uid in flipped:
        _presence_fanout(state, uid, False, a["now"])
    return {"offline": flipped}, []


_OPS = {
    "register": _op_register,
    "activate": _op_activate,
    "login": _op_login,
    "recover": _op_recover,
    "redeem": _op_redeem,
    "profile_update": _op_profile_update,
    "admin_create": _op_admin_create,
    "friend_request": _op_friend_request,
    "friend_accept": _op_friend_accept,
    "friend_remove": _op_friend_remove,
    "friend_move_group": _op_friend_move_group,
    "friend_set_alias": _op_friend_set_alias,
    "group_manage": _op_group_manage,
    "privacy_set": _op_privacy_set,
    "position_submit": _op_position_submit,
    "chat_send": _op_chat_send,
    "chat_set_history": _op_chat_set_history,
    "events_ack": _op_events_ack,
    "mail_send": _op_mail_send,
    "mail_read": _op_mail_read,
    "mail_delete": _op_mail_delete,
    "blob_put": _op_blob_put,
    "comment_add": _op_comment_add,
    "blog_write": _op_blog_write,
    "blog_edit": _op_blog_edit,
    "blog_publish": _op_blog_publish,
    "blog_delete": _op_blog_delete,
    "album_create": _op_album_create,
    "album_delete": _op_album_delete,
    "photo_upload": _op_photo_upload,
    "photo_edit": _op_photo_edit,
    "photo_delete": _op_photo_delete,
    "visit_record": _op_visit_record,
    "news_subscribe": _op_news_subscribe,
    "forum_post": _op_forum_post,
    "forum_moderate": _op_forum_moderate,
    "forum_reply": _op_forum_reply,
    "heartbeat": _op_heartbeat,
    "presence_sweep": _op_presence_sweep,
}


def apply_operation(state: AppState, name: str, args: dict):
    try:
        op = _OPS[name]
    except KeyError:
        raise ValueError(f"unknown operation {name!r}") from None
    return op(state, args)


# ---------------------------------------------------------------------------
# facade
# ---------------------------------------------------------------------------


class App:
    """Everything the gateway, CLI, and tests talk to."""

    def __init__(self, config: AppConfig | None = None, *, clock=None,
                 tokens=None, sms=None, weather=None):
        self.config = config or AppConfig()
        self.clock = clock or (lambda: int(time.time() * 1000))
        self.tokens = tokens or SecureTokens()
        self.gazetteer = Gazetteer.from_file(
            self.config.gazetteer_path or _packaged("gazetteer.tsv")
        )
        state = AppState(self.config.geohash_precision,
                         self.config.liveness_window_ms)
        state.geostore.load_poi_file(self.config.poi_path or _packaged("poi.tsv"))
        state.news.load_news_file(self.config.news_path or _packaged("news.tsv"))
        if sms is not None:
            self.sms = sms
        elif self.config.data_dir:
            self.sms = OutboxFile(Path(self.config.data_dir) / "outbox.txt")
        else:
            self.sms = MemoryOutbox()
        self.weather_provider = weather or SyntheticWeather(self.config.provider_seed)
        self.engine = StateEngine(
            state,
            apply_operation,
            data_dir=self.config.data_dir,
            snapshot_every=self.config.snapshot_every,
            effect_handler=self._dispatch_effect,
        )
        self._sweep_lock = threading.Lock()

    # -- plumbing ---------------------------------------------------------------

    def close(self) -> None:
        self.engine.close()

    def _dispatch_effect(self, effect: tuple) -> None:
        kind, phone, text = effect
        if kind == "sms":
            self.sms.send(self.clock(), phone, text)

    def _hash(self, password: str) -> str:
        return hash_password(password, n=self.config.scrypt_n)

    def _now(self) -> int:
        return int(self.clock())

    def _auth(self, token: str) -> str:
        now = self._now()
        return self.engine.read(lambda s: s.identity.resolve_session(token, now))

    def _resolve(self, username: str) -> str:
        return self.engine.read(lambda s: s.identity.resolve_username(username))

    def _session_ttl_ms(self) -> int:
        return int(self.config.session_ttl_hours * 3600 * 1000)

    # -- identity ------------------------------------------------------------------

    def register(self, fields: dict) -> dict:
        validate_registration(fields)
        digest = self._hash(fields["password"])
        safe = {k: v for k, v in fields.items() if k != "password"}
        return self.engine.submit("register", {
            "fields": safe, "digest": digest,
            "code": self.tokens.code6(), "now": self._now(),
        })

    def activate(self, username: str, code: str) -> dict:
        return self.engine.submit("activate", {
            "username": username, "code": code, "now": self._now(),
        })

    def login(self, username: str, password: str) -> dict:
        self.engine.read(lambda s: s.identity.check_credentials(username, password))
        return self.engine.submit("login", {
            "username": username, "token": self.tokens.token(),
            "now": self._now(), "ttl_ms": self._session_ttl_ms(),
        })

    def recover(self, username: str) -> dict:
        return self.engine.submit("recover", {
            "username": username, "code": self.tokens.code6(), "now": self._now(),
        })

    def redeem(self, username: str, code: str, new_password: str) -> dict:
        if not new_password:
            raise BadRequest("new password must not be empty")
        return self.engine.submit("redeem", {
            "username": username, "code": code,
            "digest": self._hash(new_password), "now": self._now(),
        })

    def update_profile(self, token: str, section: str, fields: dict) -> dict:
        uid = self._auth(token)
        return self.engine.submit("profile_update", {
            "user_id": uid, "section": section, "fields": fields, "now": self._now(),
        })

    def create_admin(self, username: str, password: str | None) -> dict:
        digest = self._hash(password) if password else None
        return self.engine.submit("admin_create", {
            "username": username, "digest": digest, "now": self._now(),
        })

    def profile_view(self, token: str, username: str | None = None) -> dict:
        viewer = self._auth(token)

        def fn(s: AppState):
            owner = s.identity.resolve_username(username) if username else viewer
            profile = s.identity.profile_dict(owner)
            rel = self._relationship(s, viewer, owner)
            return filter_profile(profile, s.social.privacy_of(owner), rel)

        return self.engine.read(fn)

    # -- social ---------------------------------------------------------------------

    @staticmethod
    def _relationship(s: AppState, viewer: str, owner: str) -> str:
        if viewer == owner:
            return "owner"
        return "friend" if s.social.is_friend(viewer, owner) else "stranger"

    def friend_request(self, token: str, target_username: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("friend_request", {
            "user_id": uid, "target_id": self._resolve(target_username),
        })

    def friend_accept(self, token: str, requester_username: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("friend_accept", {
            "user_id": uid, "requester_id": self._resolve(requester_username),
        })

    def friend_remove(self, token: str, friend_username: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("friend_remove", {
            "user_id": uid, "friend_id": self._resolve(friend_username),
        })

    def friend_move_group(self, token: str, friend_username: str, group: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("friend_move_group", {
            "user_id": uid, "friend_id": self._resolve(friend_username), "group": group,
        })

    def friend_set_alias(self, token: str, friend_username: str,
                         alias: str | None) -> dict:
        uid = self._auth(token)
        return self.engine.submit("friend_set_alias", {
            "user_id": uid, "friend_id": self._resolve(friend_username), "alias": alias,
        })

    def friends_list(self, token: str) -> list[dict]:
        uid = self._auth(token)
        now = self._now()

        def fn(s: AppState):
            out = []
            for fid, edge in sorted(s.social.friends_of(uid).items()):
                rec = s.identity.require_user(fid)
                out.append({
                    "username": rec.username,
                    "nickname": rec.nickname,
                    "avatar": rec.avatar,
                    "alias": edge.alias,
                    "group": s.social.group_name(uid, edge.group_id),
                    "online": s.messaging.is_online(fid, now),
                    "last_seen": s.messaging.presence_view(fid, now)["last_seen"],
                })
            out.sort(key=lambda row: row["username"])
            return out

        return self.engine.read(fn)

    def requests_list(self, token: str) -> dict:
        uid = self._auth(token)

        def fn(s: AppState):
            return {
                "incoming": [
                    s.identity.require_user(u).username
                    for u in s.social.incoming_requests(uid)
                ],
                "outgoing": [
                    s.identity.require_user(u).username
                    for u in s.social.outgoing_requests(uid)
                ],
            }

        return self.engine.read(fn)

    def groups_list(self, token: str) -> list[dict]:
        uid = self._auth(token)
        return self.engine.read(lambda s: [
            {"group_id": g.group_id, "name": g.name} for g in s.social.groups_of(uid)
        ])

    def manage_group(self, token: str, action: str, name: str,
                     new_name: str | None = None) -> dict:
        uid = self._auth(token)
        return self.engine.submit("group_manage", {
            "user_id": uid, "action": action, "name": name, "new_name": new_name,
        })

    def privacy_get(self, token: str) -> dict:
        uid = self._auth(token)
        return self.engine.read(lambda s: s.social.privacy_of(uid))

    def privacy_set(self, token: str, tiers: dict) -> dict:
        uid = self._auth(token)
        return self.engine.submit("privacy_set", {"user_id": uid, "tiers": tiers})

    def recommend(self, token: str, k: int = 10) -> list[dict]:
        uid = self._auth(token)

        def fn(s: AppState):
            me = s.identity.require_user(uid)
            viewer_rec = s.geostore.get(uid)
            viewer_pos = viewer_rec.fix.position if viewer_rec else None
            friends = set(s.social.friends_of(uid))
            candidates = []
            for other in s.identity.users():
                if other.user_id == uid or not other.activated:
                    continue
                if other.user_id in friends:
                    continue
                candidates.append((other.user_id, other.username, other.interests))

            def distance(candidate_id: str):
                rec = s.geostore.get(candidate_id)
                if viewer_pos is None or rec is None:
                    return None
                return haversine(viewer_pos, rec.fix.position)

            scores = score_candidates(me.interests, distance, candidates, k)
            return [
                {
                    "username": sc.username,
                    "score": sc.score,
                    "shared_interest_count": sc.shared_interest_count,
                }
                for sc in scores
            ]

        return self.engine.read(fn)

    # -- positioning and nearby --------------------------------------------------------

    def submit_position(self, token: str, payload: dict) -> dict:
        uid = self._auth(token)
        now = self._now()
        fix = self._solve_measurements(payload, now)
        return self.engine.submit("position_submit", {
            "user_id": uid, "fix": fix_to_dict(fix), "now": now,
        })

    @staticmethod
    def _parse_beacon(b: dict) -> Beacon:
        return Beacon(
            id=str(b["id"]),
            position=GeoPoint(float(b["lat"]), float(b["lon"])),
            kind=b["kind"],
            range_radius=float(b.get("range_radius", 1000.0)),
        )

    def _solve_measurements(self, payload: dict, now: int) -> Fix:
        candidates: list[Fix] = []
        errors: list[Exception] = []
        if payload.get("gps"):
            gps = payload["gps"]
            candidates.append(Fix(
                position=GeoPoint(float(gps["lat"]), float(gps["lon"])),
                accuracy=max(10.0, float(gps.get("accuracy", 10.0))),
                method=FixMethod.TRILATERATION,
                residual_rms=0.0,
                timestamp=now,
            ))
        if payload.get("ranges"):
            try:
                measurements = [
                    RangeMeasurement(self._parse_beacon(m["beacon"]),
                                     float(m["range"]), float(m["sigma"]))
                    for m in payload["ranges"]
                ]
                candidates.append(trilaterate(measurements, timestamp=now))
            except Exception as exc:
                errors.append(exc)
        if payload.get("tdoa"):
            try:
                measurements = [
                    TdoaMeasurement(
                        self._parse_beacon(m["reference"]),
                        self._parse_beacon(m["beacon"]),
                        float(m["delta_t"]), float(m["sigma_t"]),
                    )
                    for m in payload["tdoa"]
                ]
                candidates.append(multilaterate_tdoa(measurements, timestamp=now))
            except Exception as exc:
                errors.append(exc)
        if payload.get("proximity"):
            try:
                for b in payload["proximity"]:
                    candidates.append(proximity_fix(self._parse_beacon(b), timestamp=now))
            except Exception as exc:
                errors.append(exc)
        if not candidates:
            if errors:
                raise errors[0]
            raise BadRequest("no measurements provided")
        return best_fix(candidates)

    def nearby(self, token: str, radius_m: float = DEFAULT_NEARBY_RADIUS_M,
               friends_only: bool = False, online_only: bool = False) -> list[dict]:
        """Privacy-filtered users around the viewer's stored fix."""
        viewer = self._auth(token)

        def fn(s: AppState):
            me = s.geostore.get(viewer)
            if me is None:
                raise NoFixForViewer("submit a position before querying nearby users")
            hits = s.geostore.query_radius(me.fix.position, radius_m, online_only)
            out = []
            for rec, distance in hits:
                if rec.user_id == viewer:
                    continue
                rel = self._relationship(s, viewer, rec.user_id)
                if friends_only and rel != "friend":
                    continue
                policy = s.social.privacy_of(rec.user_id)
                if not location_visible(policy, rel):
                    continue
                profile = filter_profile(
                    s.identity.profile_dict(rec.user_id), policy, rel
                )
                out.append({
                    "username": profile["username"],
                    "nickname": profile["nickname"],
                    "distance_m": distance,
                    "online": s.messaging.is_online(rec.user_id, self._now()),
                    "fix": fix_to_dict(rec.fix),
                    "profile": profile,
                })
            return out

        return self.engine.read(fn)

    def knn(self, token: str, k: int = 10) -> list[dict]:
        viewer = self._auth(token)
        if k < 1:
            raise BadRequest("k must be >= 1")

        def fn(s: AppState):
            me = s.geostore.get(viewer)
            if me is None:
                raise NoFixForViewer("submit a position before querying neighbors")
            # Over-fetch so privacy filtering still fills k slots when it can.
            hits = s.geostore.query_knn(me.fix.position, k + 16)
            out = []
            for rec, distance in hits:
                if rec.user_id == viewer:
                    continue
                rel = self._relationship(s, viewer, rec.user_id)
                policy = s.social.privacy_of(rec.user_id)
                if not location_visible(policy, rel):
                    continue
                out.append({
                    "username": s.identity.require_user(rec.user_id).username,
                    "distance_m": distance,
                    "fix": fix_to_dict(rec.fix),
                })
                if len(out) == k:
                    break
            return out

        return self.engine.read(fn)

    def poi_search(self, token: str, radius_m: float = DEFAULT_NEARBY_RADIUS_M,
                   category: str | None = None, name: str | None = None,
                   lat: float | None = None, lon: float | None = None) -> list[dict]:
        viewer = self._auth(token)
        cat = PoiCategory(category) if category else None

        def fn(s: AppState):
            if lat is not None and lon is not None:
                center = GeoPoint(lat, lon)
            else:
                me = s.geostore.get(viewer)
                if me is None:
                    raise NoFixForViewer("no stored fix; pass lat/lon explicitly")
                center = me.fix.position
            return [
                {
                    "poi_id": hit.poi.poi_id,
                    "name": hit.poi.name,
                    "category": hit.poi.category.value,
                    "lat": hit.poi.position.lat,
                    "lon": hit.poi.position.lon,
                    "distance_m": hit.distance_m,
                }
                for hit in s.geostore.search_poi(center, radius_m, cat, name)
            ]

        return self.engine.read(fn)

    # -- messaging -----------------------------------------------------------------------

    def send_chat(self, token: str, to_username: str, text: str | None = None,
                  blob_id: str | None = None) -> dict:
        uid = self._auth(token)
        return self.engine.submit("chat_send", {
            "user_id": uid, "recipient_id": self._resolve(to_username),
            "text": text, "blob_id": blob_id, "now": self._now(),
        })

    def set_history_saving(self, token: str, enabled: bool) -> dict:
        uid = self._auth(token)
        return self.engine.submit("chat_set_history", {
            "user_id": uid, "enabled": bool(enabled),
        })

    def chat_history(self, token: str, peer_username: str,
                     before_id: int | None = None, limit: int = 50) -> list[dict]:
        uid = self._auth(token)
        peer = self._resolve(peer_username)
        return self.engine.read(
            lambda s: s.messaging.chat_history(uid, uid, peer, before_id, limit)
        )

    def send_mail(self, token: str, to_username: str, subject: str, body: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("mail_send", {
            "user_id": uid, "recipient_id": self._resolve(to_username),
            "subject": subject, "body": body, "now": self._now(),
        })

    def list_mail(self, token: str, box: str = "inbox") -> dict:
        uid = self._auth(token)
        return self.engine.read(lambda s: {
            "mails": s.messaging.list_mail(uid, box),
            "unread": s.messaging.unread_count(uid),
        })

    def get_mail(self, token: str, mail_id: str) -> dict:
        uid = self._auth(token)
        mail = self.engine.read(lambda s: s.messaging.get_mail(uid, mail_id))
        if mail["to"] == uid and not mail["read"]:
            mail = self.engine.submit("mail_read", {"user_id": uid, "mail_id": mail_id})
        return mail

    def delete_mail(self, token: str, mail_id: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("mail_delete", {"user_id": uid, "mail_id": mail_id})

    def upload_blob(self, token: str, data: bytes, media_hint: str) -> dict:
        self._auth(token)
        return self.engine.submit("blob_put", {
            "data_b64": base64.b64encode(data).decode("ascii"), "media": media_hint,
        })

    def fetch_blob(self, token: str, blob_id: str) -> tuple[bytes, str]:
        self._auth(token)
        return self.engine.read(lambda s: s.messaging.get_blob(blob_id))

    def heartbeat(self, token: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("heartbeat", {"user_id": uid, "now": self._now()})

    def presence_of(self, token: str, usernames: list[str]) -> list[dict]:
        self._auth(token)
        now = self._now()

        def fn(s: AppState):
            out = []
            for name in usernames:
                rec = s.identity.user_by_name(name)
                if rec is None:
                    out.append({"username": name, "exists": False,
                                "online": False, "last_seen": None})
                else:
                    view = s.messaging.presence_view(rec.user_id, now)
                    view["username"] = name
                    out.append(view)
            return out

        return self.engine.read(fn)

    def presence_sweep(self) -> dict:
        return self.engine.submit("presence_sweep", {"now": self._now()})

    def maybe_sweep(self) -> dict | None:
        """Run one offline sweep if anyone's heartbeat lapsed."""
        with self._sweep_lock:
            now = self._now()
            if self.engine.read(lambda s: s.messaging.sweep_due(now)):
                return self.engine.submit("presence_sweep", {"now": now})
        return None

    def events(self, token: str, since: int = 0, timeout_s: float = 25.0,
               wait: bool = True) -> dict:
        """Long-poll the caller's event stream past ``since``.

        ``since`` doubles as the delivery acknowledgment: everything at or
        below it counts as handed over (transit-only chat is purged)."""
        uid = self._auth(token)
        since = max(0, int(since))
        if since > self.engine.read(lambda s: s.messaging.acked_seq(uid)):
            self.engine.submit("events_ack", {"user_id": uid, "upto": since})
        deadline = time.monotonic() + max(0.0, min(timeout_s, 25.0))
        while True:
            batch = self.engine.read(
                lambda s: (s.messaging.events_after(uid, since),
                           s.messaging.latest_seq(uid))
            )
            events, latest = batch
            if events or not wait or time.monotonic() >= deadline:
                return {"events": events, "latest": latest}
            self.engine.wait_event(min(0.5, max(0.05, deadline - time.monotonic())))

    # -- content -------------------------------------------------------------------------

    def feed(self, token: str, before: int | None = None, limit: int = 20) -> list[dict]:
        uid = self._auth(token)

        def fn(s: AppState):
            actors = set(s.social.friends_of(uid)) | {uid}
            return s.content.friend_feed(actors, before, limit)

        return self.engine.read(fn)

    def comment(self, token: str, target_kind: str, target_id, text: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("comment_add", {
            "user_id": uid, "target_kind": target_kind,
            "target_id": target_id, "text": text, "now": self._now(),
        })

    def blog_write(self, token: str, title: str, body: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("blog_write", {
            "user_id": uid, "title": title, "body": body, "now": self._now(),
        })

    def blog_edit(self, token: str, post_id: str, title: str | None = None,
                  body: str | None = None) -> dict:
        uid = self._auth(token)
        return self.engine.submit("blog_edit", {
            "user_id": uid, "post_id": post_id, "title": title, "body": body,
        })

    def blog_publish(self, token: str, post_id: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("blog_publish", {
            "user_id": uid, "post_id": post_id, "now": self._now(),
        })

    def blog_delete(self, token: str, post_id: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("blog_delete", {"user_id": uid, "post_id": post_id})

    def blog_view(self, token: str, post_id: str) -> dict:
        uid = self._auth(token)
        return self.engine.read(lambda s: dict(s.content.blog_view(uid, post_id)))

    def blog_list(self, token: str, author_username: str | None = None) -> list[dict]:
        uid = self._auth(token)

        def fn(s: AppState):
            author = s.identity.resolve_username(author_username) if author_username else uid
            posts = s.content.blogs_by(author, include_drafts=author == uid)
            return [dict(p) for p in posts]

        return self.engine.read(fn)

    def album_create(self, token: str, title: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("album_create", {
            "user_id": uid, "title": title, "now": self._now(),
        })

    def album_delete(self, token: str, album_id: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("album_delete", {"user_id": uid, "album_id": album_id})

    def photo_upload(self, token: str, album_id: str, photos: list[dict]) -> dict:
        uid = self._auth(token)
        return self.engine.submit("photo_upload", {
            "user_id": uid, "album_id": album_id, "photos": photos, "now": self._now(),
        })

    def photo_edit(self, token: str, photo_id: str, caption: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("photo_edit", {
            "user_id": uid, "photo_id": photo_id, "caption": caption,
        })

    def photo_delete(self, token: str, photo_id: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("photo_delete", {"user_id": uid, "photo_id": photo_id})

    def albums(self, token: str, owner_username: str | None = None) -> list[dict]:
        uid = self._auth(token)

        def fn(s: AppState):
            owner = s.identity.resolve_username(owner_username) if owner_username else uid
            return s.content.albums_of(owner)

        return self.engine.read(fn)

    def record_visit(self, token: str, owner_username: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("visit_record", {
            "user_id": uid, "owner_id": self._resolve(owner_username), "now": self._now(),
        })

    def visitors(self, token: str) -> list[dict]:
        uid = self._auth(token)
        return self.engine.read(lambda s: s.content.visitors_of(uid))

    # -- local information ------------------------------------------------------------------

    def weather(self, token: str, city_query: str, date: str | None = None) -> dict:
        self._auth(token)
        entry = self.gazetteer.geocode(city_query)
        if date:
            start = date_cls.fromisoformat(date)
        else:
            start = datetime.fromtimestamp(self._now() / 1000.0, tz=timezone.utc).date()
        return weather_report(self.weather_provider, entry.display, start)

    def subscribe_news(self, token: str, sections: list[str]) -> dict:
        uid = self._auth(token)
        return self.engine.submit("news_subscribe", {
            "user_id": uid, "sections": sections,
        })

    def news_feed(self, token: str, before: int | None = None, limit: int = 20) -> dict:
        uid = self._auth(token)

        def fn(s: AppState):
            city = self._current_city(s, uid)
            return {
                "city": city,
                "sections": s.news.subscriptions_of(uid),
                "items": s.news.feed(uid, city, before, limit),
            }

        return self.engine.read(fn)

    def _current_city(self, s: AppState, uid: str) -> str | None:
        rec = s.geostore.get(uid)
        if rec is not None:
            entry = self.gazetteer.reverse(rec.fix.position)
            if entry is not None:
                return entry.city
        profile_city = s.identity.require_user(uid).city
        return profile_city or None

    def forum_post(self, token: str, title: str, body: str) -> dict:
        uid = self._auth(token)
        city = self.engine.read(lambda s: self._current_city(s, uid)) or ""
        return self.engine.submit("forum_post", {
            "user_id": uid, "city": city, "title": title, "body": body,
            "now": self._now(),
        })

    def forum_list(self, token: str) -> list[dict]:
        uid = self._auth(token)

        def fn(s: AppState):
            city = self._current_city(s, uid)
            return [dict(p) for p in s.forum.listing(uid, city)]

        return self.engine.read(fn)

    def forum_queue(self, token: str) -> list[dict]:
        uid = self._auth(token)
        return self.engine.read(lambda s: [
            dict(p)
            for p in s.forum.pending_queue(s.identity.require_user(uid).is_admin)
        ])

    def forum_moderate(self, token: str, post_id: str, action: str) -> dict:
        uid = self._auth(token)
        if action not in ("approve", "reject"):
            raise BadRequest("action must be 'approve' or 'reject'")
        return self.engine.submit("forum_moderate", {
            "user_id": uid, "post_id": post_id, "approve": action == "approve",
        })

    def forum_reply(self, token: str, post_id: str, body: str) -> dict:
        uid = self._auth(token)
        return self.engine.submit("forum_reply", {
            "user_id": uid, "post_id": post_id, "body": body, "now": self._now(),
        })

    # -- gateway helpers -----------------------------------------------------------------------

    def geocode(self, token: str, query: str) -> dict:
        self._auth(token)
        entry = self.gazetteer.geocode(query)
        return {
            "city": entry.city,
            "country": entry.country,
            "lat": entry.centroid.lat,
            "lon": entry.centroid.lon,
        }
