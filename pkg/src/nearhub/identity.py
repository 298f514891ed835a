"""Accounts, sessions, profile sections, and the SMS-code flows.

The store is a deterministic state machine: anything random (session
tokens, SMS codes) or time-dependent is generated by the caller and passed
in, so replaying the same calls rebuilds the same state. Passwords arrive
pre-digested; plaintext never reaches the store or the operation log.
"""
from __future__ import annotations

import hashlib
import hmac
import os
import re
from dataclasses import dataclass, field

from .errors import (
    AlreadyActivated,
    BadCode,
    BadCredentials,
    DuplicateUsername,
    Expired,
    ImmutableField,
    InvalidEmail,
    InvalidPhone,
    MissingField,
    NotActivated,
    Unauthorized,
    UnknownUser,
)

GENDERS = ("Male", "Female", "Unspecified")

CODE_TTL_MS = 15 * 60 * 1000
SESSION_TTL_MS_DEFAULT = 24 * 3600 * 1000

REQUIRED_FIELDS = ("username", "password", "nickname", "email", "phone", "gender")

# Profile sections and the fields they carry. Usernames are immutable and
# live outside every section.
SECTION_FIELDS = {
    "basic": ("nickname", "gender", "birthday", "status_text", "interests", "avatar"),
    "contact": ("email", "phone"),
    "location": ("city", "country"),
}

_PHONE_RE = re.compile(r"^[0-9]{5,20}$")


def validate_registration(fields: dict, require_password: bool = True) -> None:
    """Field-level checks shared by the API edge and the CLI."""
    for name in REQUIRED_FIELDS:
        if name == "password" and not require_password:
            continue
        if not str(fields.get(name) or "").strip():
            raise MissingField(f"required field {name!r} is empty")
    if "@" not in fields["email"]:
        raise InvalidEmail(f"{fields['email']!r} is not an email address")
    if not _PHONE_RE.match(fields["phone"]):
        raise InvalidPhone("phone must be 5-20 digits")
    if fields["gender"] not in GENDERS:
        raise ValueError(f"gender must be one of {GENDERS}")


# -- password digests ---------------------------------------------------------

def hash_password(password: str, *, n: int = 2**14, r: int = 8, p: int = 1,
                  salt: bytes | None = None) -> str:
    """Salted scrypt digest, self-describing so parameters can evolve."""
    if salt is None:
        salt = os.urandom(16)
    key = hashlib.scrypt(password.encode(), salt=salt, n=n, r=r, p=p, dklen=32)
    return f"scrypt${n}${r}${p}${salt.hex()}${key.hex()}"


def verify_password(digest: str, password: str) -> bool:
    try:
        scheme, n, r, p, salt_hex, key_hex = digest.split("$")
        if scheme != "scrypt":
            return False
        key = hashlib.scrypt(
            password.encode(), salt=bytes.fromhex(salt_hex),
            n=int(n), r=int(r), p=int(p), dklen=32,
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(key.hex(), key_hex)


# -- records ------------------------------------------------------------------

@dataclass
class UserRecord:
    user_id: str
    username: str
    password_digest: str
    nickname: str
    email: str
    phone: str
    gender: str
    birthday: str | None = None
    avatar: str | None = None
    interests: set[str] = field(default_factory=set)
    status_text: str = ""
    city: str = ""
    country: str = ""
    is_admin: bool = False
    activated: bool = False


@dataclass
class Session:
    token: str
    user_id: str
    created_at: int
    expires_at: int


@dataclass
class CodeRecord:
    code: str
    expires_at: int
    consumed: bool = False


class IdentityStore:
    def __init__(self):
        self._users: dict[str, UserRecord] = {}
        self._by_username: dict[str, str] = {}
        self._sessions: dict[str, Session] = {}
        self._activation: dict[str, CodeRecord] = {}
        self._recovery: dict[str, CodeRecord] = {}
        self._next_uid = 1

    # -- lookups -------------------------------------------------------------

    def user_by_name(self, username: str) -> UserRecord | None:
        uid = self._by_username.get(username)
        return self._users.get(uid) if uid else None

    def user(self, user_id: str) -> UserRecord | None:
        return self._users.get(user_id)

    def require_user(self, user_id: str) -> UserRecord:
        rec = self._users.get(user_id)
        if rec is None:
            raise UnknownUser(f"no such user id {user_id!r}")
        return rec

    def resolve_username(self, username: str) -> str:
        uid = self._by_username.get(username)
        if uid is None:
            raise UnknownUser(f"no such user {username!r}")
        return uid

    def users(self):
        return self._users.values()

    def resolve_session(self, token: str, now: int) -> str:
        sess = self._sessions.get(token or "")
        if sess is None or sess.expires_at <= now:
            raise Unauthorized("missing or expired session token")
        return sess.user_id

    # -- registration and activation ------------------------------------------

    def register(self, fields: dict, password_digest: str, activation_code: str,
                 now: int) -> UserRecord:
        # The password arrives pre-digested; everything else is validated here.
        validate_registration(fields, require_password=False)
        if not password_digest:
            raise MissingField("required field 'password' is empty")
        username = fields["username"]
        if username in self._by_username:
            raise DuplicateUsername(f"username {username!r} is taken")
        user_id = f"u{self._next_uid}"
        self._next_uid += 1
        rec = UserRecord(
            user_id=user_id,
            username=username,
            password_digest=password_digest,
            nickname=fields["nickname"],
            email=fields["email"],
            phone=fields["phone"],
            gender=fields["gender"],
            birthday=fields.get("birthday") or None,
            interests={t.strip().lower() for t in fields.get("interests", []) if t.strip()},
            status_text=fields.get("status_text", ""),
            city=fields.get("city", ""),
            country=fields.get("country", ""),
        )
        self._users[user_id] = rec
        self._by_username[username] = user_id
        self._activation[user_id] = CodeRecord(activation_code, now + CODE_TTL_MS)
        return rec

    def activate(self, username: str, code: str, now: int) -> UserRecord:
        rec = self.user_by_name(username)
        if rec is None:
            raise UnknownUser(f"no such user {username!r}")
        stored = self._activation.get(rec.user_id)
        # Consumed-code reuse reads as a bad code, not as AlreadyActivated.
        if stored is None or stored.consumed or stored.code != code:
            raise BadCode("activation code does not match")
        if stored.expires_at <= now:
            raise Expired("activation code expired")
        if rec.activated:
            raise AlreadyActivated(f"{username!r} is already activated")
        stored.consumed = True
        rec.activated = True
        return rec

    # -- sessions -------------------------------------------------------------

    def check_credentials(self, username: str, password: str) -> UserRecord:
        """Read-side verification; raises the login error family."""
        rec = self.user_by_name(username)
        if rec is None or not verify_password(rec.password_digest, password):
            raise BadCredentials("wrong username or password", recovery_hint=True)
        if not rec.activated:
            raise NotActivated(f"{username!r} has not confirmed the SMS code")
        return rec

    def create_session(self, user_id: str, token: str, now: int,
                       ttl_ms: int = SESSION_TTL_MS_DEFAULT) -> Session:
        self.require_user(user_id)
        sess = Session(token=token, user_id=user_id, created_at=now,
                       expires_at=now + ttl_ms)
        self._sessions[token] = sess
        return sess

    def drop_sessions(self, user_id: str) -> int:
        stale = [t for t, s in self._sessions.items() if s.user_id == user_id]
        for t in stale:
            del self._sessions[t]
        return len(stale)

    # -- password recovery ------------------------------------------------------

    def start_recovery(self, username: str, code: str, now: int) -> UserRecord:
        rec = self.user_by_name(username)
        if rec is None:
            raise UnknownUser(f"no such user {username!r}")
        self._recovery[rec.user_id] = CodeRecord(code, now + CODE_TTL_MS)
        return rec

    def redeem_recovery(self, username: str, code: str, new_digest: str,
                        now: int) -> UserRecord:
        rec = self.user_by_name(username)
        if rec is None:
            raise UnknownUser(f"no such user {username!r}")
        stored = self._recovery.get(rec.user_id)
        if stored is None or stored.consumed or stored.code != code:
            raise BadCode("recovery code does not match")
        if stored.expires_at <= now:
            raise Expired("recovery code expired")
        stored.consumed = True
        rec.password_digest = new_digest
        self.drop_sessions(rec.user_id)
        return rec

    # -- profile ----------------------------------------------------------------

    def update_profile(self, user_id: str, section: str, fields: dict) -> dict:
        """Apply edits to one section; returns {field: new value} actually
        changed. Raises ImmutableField for username/user_id."""
        rec = self.require_user(user_id)
        if section not in SECTION_FIELDS:
            raise ValueError(f"unknown profile section {section!r}")
        for name in ("username", "user_id"):
            if name in fields:
                raise ImmutableField(f"{name} cannot be changed")
        allowed = SECTION_FIELDS[section]
        unknown = set(fields) - set(allowed)
        if unknown:
            raise ValueError(f"fields {sorted(unknown)} not in section {section!r}")
        # Validate everything before touching the record so a rejected edit
        # leaves no partial mutation behind.
        prepared = {}
        for name, value in fields.items():
            if name == "gender" and value not in GENDERS:
                raise ValueError(f"gender must be one of {GENDERS}")
            if name == "email" and "@" not in str(value):
                raise InvalidEmail(f"{value!r} is not an email address")
            if name == "phone" and not _PHONE_RE.match(str(value)):
                raise InvalidPhone("phone must be 5-20 digits")
            if name == "interests":
                value = {t.strip().lower() for t in value if t.strip()}
            prepared[name] = value
        changed = {}
        for name, value in prepared.items():
            if getattr(rec, name) != value:
                setattr(rec, name, value)
                changed[name] = sorted(value) if isinstance(value, set) else value
        return changed

    def create_admin(self, username: str, password_digest: str | None) -> UserRecord:
        """Create-or-promote an activated administrator account."""
        rec = self.user_by_name(username)
        if rec is None:
            if not password_digest:
                raise MissingField("password required to create a new admin")
            user_id = f"u{self._next_uid}"
            self._next_uid += 1
            rec = UserRecord(
                user_id=user_id,
                username=username,
                password_digest=password_digest,
                nickname=username,
                email=f"{username}@admin.invalid",
                phone="00000",
                gender="Unspecified",
                activated=True,
            )
            self._users[user_id] = rec
            self._by_username[username] = user_id
        rec.is_admin = True
        rec.activated = True
        if password_digest:
            rec.password_digest = password_digest
        return rec

    # -- views --------------------------------------------------------------------

    def profile_dict(self, user_id: str) -> dict:
        """Full (unredacted) profile, sectioned the way the API serves it."""
        rec = self.require_user(user_id)
        return {
            "user_id": rec.user_id,
            "username": rec.username,
            "nickname": rec.nickname,
            "avatar": rec.avatar,
            "interests": sorted(rec.interests),
            "is_admin": rec.is_admin,
            "activated": rec.activated,
            "sections": {
                "basic": {
                    "gender": rec.gender,
                    "birthday": rec.birthday,
                    "status_text": rec.status_text,
                },
                "contact": {"email": rec.email, "phone": rec.phone},
                "location": {"city": rec.city, "country": rec.country},
            },
        }

    # -- persistence -----------------------------------------------------------------

    def to_dict(self) -> dict:
        def code(c: CodeRecord) -> dict:
            return {"code": c.code, "expires_at": c.expires_at, "consumed": c.consumed}

        return {
            "next_uid": self._next_uid,
            "users": {
                uid: {
                    "username": u.username,
                    "password_digest": u.password_digest,
                    "nickname": u.nickname,
                    "email": u.email,
                    "phone": u.phone,
                    "gender": u.gender,
                    "birthday": u.birthday,
                    "avatar": u.avatar,
                    "interests": sorted(u.interests),
                    "status_text": u.status_text,
                    "city": u.city,
                    "country": u.country,
                    "is_admin": u.is_admin,
                    "activated": u.activated,
                }
                for uid, u in self._users.items()
            },
            "sessions": {
                t: {"user_id": s.user_id, "created_at": s.created_at,
                    "expires_at": s.expires_at}
                for t, s in self._sessions.items()
            },
            "activation": {uid: code(c) for uid, c in self._activation.items()},
            "recovery": {uid: code(c) for uid, c in self._recovery.items()},
        }

    def load_dict(self, data: dict) -> None:
        self.__init__()
        self._next_uid = int(data["next_uid"])
        for uid, u in data["users"].items():
            rec = UserRecord(
                user_id=uid,
                username=u["username"],
                password_digest=u["password_digest"],
                nickname=u["nickname"],
                email=u["email"],
                phone=u["phone"],
                gender=u["gender"],
                birthday=u["birthday"],
                avatar=u["avatar"],
                interests=set(u["interests"]),
                status_text=u["status_text"],
                city=u["city"],
                country=u["country"],
                is_admin=u["is_admin"],
                activated=u["activated"],
            )
            self._users[uid] = rec
            self._by_username[rec.username] = uid
        for t, s in data["sessions"].items():
            self._sessions[t] = Session(t, s["user_id"], s["created_at"], s["expires_at"])
        for uid, c in data["activation"].items():
            self._activation[uid] = CodeRecord(c["code"], c["expires_at"], c["consumed"])
        for uid, c in data["recovery"].items():
            self._recovery[uid] = CodeRecord(c["code"], c["expires_at"], c["consumed"])
