"""Chat, internal mail, blob transfer, presence, and per-user event streams.

Delivery model: every user has an ordered event stream with its own
sequence numbers. Sending chat or mail appends envelopes to the recipient's
stream; clients long-poll the stream and acknowledge by the last sequence
they have seen. Acknowledged transit-only chat (sent while either party had
history saving off) is purged, so nothing of it outlives delivery.

Presence: a user is online while some session heartbeated within the last
60 seconds. Reads compute liveness from the raw timestamps; the online
*flag* only flips inside heartbeat/sweep operations so that flips can emit
events and replay deterministically.
"""
from __future__ import annotations

import base64
import hashlib

from .errors import (
    BodyTooLarge,
    NotYourMail,
    TooLarge,
    Unauthorized,
    UnknownBlob,
)

CHAT_BODY_LIMIT = 4096
MAIL_SUBJECT_LIMIT = 256
MAIL_BODY_LIMIT = 64 * 1024
BLOB_LIMIT = 5 * 1024 * 1024

LIVENESS_WINDOW_MS = 60_000
HEARTBEAT_HINT_MS = 20_000

STREAM_RETENTION = 10_000
OFFLINE_QUEUE_CAP = 1000


def conversation_key(a: str, b: str) -> str:
    return "|".join(sorted((a, b)))


class MessagingStore:
    def __init__(self, liveness_window_ms: int = LIVENESS_WINDOW_MS):
        self.liveness_window_ms = liveness_window_ms
        self._conversations: dict[str, dict] = {}
        self._history_saving: dict[str, bool] = {}
        self._mails: dict[str, dict] = {}
        self._next_mail = 1
        self._blobs: dict[str, dict] = {}
        self._presence: dict[str, dict] = {}
        self._streams: dict[str, dict] = {}

    # -- event streams ---------------------------------------------------------

    def _stream(self, user_id: str) -> dict:
        return self._streams.setdefault(
            user_id, {"next_seq": 1, "acked": 0, "entries": []}
        )

    def push_event(self, user_id: str, kind: str, payload: dict, at: int,
                   transient: bool = False) -> dict:
        stream = self._stream(user_id)
        entry = {"seq": stream["next_seq"], "kind": kind, "at": at, **payload}
        if transient:
            entry["transient"] = True
        stream["next_seq"] += 1
        stream["entries"].append(entry)
        if len(stream["entries"]) > STREAM_RETENTION:
            del stream["entries"][: len(stream["entries"]) - STREAM_RETENTION]
        return entry

    def events_after(self, user_id: str, since: int, limit: int = 500) -> list[dict]:
        stream = self._streams.get(user_id)
        if stream is None:
            return []
        return [e for e in stream["entries"] if e["seq"] > since][:limit]

    def latest_seq(self, user_id: str) -> int:
        stream = self._streams.get(user_id)
        return stream["next_seq"] - 1 if stream else 0

    def ack_events(self, user_id: str, upto: int) -> None:
        """Record delivery up to a sequence: flips delivered flags and
        purges transit-only chat that has now been handed over."""
        stream = self._streams.get(user_id)
        if stream is None or upto <= stream["acked"]:
            return
        stream["acked"] = upto
        kept = []
        for entry in stream["entries"]:
            if entry["seq"] <= upto:
                if entry["kind"] == "chat":
                    entry["message"]["delivered"] = True
                    conv = self._conversations.get(entry["message"]["conversation"])
                    if conv is not None:
                        for msg in conv["messages"]:
                            if msg["msg_id"] == entry["message"]["msg_id"]:
                                msg["delivered"] = True
                                break
                if entry.get("transient"):
                    continue
            kept.append(entry)
        stream["entries"] = kept

    def acked_seq(self, user_id: str) -> int:
        stream = self._streams.get(user_id)
        return stream["acked"] if stream else 0

    # -- chat --------------------------------------------------------------------

    def history_saving(self, user_id: str) -> bool:
        return self._history_saving.get(user_id, True)

    def set_history_saving(self, user_id: str, enabled: bool) -> bool:
        self._history_saving[user_id] = bool(enabled)
        return self._history_saving[user_id]

    def send_chat(self, sender: str, sender_name: str, recipient: str, now: int,
                  text: str | None = None, blob_id: str | None = None,
                  recipient_online: bool = False) -> dict:
        """Append a message to the conversation and the recipient's stream.

        Friendship must be checked by the caller (the stores do not know
        the graph). Returns the message record.
        """
        if (text is None) == (blob_id is None):
            raise ValueError("exactly one of text or blob_id required")
        if text is not None and len(text) > CHAT_BODY_LIMIT:
            raise BodyTooLarge(f"chat body exceeds {CHAT_BODY_LIMIT} chars")
        if blob_id is not None and blob_id not in self._blobs:
            raise UnknownBlob(f"no blob {blob_id!r}")
        key = conversation_key(sender, recipient)
        conv = self._conversations.setdefault(
            key, {"next_msg_id": 1, "messages": []}
        )
        persist = self.history_saving(sender) and self.history_saving(recipient)
        message = {
            "msg_id": conv["next_msg_id"],
            "conversation": key,
            "sender": sender,
            "sender_username": sender_name,
            "body": text,
            "blob_id": blob_id,
            "sent_at": now,
            "delivered": recipient_online,
        }
        conv["next_msg_id"] += 1
        if persist:
            conv["messages"].append(message)
        entry_message = message if persist else dict(message)
        self.push_event(recipient, "chat", {"message": entry_message}, now,
                        transient=not persist)
        self.push_event(sender, "chat_echo", {"message": dict(message)}, now,
                        transient=not persist)
        self._enforce_queue_cap(recipient, key, now)
        return message

    def _enforce_queue_cap(self, recipient: str, key: str, now: int) -> None:
        stream = self._stream(recipient)
        acked = stream["acked"]
        backlog = [
            e for e in stream["entries"]
            if e["kind"] == "chat" and e["seq"] > acked
            and e["message"]["conversation"] == key
        ]
        if len(backlog) <= OFFLINE_QUEUE_CAP:
            return
        drop = backlog[: len(backlog) - OFFLINE_QUEUE_CAP]
        drop_seqs = {e["seq"] for e in drop}
        stream["entries"] = [e for e in stream["entries"] if e["seq"] not in drop_seqs]
        for entry in stream["entries"]:
            if entry["kind"] == "chat_gap" and entry["conversation"] == key and entry["seq"] > acked:
                entry["dropped"] += len(drop)
                break
        else:
            self.push_event(recipient, "chat_gap",
                            {"conversation": key, "dropped": len(drop)}, now)

    def chat_history(self, requester: str, a: str, b: str,
                     before_id: int | None, limit: int) -> list[dict]:
        """Messages of conversation (a, b) with msg_id < before_id, newest
        first. Participants only."""
        if requester not in (a, b):
            raise Unauthorized("not a participant of this conversation")
        conv = self._conversations.get(conversation_key(a, b))
        if conv is None:
            return []
        cutoff = before_id if before_id is not None else conv["next_msg_id"]
        page = [m for m in reversed(conv["messages"]) if m["msg_id"] < cutoff]
        return [dict(m) for m in page[: max(1, min(limit, 200))]]

    def conversation_messages(self, a: str, b: str) -> list[dict]:
        """Raw persisted history; used by tests for store inspection."""
        conv = self._conversations.get(conversation_key(a, b))
        return list(conv["messages"]) if conv else []

    # -- mail ----------------------------------------------------------------------

    def send_mail(self, sender: str, sender_name: str, recipient: str,
                  subject: str, body: str, now: int) -> dict:
        if len(subject) > MAIL_SUBJECT_LIMIT:
            raise BodyTooLarge(f"subject exceeds {MAIL_SUBJECT_LIMIT} chars")
        if len(body.encode("utf-8")) > MAIL_BODY_LIMIT:
            raise BodyTooLarge(f"body exceeds {MAIL_BODY_LIMIT} bytes")
        mail_id = f"m{self._next_mail}"
        self._next_mail += 1
        mail = {
            "mail_id": mail_id,
            "from": sender,
            "from_username": sender_name,
            "to": recipient,
            "subject": subject,
            "body": body,
            "sent_at": now,
            "read": False,
            "deleted_by": [],
        }
        self._mails[mail_id] = mail
        self.push_event(recipient, "mail",
                        {"mail_id": mail_id, "from": sender,
                         "from_username": sender_name, "subject": subject}, now)
        return mail

    def list_mail(self, user_id: str, box: str) -> list[dict]:
        if box == "inbox":
            mails = [m for m in self._mails.values()
                     if m["to"] == user_id and user_id not in m["deleted_by"]]
        elif box == "sent":
            mails = [m for m in self._mails.values()
                     if m["from"] == user_id and user_id not in m["deleted_by"]]
        else:
            raise ValueError("box must be 'inbox' or 'sent'")
        mails.sort(key=lambda m: (-m["sent_at"], -int(m["mail_id"][1:])))
        return [dict(m) for m in mails]

    def unread_count(self, user_id: str) -> int:
        return sum(
            1 for m in self._mails.values()
            if m["to"] == user_id and not m["read"] and user_id not in m["deleted_by"]
        )

    def get_mail(self, user_id: str, mail_id: str) -> dict:
        mail = self._mails.get(mail_id)
        if mail is None or user_id not in (mail["from"], mail["to"]) \
                or user_id in mail["deleted_by"]:
            raise NotYourMail(f"no mail {mail_id!r} in your boxes")
        return dict(mail)

    def mark_read(self, user_id: str, mail_id: str) -> dict:
        mail = self._mails.get(mail_id)
        if mail is None or mail["to"] != user_id or user_id in mail["deleted_by"]:
            raise NotYourMail(f"no mail {mail_id!r} in your inbox")
        mail["read"] = True
        return dict(mail)

    def delete_mail(self, user_id: str, mail_id: str) -> None:
        mail = self._mails.get(mail_id)
        if mail is None or user_id not in (mail["from"], mail["to"]) \
                or user_id in mail["deleted_by"]:
            raise NotYourMail(f"no mail {mail_id!r} in your boxes")
        mail["deleted_by"].append(user_id)
        endpoints = {mail["from"], mail["to"]}
        if endpoints.issubset(set(mail["deleted_by"])):
            del self._mails[mail_id]

    # -- blobs ------------------------------------------------------------------------

    def put_blob(self, data: bytes, media_hint: str) -> str:
        if len(data) > BLOB_LIMIT:
            raise TooLarge(f"blob exceeds {BLOB_LIMIT} bytes")
        blob_id = hashlib.sha256(data).hexdigest()
        if blob_id not in self._blobs:
            self._blobs[blob_id] = {"data": data, "media": media_hint or "application/octet-stream"}
        return blob_id

    def get_blob(self, blob_id: str) -> tuple[bytes, str]:
        blob = self._blobs.get(blob_id)
        if blob is None:
            raise UnknownBlob(f"no blob {blob_id!r}")
        return blob["data"], blob["media"]

    def has_blob(self, blob_id: str) -> bool:
        return blob_id in self._blobs

    # -- presence ----------------------------------------------------------------------

    def heartbeat(self, user_id: str, now: int) -> bool:
        """Refresh liveness; returns True when this flipped the user online."""
        state = self._presence.setdefault(
            user_id, {"last_heartbeat": 0, "online": False, "last_seen": 0}
        )
        flipped = not state["online"]
        state.update(last_heartbeat=now, last_seen=now, online=True)
        return flipped

    def sweep_offline(self, now: int) -> list[str]:
        """Flip users whose heartbeat lapsed; returns who went offline."""
        flipped = []
        for user_id, state in sorted(self._presence.items()):
            if state["online"] and now - state["last_heartbeat"] >= self.liveness_window_ms:
                state["online"] = False
                state["last_seen"] = state["last_heartbeat"]
                flipped.append(user_id)
        return flipped

    def sweep_due(self, now: int) -> bool:
        return any(
            s["online"] and now - s["last_heartbeat"] >= self.liveness_window_ms
            for s in self._presence.values()
        )

    def is_online(self, user_id: str, now: int) -> bool:
        state = self._presence.get(user_id)
        return bool(state) and now - state["last_heartbeat"] < self.liveness_window_ms

    def presence_view(self, user_id: str, now: int, exists: bool = True) -> dict:
        state = self._presence.get(user_id)
        return {
            "user_id": user_id,
            "exists": exists,
            "online": self.is_online(user_id, now) if state else False,
            "last_seen": state["last_seen"] if state else None,
        }

    # -- persistence --------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "conversations": self._conversations,
            "history_saving": self._history_saving,
            "mails": self._mails,
            "next_mail": self._next_mail,
            "blobs": {
                bid: {"data": base64.b64encode(b["data"]).decode("ascii"),
                      "media": b["media"]}
                for bid, b in self._blobs.items()
            },
            "presence": self._presence,
            "streams": self._streams,
        }

    def load_dict(self, data: dict) -> None:
        self.__init__(self.liveness_window_ms)
        self._conversations = data["conversations"]
        self._history_saving = {u: bool(v) for u, v in data["history_saving"].items()}
        self._mails = data["mails"]
        self._next_mail = int(data["next_mail"])
        self._blobs = {
            bid: {"data": base64.b64decode(b["data"]), "media": b["media"]}
            for bid, b in data["blobs"].items()
        }
        self._presence = data["presence"]
        self._streams = data["streams"]
