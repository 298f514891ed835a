"""Homepage content: friend news feed, blogs with drafts, albums/photos,
and the visitor trace.

Feed events form one global append-only sequence; a viewer's feed is
computed on read by filtering to friends (plus self), newest first.
Event timestamps are clamped monotone so (occurred_at, event_id) ordering
and plain event_id ordering agree.
"""
from __future__ import annotations

from .errors import (
    AlreadyPublished,
    NotVisible,
    TooLong,
    Unauthorized,
    UnknownAlbum,
    UnknownBlob,
)

COMMENT_LIMIT = 1024
VISITOR_CAP = 50

EVENT_KINDS = ("AvatarChanged", "BlogPublished", "PhotosUploaded", "ProfileUpdated")


class ContentStore:
    def __init__(self):
        self._events: list[dict] = []
        self._next_event = 1
        self._last_event_ts = 0
        self._blogs: dict[str, dict] = {}
        self._next_blog = 1
        self._albums: dict[str, dict] = {}
        self._next_album = 1
        self._photos: dict[str, dict] = {}
        self._next_photo = 1
        self._next_comment = 1
        self._visits: dict[str, list[dict]] = {}

    # -- feed events -------------------------------------------------------------

    def add_event(self, actor: str, actor_name: str, kind: str, subject: dict,
                  now: int) -> dict:
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown feed event kind {kind!r}")
        self._last_event_ts = max(self._last_event_ts, now)
        event = {
            "event_id": self._next_event,
            "actor": actor,
            "actor_username": actor_name,
            "kind": kind,
            "subject": subject,
            "occurred_at": self._last_event_ts,
            "comments": [],
        }
        self._next_event += 1
        self._events.append(event)
        return event

    def event(self, event_id: int) -> dict | None:
        for e in self._events:
            if e["event_id"] == event_id:
                return e
        return None

    def friend_feed(self, visible_actors: set[str], before_event_id: int | None,
                    limit: int) -> list[dict]:
        """Events by the given actors, newest first, event_id < before."""
        cutoff = before_event_id if before_event_id is not None else self._next_event
        page = [
            e for e in reversed(self._events)
            if e["event_id"] < cutoff and e["actor"] in visible_actors
        ]
        return [self._event_view(e) for e in page[: max(1, min(limit, 200))]]

    @staticmethod
    def _event_view(event: dict) -> dict:
        view = dict(event)
        view["comment_count"] = len(event["comments"])
        return view

    def _drop_events_for(self, kind: str, subject_match: dict) -> int:
        before = len(self._events)
        self._events = [
            e for e in self._events
            if not (e["kind"] == kind and all(e["subject"].get(k) == v for k, v in subject_match.items()))
        ]
        return before - len(self._events)

    # -- comments -------------------------------------------------------------------

    def append_comment(self, target: dict, author: str, author_name: str,
                       text: str, now: int) -> dict:
        if len(text) > COMMENT_LIMIT:
            raise TooLong(f"comment exceeds {COMMENT_LIMIT} chars")
        comment = {
            "comment_id": f"c{self._next_comment}",
            "author": author,
            "author_username": author_name,
            "text": text,
            "at": now,
        }
        self._next_comment += 1
        target["comments"].append(comment)
        return comment

    # -- blogs ----------------------------------------------------------------------

    def blog_write(self, author: str, title: str, body: str, now: int) -> dict:
        post = {
            "post_id": f"b{self._next_blog}",
            "author": author,
            "title": title,
            "body": body,
            "state": "Draft",
            "created_at": now,
            "published_at": None,
            "comments": [],
        }
        self._next_blog += 1
        self._blogs[post["post_id"]] = post
        return post

    def blog(self, post_id: str) -> dict | None:
        return self._blogs.get(post_id)

    def require_blog(self, post_id: str, author: str | None = None) -> dict:
        post = self._blogs.get(post_id)
        if post is None:
            raise NotVisible(f"no blog post {post_id!r}")
        if author is not None and post["author"] != author:
            raise Unauthorized("only the author may modify a blog post")
        return post

    def blog_view(self, viewer: str, post_id: str) -> dict:
        post = self._blogs.get(post_id)
        if post is None or (post["state"] == "Draft" and post["author"] != viewer):
            raise NotVisible(f"no visible blog post {post_id!r}")
        return post

    def blog_edit(self, author: str, post_id: str, title: str | None,
                  body: str | None) -> dict:
        post = self.require_blog(post_id, author)
        if title is not None:
            post["title"] = title
        if body is not None:
            post["body"] = body
        return post

    def blog_publish(self, author: str, post_id: str, now: int) -> dict:
        post = self.require_blog(post_id, author)
        if post["state"] == "Published":
            raise AlreadyPublished(f"{post_id!r} is already published")
        post["state"] = "Published"
        post["published_at"] = now
        return post

    def blog_delete(self, author: str, post_id: str) -> None:
        self.require_blog(post_id, author)
        del self._blogs[post_id]
        self._drop_events_for("BlogPublished", {"post_id": post_id})

    def blogs_by(self, author: str, include_drafts: bool) -> list[dict]:
        posts = [
            p for p in self._blogs.values()
            if p["author"] == author and (include_drafts or p["state"] == "Published")
        ]
        posts.sort(key=lambda p: (-p["created_at"], -int(p["post_id"][1:])))
        return posts

    # -- albums and photos -------------------------------------------------------------

    def album_create(self, owner: str, title: str, now: int) -> dict:
        album = {
            "album_id": f"a{self._next_album}",
            "owner": owner,
            "title": title,
            "created_at": now,
            "photos": [],
        }
        self._next_album += 1
        self._albums[album["album_id"]] = album
        return album

    def require_album(self, album_id: str, owner: str | None = None) -> dict:
        album = self._albums.get(album_id)
        if album is None:
            raise UnknownAlbum(f"no album {album_id!r}")
        if owner is not None and album["owner"] != owner:
            raise Unauthorized("only the owner may modify an album")
        return album

    def albums_of(self, owner: str) -> list[dict]:
        albums = [a for a in self._albums.values() if a["owner"] == owner]
        albums.sort(key=lambda a: int(a["album_id"][1:]))
        return [
            {**a, "photos": [self._photos[pid] for pid in a["photos"]]}
            for a in albums
        ]

    def photo_upload(self, owner: str, album_id: str, photos: list[dict],
                     blob_exists, now: int) -> list[dict]:
        """Add a batch of photos (each {blob_id, caption}) to an album."""
        album = self.require_album(album_id, owner)
        if not photos:
            raise ValueError("photo batch must not be empty")
        for item in photos:
            if not blob_exists(item["blob_id"]):
                raise UnknownBlob(f"no blob {item['blob_id']!r}")
        created = []
        for item in photos:
            photo = {
                "photo_id": f"p{self._next_photo}",
                "album_id": album_id,
                "blob_id": item["blob_id"],
                "caption": item.get("caption", ""),
                "uploaded_at": now,
                "comments": [],
            }
            self._next_photo += 1
            self._photos[photo["photo_id"]] = photo
            album["photos"].append(photo["photo_id"])
            created.append(photo)
        return created

    def photo(self, photo_id: str) -> dict | None:
        return self._photos.get(photo_id)

    def photo_edit(self, owner: str, photo_id: str, caption: str) -> dict:
        photo = self._photos.get(photo_id)
        if photo is None:
            raise NotVisible(f"no photo {photo_id!r}")
        self.require_album(photo["album_id"], owner)
        photo["caption"] = caption
        return photo

    def photo_delete(self, owner: str, photo_id: str) -> None:
        photo = self._photos.get(photo_id)
        if photo is None:
            raise NotVisible(f"no photo {photo_id!r}")
        album = self.require_album(photo["album_id"], owner)
        album["photos"].remove(photo_id)
        del self._photos[photo_id]

    def album_delete(self, owner: str, album_id: str) -> None:
        """Remove an album and its photos; blobs stay (content-addressed,
        possibly shared)."""
        album = self.require_album(album_id, owner)
        for pid in album["photos"]:
            del self._photos[pid]
        del self._albums[album_id]
        self._drop_events_for("PhotosUploaded", {"album_id": album_id})

    # -- visitor trace ---------------------------------------------------------------

    def record_visit(self, owner: str, visitor: str, visitor_name: str,
                     now: int) -> None:
        """Ring of the last 50 distinct visitors; revisits refresh recency;
        visiting your own page records nothing."""
        if owner == visitor:
            return
        ring = self._visits.setdefault(owner, [])
        ring[:] = [v for v in ring if v["visitor"] != visitor]
        ring.append({"visitor": visitor, "visitor_username": visitor_name,
                     "visited_at": now})
        if len(ring) > VISITOR_CAP:
            del ring[: len(ring) - VISITOR_CAP]

    def visitors_of(self, owner: str) -> list[dict]:
        return list(reversed(self._visits.get(owner, [])))

    # -- persistence --------------------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "events": self._events,
            "next_event": self._next_event,
            "last_event_ts": self._last_event_ts,
            "blogs": self._blogs,
            "next_blog": self._next_blog,
            "albums": self._albums,
            "next_album": self._next_album,
            "photos": self._photos,
            "next_photo": self._next_photo,
            "next_comment": self._next_comment,
            "visits": self._visits,
        }

    def load_dict(self, data: dict) -> None:
        self.__init__()
        self._events = data["events"]
        self._next_event = int(data["next_event"])
        self._last_event_ts = int(data["last_event_ts"])
        self._blogs = data["blogs"]
        self._next_blog = int(data["next_blog"])
        self._albums = data["albums"]
        self._next_album = int(data["next_album"])
        self._photos = data["photos"]
        self._next_photo = int(data["next_photo"])
        self._next_comment = int(data["next_comment"])
        self._visits = data["visits"]
