"""City-scoped local information: 3-day weather, sectioned news with
subscriptions, and a moderated forum.

Weather and news providers are pluggable. The shipped weather provider is
a deterministic synthetic generator (a pure function of city, date, and a
configured seed) so that reports are reproducible in tests and demos.
"""
from __future__ import annotations

import hashlib
from datetime import date as date_cls
from datetime import timedelta

from .errors import NotAdmin, NotApproved, ProviderUnavailable, UnknownPost, UnknownSection

NEWS_SECTIONS = ("Sports", "Health", "Politics", "Local", "Tech")

RAIN_UMBRELLA_THRESHOLD = 50.0
COLD_CLOTHES_THRESHOLD_C = 10.0


def suggestions_for(day: dict) -> list[str]:
    """Advice lines derived purely from the forecast fields."""
    out = []
    if day["rain_probability"] > RAIN_UMBRELLA_THRESHOLD:
        out.append("remember to bring umbrella")
    if day["temp_high"] < COLD_CLOTHES_THRESHOLD_C:
        out.append("take more clothes")
    return out


class SyntheticWeather:
    """Deterministic forecast generator: hash(city, date, seed) drives
    every field, so identical queries return identical reports."""

    def __init__(self, seed: int = 0):
        self.seed = seed

    def forecast(self, city_key: str, start: date_cls) -> list[dict]:
        days = []
        for offset in range(3):
            day = start + timedelta(days=offset)
            digest = hashlib.sha256(
                f"{city_key.casefold()}|{day.isoformat()}|{self.seed}".encode()
            ).digest()

            def unit(i: int) -> float:
                return int.from_bytes(digest[2 * i:2 * i + 2], "big") / 65535.0

            temp_low = round(-5.0 + 25.0 * unit(0), 1)
            days.append({
                "day_offset": offset,
                "date": day.isoformat(),
                "temp_low": temp_low,
                "temp_high": round(temp_low + 2.0 + 10.0 * unit(1), 1),
                "sunshine_hours": round(12.0 * unit(2), 1),
                "humidity": round(20.0 + 80.0 * unit(3), 0),
                "wind_speed": round(20.0 * unit(4), 1),
                "rain_probability": round(100.0 * unit(5), 0),
            })
        return days


def weather_report(provider, city_key: str, start: date_cls) -> dict:
    """Three-day report with suggestions attached to each day."""
    try:
        days = provider.forecast(city_key, start)
    except Exception as exc:
        raise ProviderUnavailable(f"weather provider failed: {exc}") from exc
    if len(days) != 3:
        raise ProviderUnavailable("weather provider must return exactly 3 days")
    for day in days:
        if day["temp_low"] > day["temp_high"]:
            raise ProviderUnavailable("provider returned temp_low > temp_high")
        day["suggestions"] = suggestions_for(day)
    return {"city": city_key, "days": days}


class NewsStore:
    """Seeded news items plus per-user section subscriptions."""

    def __init__(self):
        self._items: list[dict] = []
        self._subscriptions: dict[str, list[str]] = {}

    def load_news_file(self, path) -> int:
        """UTF-8 TSV: section, city, headline, body, ISO-8601 timestamp."""
        from datetime import datetime

        count = 0
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 5:
                    raise ValueError(f"{path}:{line_no}: expected 5 tab-separated fields")
                section, city, headline, body, stamp = parts
                if section not in NEWS_SECTIONS:
                    raise ValueError(f"{path}:{line_no}: unknown section {section!r}")
                published = int(datetime.fromisoformat(stamp).timestamp() * 1000)
                self.add_item(section, city, headline, body, published)
                count += 1
        return count

    def add_item(self, section: str, city: str, headline: str, body: str,
                 published_at: int) -> dict:
        if section not in NEWS_SECTIONS:
            raise UnknownSection(f"unknown news section {section!r}")
        item = {
            "item_id": len(self._items) + 1,
            "section": section,
            "city": city,
            "headline": headline,
            "body": body,
            "published_at": published_at,
        }
        self._items.append(item)
        return item

    def subscribe(self, user_id: str, sections: list[str]) -> list[str]:
        for section in sections:
            if section not in NEWS_SECTIONS:
                raise UnknownSection(f"unknown news section {section!r}")
        # Deterministic order, duplicates collapsed.
        chosen = sorted(set(sections))
        self._subscriptions[user_id] = chosen
        return chosen

    def subscriptions_of(self, user_id: str) -> list[str]:
        return list(self._subscriptions.get(user_id, []))

    def feed(self, user_id: str, city: str | None, before: int | None,
             limit: int) -> list[dict]:
        """Subscribed sections only, scoped to the user's city, newest
        first; ``before`` is the item_id cursor of the previous page."""
        sections = set(self._subscriptions.get(user_id, []))
        if not sections or city is None:
            return []
        wanted = [
            item for item in self._items
            if item["section"] in sections and item["city"].casefold() == city.casefold()
        ]
        wanted.sort(key=lambda i: (-i["published_at"], -i["item_id"]))
        if before is not None:
            idx = next(
                (n for n, item in enumerate(wanted) if item["item_id"] == before),
                None,
            )
            wanted = wanted[idx + 1:] if idx is not None else []
        return wanted[: max(1, min(limit, 200))]

    def to_dict(self) -> dict:
        # Items come from the seed file; only subscriptions are state.
        return {"subscriptions": self._subscriptions}

    def load_dict(self, data: dict) -> None:
        self._subscriptions = {u: list(v) for u, v in data["subscriptions"].items()}


class ForumStore:
    """City forum with admin moderation; posts start Pending."""

    def __init__(self):
        self._posts: dict[str, dict] = {}
        self._next_post = 1

    def post(self, author: str, author_name: str, city: str, title: str,
             body: str, now: int) -> dict:
        record = {
            "post_id": f"f{self._next_post}",
            "author": author,
            "author_username": author_name,
            "city": city,
            "title": title,
            "body": body,
            "state": "Pending",
            "created_at": now,
            "replies": [],
        }
        self._next_post += 1
        self._posts[record["post_id"]] = record
        return record

    def moderate(self, is_admin: bool, post_id: str, approve: bool) -> dict:
        if not is_admin:
            raise NotAdmin("moderation requires an administrator session")
        record = self._posts.get(post_id)
        if record is None:
            raise UnknownPost(f"no forum post {post_id!r}")
        record["state"] = "Approved" if approve else "Rejected"
        return record

    def reply(self, author: str, author_name: str, post_id: str, body: str,
              now: int) -> dict:
        record = self._posts.get(post_id)
        if record is None:
            raise UnknownPost(f"no forum post {post_id!r}")
        if record["state"] != "Approved":
            raise NotApproved("replies are only allowed on approved posts")
        reply = {"author": author, "author_username": author_name,
                 "body": body, "at": now}
        record["replies"].append(reply)
        return reply

    def listing(self, viewer: str, city: str | None) -> list[dict]:
        """Approved posts in the viewer's city plus the viewer's own posts
        in any state (so authors can see moderation progress)."""
        posts = [
            p for p in self._posts.values()
            if (
                p["state"] == "Approved"
                and city is not None
                and p["city"].casefold() == city.casefold()
            )
            or p["author"] == viewer
        ]
        posts.sort(key=lambda p: (-p["created_at"], -int(p["post_id"][1:])))
        return posts

    def pending_queue(self, is_admin: bool) -> list[dict]:
        if not is_admin:
            raise NotAdmin("the moderation queue requires an administrator session")
        posts = [p for p in self._posts.values() if p["state"] == "Pending"]
        posts.sort(key=lambda p: int(p["post_id"][1:]))
        return posts

    def get(self, post_id: str) -> dict | None:
        return self._posts.get(post_id)

    def to_dict(self) -> dict:
        return {"posts": self._posts, "next_post": self._next_post}

    def load_dict(self, data: dict) -> None:
        self._posts = data["posts"]
        self._next_post = int(data["next_post"])
