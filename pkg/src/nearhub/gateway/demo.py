"""Walkthrough fixture: a small city of users around Dalian with
friendships, positions, content, and a forum thread, seeded directly into
a data directory so `serve` can pick it up.

Seeding runs on a fixed clock in the past so that seeded sessions and
heartbeats are long expired by the time the server starts: freshly served
presence then reflects only what clients actually do.
"""
from __future__ import annotations

from datetime import datetime, timezone

from ..app import App
from .config import ServerConfig

DEMO_PASSWORD_SUFFIX = "-pass-2026"

SEED_EPOCH_MS = int(datetime(2026, 8, 1, tzinfo=timezone.utc).timestamp() * 1000)

DEMO_USERS = [
    # username, nickname, gender, interests, (lat, lon) near Dalian or None
    ("alice", "Ali", "Female", ["hiking", "coffee", "maps"], (38.9140, 121.6147)),
    ("bob", "Bobby", "Male", ["hiking", "chess"], (38.9185, 121.6235)),
    ("catherine", "Cat", "Female", ["photography", "coffee"], (38.9079, 121.6058)),
    ("dave", "D", "Male", ["chess", "sailing"], (38.8801, 121.5258)),
    ("erin", "Erin", "Unspecified", ["maps", "photography"], None),
]

FRIEND_PAIRS = [("alice", "bob"), ("alice", "catherine"), ("bob", "dave")]


def password_for(username: str) -> str:
    return username + DEMO_PASSWORD_SUFFIX


def seed_demo(config: ServerConfig) -> dict:
    """Populate config.data_dir with the demo fixture; returns a summary."""
    tick = [SEED_EPOCH_MS]

    def clock() -> int:
        tick[0] += 1000
        return tick[0]

    app = App(config.app_config(), clock=clock)
    try:
        tokens = {}
        for i, (username, nickname, gender, interests, _pos) in enumerate(DEMO_USERS):
            app.register({
                "username": username,
                "password": password_for(username),
                "nickname": nickname,
                "email": f"{username}@example.com",
                "phone": f"138000000{i:02d}",
                "gender": gender,
                "interests": interests,
            })
            code = _last_code(app)
            app.activate(username, code)
            tokens[username] = app.login(username, password_for(username))["token"]

        for a, b in FRIEND_PAIRS:
            app.friend_request(tokens[a], b)
            app.friend_accept(tokens[b], a)

        for username, _, _, _, pos in DEMO_USERS:
            if pos is not None:
                app.submit_position(tokens[username], {
                    "gps": {"lat": pos[0], "lon": pos[1], "accuracy": 15},
                })

        app.create_admin("root", password_for("root"))
        admin_token = app.login("root", password_for("root"))["token"]

        post = app.blog_write(tokens["bob"], "Harbor walk",
                              "Tried the new pier path, photos soon.")
        app.blog_publish(tokens["bob"], post["post_id"])
        app.subscribe_news(tokens["alice"], ["Sports", "Local"])
        forum = app.forum_post(tokens["alice"], "Best dumplings near Labor Park?",
                               "Looking for a place that is open late.")
        app.forum_moderate(admin_token, forum["post_id"], "approve")
        app.forum_reply(tokens["bob"], forum["post_id"],
                        "Friendship Dumpling Bar, two blocks south.")
        summary = {
            "users": [u[0] for u in DEMO_USERS] + ["root"],
            "password_rule": f"<username>{DEMO_PASSWORD_SUFFIX}",
            "friends": FRIEND_PAIRS,
            "admin": "root",
            "data_dir": config.data_dir,
        }
        return summary
    finally:
        app.close()


def _last_code(app: App) -> str:
    """Activation codes are dispatched over the outbox transport."""
    if hasattr(app.sms, "messages"):
        return app.sms.messages[-1][2].split()[-1]
    with open(app.sms.path, encoding="utf-8") as fh:
        return fh.read().splitlines()[-1].split()[-1]
