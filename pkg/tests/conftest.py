from __future__ import annotations

from datetime import datetime, timezone

import pytest

from nearhub.app import App, AppConfig, MemoryOutbox, SequentialTokens

START_MS = int(datetime(2026, 8, 10, 12, 0, tzinfo=timezone.utc).timestamp() * 1000)


class FakeClock:
    """Millisecond clock the tests can move by hand."""

    def __init__(self, start: int = START_MS):
        self.now = start

    def __call__(self) -> int:
        return self.now

    def advance(self, ms: int) -> int:
        self.now += ms
        return self.now


@pytest.fixture
def clock() -> FakeClock:
    return FakeClock()


@pytest.fixture
def make_app(clock):
    """App factory with fast password hashing and deterministic tokens."""
    apps = []

    def factory(data_dir=None, app_clock=None, **overrides) -> App:
        cfg = AppConfig(data_dir=str(data_dir) if data_dir else None,
                        scrypt_n=2**4, **overrides)
        app = App(cfg, clock=app_clock or clock,
                  tokens=SequentialTokens(), sms=MemoryOutbox())
        apps.append(app)
        return app

    yield factory
    for app in apps:
        app.close()


@pytest.fixture
def app(make_app) -> App:
    return make_app()


def register_user(app: App, username: str, *, interests=(), position=None,
                  gender="Unspecified", city="", country="") -> str:
    """Register, activate, and log in a user; returns the session token."""
    app.register({
        "username": username,
        "password": f"{username}-pw",
        "nickname": username.title(),
        "email": f"{username}@example.com",
        "phone": "1380000" + str(abs(hash(username)) % 10000).zfill(4),
        "gender": gender,
        "interests": list(interests),
        "city": city,
        "country": country,
    })
    code = app.sms.messages[-1][2].split()[-1]
    app.activate(username, code)
    token = app.login(username, f"{username}-pw")["token"]
    if position is not None:
        app.submit_position(token, {
            "gps": {"lat": position[0], "lon": position[1], "accuracy": 10},
        })
    return token


def befriend(app: App, token_a: str, name_a: str, token_b: str, name_b: str) -> None:
    app.friend_request(token_a, name_b)
    app.friend_accept(token_b, name_a)


@pytest.fixture
def live_server(tmp_path):
    """Real HTTP server on a random port; yields (base_url, app)."""
    import time

    from nearhub.gateway.server import make_server, serve_in_thread
    from nearhub.gateway.tiles import TileService

    servers = []

    def factory(app: App, webui_dir=None):
        tiles = TileService(tmp_path / "tiles",
                            {layer: "synthetic" for layer in
                             ("normal", "satellite", "hybrid")})
        server = make_server(app, tiles, "127.0.0.1:0", webui_dir=webui_dir)
        serve_in_thread(server)
        servers.append(server)
        return f"http://127.0.0.1:{server.server_address[1]}"

    yield factory
    for server in servers:
        server.shutdown()
        server.server_close()
        time.sleep(0.01)
