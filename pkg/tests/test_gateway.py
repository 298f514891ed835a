import json
import threading
import time

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nearhub.errors import MalformedQuery, TileOutOfRange, UnknownCity, UpstreamUnavailable
from nearhub.gateway.client import ApiClient, ApiError
from nearhub.gateway.config import load_config, parse_config
from nearhub.gateway.gazetteer import Gazetteer, GazetteerEntry
from nearhub.gateway.tiles import TileService, render_synthetic_tile
from nearhub.geomath import GeoPoint


class TestConfig:
    def test_parse_and_defaults(self, tmp_path):
        text = """
        # server settings
        listen_addr = 0.0.0.0:9000
        data_dir = state
        tile_upstream.satellite = https://tiles.example/{z}/{x}/{y}.jpg
        provider_seed = 9
        session_ttl_hours = 1.5
        """
        path = tmp_path / "server.conf"
        path.write_text(text, encoding="utf-8")
        cfg = load_config(path)
        assert cfg.listen_addr == "0.0.0.0:9000"
        assert cfg.data_dir == str(tmp_path / "state")
        assert cfg.tile_upstream["satellite"].startswith("https://")
        assert cfg.tile_upstream["normal"] == "synthetic"
        assert cfg.provider_seed == 9
        assert cfg.session_ttl_hours == 1.5

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError):
            parse_config("bogus = 1")

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError):
            parse_config("just words")


class TestGazetteer:
    def gaz(self):
        return Gazetteer([
            GazetteerEntry("Dalian", "China", GeoPoint(38.914, 121.6147)),
            GazetteerEntry("Beijing", "China", GeoPoint(39.9042, 116.4074)),
        ])

    def test_geocode_exact(self):
        entry = self.gaz().geocode("Dalian, China")
        assert entry.centroid.lat == pytest.approx(38.914)

    def test_geocode_normalizes_case_and_space(self):
        assert self.gaz().geocode(" dalian ,  CHINA ").city == "Dalian"

    def test_no_comma_malformed(self):
        with pytest.raises(MalformedQuery):
            self.gaz().geocode("Dalian China")
        with pytest.raises(MalformedQuery):
            self.gaz().geocode("a, b, c")
        with pytest.raises(MalformedQuery):
            self.gaz().geocode(", China")

    def test_unknown_city(self):
        with pytest.raises(UnknownCity):
            self.gaz().geocode("Atlantis, Sea")

    def test_reverse_nearest_within_cutoff(self):
        gaz = self.gaz()
        assert gaz.reverse(GeoPoint(38.95, 121.7)).city == "Dalian"
        assert gaz.reverse(GeoPoint(0, 0)) is None

    def test_packaged_file_loads(self):
        from nearhub.app import _packaged

        gaz = Gazetteer.from_file(_packaged("gazetteer.tsv"))
        assert gaz.geocode("Dalian, China").country == "China"
        assert gaz.geocode("zürich, switzerland").city == "Zürich"


class TestTiles:
    def service(self, tmp_path, fetcher=None, upstream=None):
        upstreams = {layer: upstream or "synthetic"
                     for layer in ("normal", "satellite", "hybrid")}
        return TileService(tmp_path / "tiles", upstreams, fetcher=fetcher)

    def test_synthetic_deterministic_and_cached(self, tmp_path):
        svc = self.service(tmp_path)
        a, media = svc.get("hybrid", 3, 2, 5)
        b, _ = svc.get("hybrid", 3, 2, 5)
        assert a == b
        assert media == "image/png"
        assert a[:8] == b"\x89PNG\r\n\x1a\n"
        assert render_synthetic_tile("hybrid", 3, 2, 5) == a

    def test_bounds(self, tmp_path):
        svc = self.service(tmp_path)
        with pytest.raises(TileOutOfRange):
            svc.get("normal", 0, 0, 1)
        with pytest.raises(TileOutOfRange):
            svc.get("normal", 25, 0, 0)
        with pytest.raises(TileOutOfRange):
            svc.get("street", 1, 0, 0)
        svc.get("normal", 0, 0, 0)

    def test_upstream_fetch_and_cache(self, tmp_path):
        calls = []

        def fetcher(url):
            calls.append(url)
            return b"tilebytes", "image/png"

        svc = self.service(tmp_path, fetcher=fetcher,
                           upstream="http://up/{z}/{x}/{y}.png")
        data, _ = svc.get("normal", 2, 1, 3)
        assert data == b"tilebytes"
        assert calls == ["http://up/2/1/3.png"]
        svc.get("normal", 2, 1, 3)
        assert len(calls) == 1  # served from cache

    def test_upstream_failure(self, tmp_path):
        def fetcher(url):
            raise OSError("no route")

        svc = self.service(tmp_path, fetcher=fetcher, upstream="http://up/{z}/{x}/{y}")
        with pytest.raises(UpstreamUnavailable):
            svc.get("normal", 1, 0, 0)


@pytest.fixture
def http(app, live_server):
    base = live_server(app)
    client = ApiClient(base)
    return app, base, client


class TestHttpApi:
    def register_login(self, client, app, name="alice"):
        client.register(username=name, password="pw", nickname=name.title(),
                        email=f"{name}@x.com", phone="1234567", gender="Female")
        code = app.sms.messages[-1][2].split()[-1]
        client.activate(name, code)
        client.login(name, "pw")
        return client

    def test_missing_token_unauthorized_everywhere_except_public(self, http):
        app, base, _ = http
        from nearhub.gateway.server import ROUTES, PUBLIC_ROUTES

        import requests

        for route in ROUTES:
            if (route.method, route.pattern) in PUBLIC_ROUTES:
                continue
            path = route.pattern
            for field in ("username", "mail_id", "blob_id", "post_id",
                          "album_id", "photo_id"):
                path = path.replace("{%s}" % field, "someid")
            path = path.replace("{layer}", "normal").replace("{z}", "1") \
                       .replace("{x}", "0").replace("{y}", "0")
            resp = requests.request(route.method, base + "/api/v1" + path,
                                    json={}, timeout=10)
            assert resp.status_code == 401, (route.method, route.pattern)
            assert resp.json()["error"]["code"] == "Unauthorized"

    def test_expired_token_rejected(self, http, clock):
        app, base, client = http
        self.register_login(client, app)
        clock.advance(25 * 3600 * 1000)
        with pytest.raises(ApiError) as exc:
            client.friends()
        assert exc.value.code == "Unauthorized"

    def test_error_codes_surface_verbatim(self, http):
        app, base, client = http
        self.register_login(client, app)

        cases = []
        with pytest.raises(ApiError) as e:
            client.register(username="alice", password="x", nickname="n",
                            email="e@x.com", phone="12345", gender="Male")
        cases.append((e.value.code, "DuplicateUsername"))
        with pytest.raises(ApiError) as e:
            client.register(username="zed", password="x", nickname="",
                            email="e@x.com", phone="12345", gender="Male")
        cases.append((e.value.code, "MissingField"))
        with pytest.raises(ApiError) as e:
            client.register(username="zed", password="x", nickname="n",
                            email="nope", phone="12345", gender="Male")
        cases.append((e.value.code, "InvalidEmail"))
        with pytest.raises(ApiError) as e:
            client.register(username="zed", password="x", nickname="n",
                            email="e@x.com", phone="12", gender="Male")
        cases.append((e.value.code, "InvalidPhone"))
        with pytest.raises(ApiError) as e:
            client.activate("alice", "999999")
        cases.append((e.value.code, "BadCode"))
        with pytest.raises(ApiError) as e:
            client.geocode("Dalian China")
        cases.append((e.value.code, "MalformedQuery"))
        with pytest.raises(ApiError) as e:
            client.geocode("Atlantis, Sea")
        cases.append((e.value.code, "UnknownCity"))
        with pytest.raises(ApiError) as e:
            client.nearby()
        cases.append((e.value.code, "NoFixForViewer"))
        client.submit_position({"gps": {"lat": 38.914, "lon": 121.615}})
        with pytest.raises(ApiError) as e:
            client.get("/api/v1/nearby", {"radius": 90_000})
        cases.append((e.value.code, "RadiusOutOfRange"))
        with pytest.raises(ApiError) as e:
            client.chat_send("alice", text="self")
        cases.append((e.value.code, "SelfFriendship" if False else "NotFriends"))
        with pytest.raises(ApiError) as e:
            client.friend_request("alice")
        cases.append((e.value.code, "SelfFriendship"))
        with pytest.raises(ApiError) as e:
            client.friend_request("ghost")
        cases.append((e.value.code, "UnknownUser"))
        with pytest.raises(ApiError) as e:
            client.mail_get("m404")
        cases.append((e.value.code, "NotYourMail"))
        with pytest.raises(ApiError) as e:
            client.fetch_blob("00" * 32)
        cases.append((e.value.code, "UnknownBlob"))
        with pytest.raises(ApiError) as e:
            client.tile("normal", 0, 0, 1)
        cases.append((e.value.code, "TileOutOfRange"))
        with pytest.raises(ApiError) as e:
            client.forum_moderate("f1", "approve")
        cases.append((e.value.code, "NotAdmin"))
        with pytest.raises(ApiError) as e:
            client.news_subscribe(["Gossip"])
        cases.append((e.value.code, "UnknownSection"))
        for got, expected in cases:
            assert got == expected

    def test_chat_roundtrip_and_longpoll_wakeup(self, http):
        app, base, client_a = http
        self.register_login(client_a, app, "alice")
        client_b = ApiClient(base)
        self.register_login(client_b, app, "bob")
        client_a.friend_request("bob")
        client_b.friend_accept("alice")

        results = {}

        def poll():
            results["events"] = client_b.events(since=0, timeout=10)

        t = threading.Thread(target=poll)
        t.start()
        time.sleep(0.2)
        started = time.monotonic()
        client_a.chat_send("bob", text="wake up")
        t.join(timeout=5)
        elapsed = time.monotonic() - started
        assert not t.is_alive()
        assert elapsed < 1.0
        kinds = [e["kind"] for e in results["events"]["events"]]
        assert "chat" in kinds

    def test_longpoll_returns_empty_after_timeout(self, http):
        app, base, client = http
        self.register_login(client, app)
        latest = client.events(since=0, wait=False)["latest"]
        started = time.monotonic()
        out = client.events(since=latest, timeout=1.0)
        elapsed = time.monotonic() - started
        assert out["events"] == []
        assert 0.9 <= elapsed < 5.0

    def test_blob_upload_fetch_over_http(self, http):
        app, base, client = http
        self.register_login(client, app)
        payload = bytes(range(256)) * 10
        blob = client.upload_blob(payload, "application/octet-stream")
        assert client.fetch_blob(blob["blob_id"]) == payload

    def test_tile_content_type_and_cache_hit(self, http):
        app, base, client = http
        self.register_login(client, app)
        t1 = client.tile("satellite", 2, 1, 1)
        t2 = client.tile("satellite", 2, 1, 1)
        assert t1 == t2 and t1[:4] == b"\x89PNG"

    def test_unknown_route_404(self, http):
        app, base, client = http
        import requests

        resp = requests.get(base + "/api/v1/nope", timeout=10)
        assert resp.status_code == 404

    def test_malformed_json_bad_request(self, http):
        app, base, client = http
        import requests

        resp = requests.post(base + "/api/v1/register", data=b"{not json",
                             headers={"Content-Type": "application/json"},
                             timeout=10)
        assert resp.json()["error"]["code"] == "BadRequest"

    def test_position_with_measurements_over_http(self, http):
        app, base, client = http
        self.register_login(client, app)
        beacons = [
            {"id": "b0", "lat": 38.9140, "lon": 121.6147, "kind": "GpsPseudo"},
            {"id": "b1", "lat": 38.9150, "lon": 121.6147, "kind": "GpsPseudo"},
            {"id": "b2", "lat": 38.9140, "lon": 121.6162, "kind": "GpsPseudo"},
        ]
        from nearhub.geomath import GeoPoint, haversine

        truth = GeoPoint(38.9144, 121.6152)
        ranges = [
            {"beacon": b,
             "range": haversine(truth, GeoPoint(b["lat"], b["lon"])),
             "sigma": 1.0}
            for b in beacons
        ]
        out = client.submit_position({"ranges": ranges})
        assert out["fix"]["method"] == "Trilateration"
        est = GeoPoint(out["fix"]["lat"], out["fix"]["lon"])
        assert haversine(est, truth) < 1.0
        hits = client.poi(radius=1500)
        assert hits and "distance_m" in hits[0]

    def test_static_webui_serving(self, app, live_server, tmp_path):
        web = tmp_path / "web"
        web.mkdir()
        (web / "index.html").write_text("<html>hello</html>", encoding="utf-8")
        base = live_server(app, webui_dir=web)
        import requests

        assert "hello" in requests.get(base + "/", timeout=10).text
        assert requests.get(base + "/../etc/passwd", timeout=10).status_code == 404


json_values = st.recursive(
    st.none() | st.booleans() | st.integers(-2**40, 2**40)
    | st.floats(allow_nan=False, allow_infinity=False) | st.text(max_size=40),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=10), children, max_size=4),
    max_leaves=20,
)


@settings(max_examples=120)
@given(json_values)
def test_json_envelope_round_trip(payload):
    from nearhub.gateway.server import _json_bytes

    encoded = _json_bytes({"ok": payload})
    assert json.loads(encoded.decode("utf-8"))["ok"] == payload
