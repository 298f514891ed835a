"""Server configuration: UTF-8 text file of ``key = value`` lines.

Recognized keys: listen_addr, data_dir, tile_upstream.normal /
tile_upstream.satellite / tile_upstream.hybrid, gazetteer_path, poi_path,
news_path, provider_seed, session_ttl_hours, plus the tuning knobs
snapshot_every, geohash_precision, scrypt_n, webui_dir. Lines starting
with ``#`` and blank lines are ignored; unknown keys are an error.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from ..app import AppConfig

TILE_LAYERS = ("normal", "satellite", "hybrid")


@dataclass
class ServerConfig:
    listen_addr: str = "127.0.0.1:8645"
    data_dir: str = "./nearhub-data"
    tile_upstream: dict = field(
        default_factory=lambda: {layer: "synthetic" for layer in TILE_LAYERS}
    )
    gazetteer_path: str | None = None
    poi_path: str | None = None
    news_path: str | None = None
    provider_seed: int = 42
    session_ttl_hours: float = 24.0
    snapshot_every: int = 1000
    geohash_precision: int = 6
    scrypt_n: int = 2**14
    liveness_window_ms: int = 60_000
    webui_dir: str | None = None

    def app_config(self) -> AppConfig:
        return AppConfig(
            data_dir=self.data_dir,
            gazetteer_path=self.gazetteer_path,
            poi_path=self.poi_path,
            news_path=self.news_path,
            provider_seed=self.provider_seed,
            session_ttl_hours=self.session_ttl_hours,
            geohash_precision=self.geohash_precision,
            snapshot_every=self.snapshot_every,
            scrypt_n=self.scrypt_n,
            liveness_window_ms=self.liveness_window_ms,
        )


def parse_config(text: str, base_dir: Path | None = None) -> ServerConfig:
    cfg = ServerConfig()
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {line_no}: expected 'key = value'")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key.startswith("tile_upstream."):
            layer = key.split(".", 1)[1]
            if layer not in TILE_LAYERS:
                raise ValueError(f"line {line_no}: unknown tile layer {layer!r}")
            cfg.tile_upstream[layer] = value
        elif key in ("listen_addr", "data_dir", "gazetteer_path", "poi_path",
                     "news_path", "webui_dir"):
            setattr(cfg, key, value)
        elif key in ("provider_seed", "snapshot_every", "geohash_precision",
                     "scrypt_n", "liveness_window_ms"):
            setattr(cfg, key, int(value))
        elif key == "session_ttl_hours":
            cfg.session_ttl_hours = float(value)
        else:
            raise ValueError(f"line {line_no}: unknown key {key!r}")
    if base_dir is not None:
        for attr in ("data_dir", "gazetteer_path", "poi_path", "news_path", "webui_dir"):
            value = getattr(cfg, attr)
            if value and not Path(value).is_absolute():
                setattr(cfg, attr, str(base_dir / value))
    return cfg


def load_config(path: str | Path) -> ServerConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)
