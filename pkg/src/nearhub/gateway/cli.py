"""Command-line entry point.

    nearhub serve --config server.conf
    nearhub admin create-admin root --password ... --config server.conf
    nearhub demo --config server.conf
    nearhub report --out report/
    nearhub client --server http://127.0.0.1:8645 <command> ...

Client commands print the JSON payload of the API response to stdout
(errors print {"error": ...} and exit nonzero), so they compose in shell
scripts.
"""
from __future__ import annotations

import argparse
import json
import os
import signal
import sys
from pathlib import Path


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help()
        return 2
    return args.func(args)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nearhub",
        description="Location-based social networking server and client.",
    )
    sub = parser.add_subparsers(dest="command")

    serve = sub.add_parser("serve", help="run the gateway server")
    serve.add_argument("--config", help="path to the server config file")
    serve.set_defaults(func=cmd_serve)

    admin = sub.add_parser("admin", help="offline administration")
    admin_sub = admin.add_subparsers(dest="admin_command")
    create = admin_sub.add_parser("create-admin",
                                  help="create or promote an administrator")
    create.add_argument("username")
    create.add_argument("--password", help="required when the account is new")
    create.add_argument("--config", help="path to the server config file")
    create.set_defaults(func=cmd_create_admin)

    demo = sub.add_parser("demo", help="seed the walkthrough fixture")
    demo.add_argument("--config", help="path to the server config file")
    demo.set_defaults(func=cmd_demo)

    report = sub.add_parser("report", help="run the positioning benchmark "
                                           "and render figures")
    report.add_argument("--out", default="report", help="output directory")
    report.add_argument("--trials", type=int, default=200)
    report.add_argument("--seed", type=int, default=7)
    report.set_defaults(func=cmd_report)

    client = sub.add_parser("client", help="scriptable API client")
    client.add_argument("--server", default=os.environ.get(
        "NEARHUB_SERVER", "http://127.0.0.1:8645"))
    client.add_argument("--token", default=os.environ.get("NEARHUB_TOKEN"))
    _add_client_commands(client)
    return parser


def _load_server_config(args):
    from .config import ServerConfig, load_config

    if getattr(args, "config", None):
        return load_config(args.config)
    return ServerConfig()


def cmd_serve(args) -> int:
    import threading
    import time as time_mod

    from ..app import App
    from .server import make_server
    from .tiles import TileService

    cfg = _load_server_config(args)
    app = App(cfg.app_config())
    tiles = TileService(Path(cfg.data_dir) / "tiles", cfg.tile_upstream)
    server = make_server(app, tiles, cfg.listen_addr, webui_dir=cfg.webui_dir)
    host, port = server.server_address[:2]
    address = f"http://{host}:{port}"
    Path(cfg.data_dir).mkdir(parents=True, exist_ok=True)
    (Path(cfg.data_dir) / "server.addr").write_text(address + "\n", encoding="utf-8")
    print(json.dumps({"listening": address, "data_dir": cfg.data_dir}), flush=True)

    stop = threading.Event()

    def sweeper():
        while not stop.wait(2.0):
            try:
                app.maybe_sweep()
            except Exception:
                pass

    threading.Thread(target=sweeper, daemon=True).start()

    def shutdown(signum, frame):
        stop.set()
        threading.Thread(target=server.shutdown, daemon=True).start()

    signal.signal(signal.SIGINT, shutdown)
    signal.signal(signal.SIGTERM, shutdown)
    try:
        server.serve_forever()
    finally:
        stop.set()
        server.server_close()
        app.close()
        time_mod.sleep(0.05)
    return 0


def cmd_create_admin(args) -> int:
    from ..app import App

    cfg = _load_server_config(args)
    app = App(cfg.app_config())
    try:
        result = app.create_admin(args.username, args.password)
    finally:
        app.close()
    print(json.dumps(result))
    return 0


def cmd_demo(args) -> int:
    from .demo import seed_demo

    cfg = _load_server_config(args)
    print(json.dumps(seed_demo(cfg), indent=2))
    return 0


def cmd_report(args) -> int:
    from ..report import write_report

    result = write_report(args.out, trials=args.trials, seed=args.seed)
    print(json.dumps({"tsv": result["tsv"], "figures": result["figures"]}, indent=2))
    return 0


# -- client ---------------------------------------------------------------------


def _add_client_commands(client: argparse.ArgumentParser) -> None:
    sub = client.add_subparsers(dest="client_command")

    p = sub.add_parser("register")
    for flag in ("--username", "--password", "--nickname", "--email", "--phone"):
        p.add_argument(flag, required=True)
    p.add_argument("--gender", default="Unspecified",
                   choices=["Male", "Female", "Unspecified"])
    p.add_argument("--interests", default="", help="comma separated tags")
    p.set_defaults(func=_client(lambda c, a: c.register(
        username=a.username, password=a.password, nickname=a.nickname,
        email=a.email, phone=a.phone, gender=a.gender,
        interests=[t for t in a.interests.split(",") if t],
    )))

    p = sub.add_parser("activate")
    p.add_argument("--username", required=True)
    p.add_argument("--code", required=True)
    p.set_defaults(func=_client(lambda c, a: c.activate(a.username, a.code)))

    p = sub.add_parser("login")
    p.add_argument("--username", required=True)
    p.add_argument("--password", required=True)
    p.set_defaults(func=_client(lambda c, a: c.login(a.username, a.password)))

    p = sub.add_parser("recover")
    p.add_argument("--username", required=True)
    p.set_defaults(func=_client(lambda c, a: c.recover(a.username)))

    p = sub.add_parser("redeem")
    p.add_argument("--username", required=True)
    p.add_argument("--code", required=True)
    p.add_argument("--new-password", required=True)
    p.set_defaults(func=_client(lambda c, a: c.redeem(a.username, a.code,
                                                      a.new_password)))

    p = sub.add_parser("geocode")
    p.add_argument("query")
    p.set_defaults(func=_client(lambda c, a: c.geocode(a.query)))

    p = sub.add_parser("locate", help="submit a position (GPS fix or a "
                                      "measurement file)")
    p.add_argument("--lat", type=float)
    p.add_argument("--lon", type=float)
    p.add_argument("--accuracy", type=float, default=10.0)
    p.add_argument("--measurements", help="JSON file with ranges/tdoa/proximity")
    p.set_defaults(func=_client(_locate))

    p = sub.add_parser("nearby")
    p.add_argument("--radius", type=float, default=5000)
    p.add_argument("--friends-only", action="store_true")
    p.add_argument("--online-only", action="store_true")
    p.set_defaults(func=_client(lambda c, a: c.nearby(
        a.radius, a.friends_only, a.online_only)))

    p = sub.add_parser("poi")
    p.add_argument("--radius", type=float, default=5000)
    p.add_argument("--category")
    p.add_argument("--name")
    p.set_defaults(func=_client(lambda c, a: c.poi(a.radius, a.category, a.name)))

    p = sub.add_parser("friends")
    friends_sub = p.add_subparsers(dest="friends_command")
    friends_sub.add_parser("list").set_defaults(
        func=_client(lambda c, a: c.friends()))
    q = friends_sub.add_parser("request")
    q.add_argument("--user", required=True)
    q.set_defaults(func=_client(lambda c, a: c.friend_request(a.user)))
    q = friends_sub.add_parser("accept")
    q.add_argument("--user", required=True)
    q.set_defaults(func=_client(lambda c, a: c.friend_accept(a.user)))
    q = friends_sub.add_parser("remove")
    q.add_argument("--user", required=True)
    q.set_defaults(func=_client(lambda c, a: c.friend_remove(a.user)))
    friends_sub.add_parser("requests").set_defaults(
        func=_client(lambda c, a: c.requests_list()))

    p = sub.add_parser("recommend")
    p.add_argument("-k", type=int, default=10)
    p.set_defaults(func=_client(lambda c, a: c.recommend(a.k)))

    p = sub.add_parser("chat")
    chat_sub = p.add_subparsers(dest="chat_command")
    q = chat_sub.add_parser("send")
    q.add_argument("--to", required=True)
    q.add_argument("--text")
    q.add_argument("--blob-id")
    q.set_defaults(func=_client(lambda c, a: c.chat_send(a.to, a.text, a.blob_id)))
    q = chat_sub.add_parser("history")
    q.add_argument("--peer", required=True)
    q.add_argument("--before", type=int)
    q.add_argument("--limit", type=int, default=50)
    q.set_defaults(func=_client(lambda c, a: c.chat_history(a.peer, a.before,
                                                            a.limit)))
    q = chat_sub.add_parser("settings")
    q.add_argument("--history-saving", required=True, choices=["true", "false"])
    q.set_defaults(func=_client(lambda c, a: c.chat_settings(
        a.history_saving == "true")))

    p = sub.add_parser("events")
    p.add_argument("--since", type=int, default=0)
    p.add_argument("--timeout", type=float, default=25.0)
    p.add_argument("--no-wait", action="store_true")
    p.set_defaults(func=_client(lambda c, a: c.events(a.since, a.timeout,
                                                      not a.no_wait)))

    p = sub.add_parser("mail")
    mail_sub = p.add_subparsers(dest="mail_command")
    q = mail_sub.add_parser("send")
    q.add_argument("--to", required=True)
    q.add_argument("--subject", default="")
    q.add_argument("--body", default="")
    q.set_defaults(func=_client(lambda c, a: c.mail_send(a.to, a.subject, a.body)))
    q = mail_sub.add_parser("list")
    q.add_argument("--box", default="inbox", choices=["inbox", "sent"])
    q.set_defaults(func=_client(lambda c, a: c.mail_list(a.box)))
    q = mail_sub.add_parser("read")
    q.add_argument("--id", required=True)
    q.set_defaults(func=_client(lambda c, a: c.mail_get(a.id)))
    q = mail_sub.add_parser("delete")
    q.add_argument("--id", required=True)
    q.set_defaults(func=_client(lambda c, a: c.mail_delete(a.id)))

    sub.add_parser("heartbeat").set_defaults(
        func=_client(lambda c, a: c.heartbeat()))

    p = sub.add_parser("presence")
    p.add_argument("--users", required=True, help="comma separated usernames")
    p.set_defaults(func=_client(lambda c, a: c.presence(a.users.split(","))))

    p = sub.add_parser("profile")
    prof_sub = p.add_subparsers(dest="profile_command")
    q = prof_sub.add_parser("get")
    q.add_argument("--user")
    q.set_defaults(func=_client(lambda c, a: c.profile(a.user)))
    q = prof_sub.add_parser("set")
    q.add_argument("--section", required=True)
    q.add_argument("--fields", required=True, help="JSON object")
    q.set_defaults(func=_client(lambda c, a: c.update_profile(
        a.section, json.loads(a.fields))))

    p = sub.add_parser("privacy")
    priv_sub = p.add_subparsers(dest="privacy_command")
    priv_sub.add_parser("get").set_defaults(func=_client(lambda c, a: c.privacy()))
    q = priv_sub.add_parser("set")
    q.add_argument("--tiers", required=True, help="JSON object")
    q.set_defaults(func=_client(lambda c, a: c.set_privacy(json.loads(a.tiers))))

    p = sub.add_parser("weather")
    p.add_argument("--city", required=True)
    p.add_argument("--date")
    p.set_defaults(func=_client(lambda c, a: c.weather(a.city, a.date)))

    p = sub.add_parser("news")
    news_sub = p.add_subparsers(dest="news_command")
    q = news_sub.add_parser("feed")
    q.add_argument("--limit", type=int, default=20)
    q.set_defaults(func=_client(lambda c, a: c.news(limit=a.limit)))
    q = news_sub.add_parser("subscribe")
    q.add_argument("--sections", required=True, help="comma separated")
    q.set_defaults(func=_client(lambda c, a: c.news_subscribe(
        a.sections.split(","))))

    p = sub.add_parser("forum")
    forum_sub = p.add_subparsers(dest="forum_command")
    q = forum_sub.add_parser("post")
    q.add_argument("--title", required=True)
    q.add_argument("--body", required=True)
    q.set_defaults(func=_client(lambda c, a: c.forum_post(a.title, a.body)))
    forum_sub.add_parser("list").set_defaults(
        func=_client(lambda c, a: c.forum_list()))
    forum_sub.add_parser("queue").set_defaults(
        func=_client(lambda c, a: c.forum_queue()))
    q = forum_sub.add_parser("moderate")
    q.add_argument("--id", required=True)
    q.add_argument("--action", required=True, choices=["approve", "reject"])
    q.set_defaults(func=_client(lambda c, a: c.forum_moderate(a.id, a.action)))
    q = forum_sub.add_parser("reply")
    q.add_argument("--id", required=True)
    q.add_argument("--body", required=True)
    q.set_defaults(func=_client(lambda c, a: c.forum_reply(a.id, a.body)))

    p = sub.add_parser("blob")
    blob_sub = p.add_subparsers(dest="blob_command")
    q = blob_sub.add_parser("upload")
    q.add_argument("--file", required=True)
    q.add_argument("--media", default="application/octet-stream")
    q.set_defaults(func=_client(lambda c, a: c.upload_blob(
        Path(a.file).read_bytes(), a.media)))
    q = blob_sub.add_parser("fetch")
    q.add_argument("--id", required=True)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_client(_blob_fetch))


def _locate(c, a):
    if a.measurements:
        payload = json.loads(Path(a.measurements).read_text(encoding="utf-8"))
    elif a.lat is not None and a.lon is not None:
        payload = {"gps": {"lat": a.lat, "lon": a.lon, "accuracy": a.accuracy}}
    else:
        raise SystemExit("locate needs --lat/--lon or --measurements")
    return c.submit_position(payload)


def _blob_fetch(c, a):
    data = c.fetch_blob(a.id)
    Path(a.out).write_bytes(data)
    return {"blob_id": a.id, "bytes": len(data), "out": a.out}


def _client(fn):
    def run(args) -> int:
        from .client import ApiClient, ApiError

        client = ApiClient(args.server, token=args.token)
        try:
            result = fn(client, args)
        except ApiError as exc:
            print(json.dumps({"error": exc.payload}))
            return 1
        print(json.dumps(result, ensure_ascii=False))
        return 0

    return run


if __name__ == "__main__":
    sys.exit(main())
