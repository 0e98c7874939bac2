"""Command line entry points: the server and offline administration.

The admin commands operate directly on the configured data directory; thanks
to WAL journaling they are safe to run while the server is up, and schema
approvals become visible to it immediately (schemas are read from the store
on every use).
"""

from __future__ import annotations

import argparse
import socket
import sys
from pathlib import Path

from .api import create_app
from .config import ServiceConfig, load_config
from .errors import NetboardError, PortUnavailable
from .identity import Network, NetworkRegistry
from .search import RankWeights, SynonymTable
from .seed import seed_demo
from .service import ClassifiedsService
from .store import Store


def build_service(config: ServiceConfig) -> ClassifiedsService:
    config.data_dir.mkdir(parents=True, exist_ok=True)
    networks = NetworkRegistry.from_file(config.network_registry_path)
    synonyms = (
        SynonymTable.from_file(config.synonym_table_path)
        if config.synonym_table_path
        else None
    )
    stopwords = None
    if config.stopwords_path:
        stopwords = frozenset(
            w.strip().lower()
            for w in Path(config.stopwords_path).read_text().split()
            if w.strip()
        )
    service = ClassifiedsService(
        Store(config.data_dir / "netboard.db"),
        networks,
        synonyms,
        base_url=config.base_url,
        weights=RankWeights(config.w_text, config.w_loc, config.w_fresh),
        decay_km=config.decay_km,
        page_size=config.page_size,
        outbox_dir=config.data_dir / "outbox",
        stopwords=stopwords,
    )
    service.load_schema_dir(config.schema_dir)
    service.rebuild_index()
    return service


def _check_port(port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind(("0.0.0.0", port))
    except OSError as exc:
        raise PortUnavailable(f"cannot bind port {port}: {exc}") from exc
    finally:
        probe.close()


def cmd_serve(args) -> int:
    import uvicorn

    config = load_config(args.config)
    _check_port(config.port)
    service = build_service(config)
    app = create_app(service, frontend_dir=config.frontend_dir)
    uvicorn.run(app, host="0.0.0.0", port=config.port, log_level="warning")
    return 0


def cmd_requests(args) -> int:
    service = build_service(load_config(args.config))
    if args.requests_command == "list":
        rows = service.list_field_requests()
        if not rows:
            print("no field requests")
            return 0
        for request_id, req in rows:
            line = (
                f"{request_id}\t{req.status}\t{req.category}\t{req.label}"
                f"\t{req.data_type}\t{req.creator}"
            )
            if req.reason:
                line += f"\t({req.reason})"
            print(line)
        return 0
    decision = "approve" if args.requests_command == "approve" else "reject"
    schema, decided = service.decide_field_request(args.request_id, decision)
    print(
        f"request {args.request_id} {decided.status}"
        + (f" ({decided.reason})" if decided.reason else "")
        + f"; schema {schema.category!r} at version {schema.version}"
    )
    return 0


def cmd_networks_add(args) -> int:
    config = load_config(args.config)
    registry_path = config.network_registry_path
    existing = (
        NetworkRegistry.from_file(registry_path).all()
        if registry_path.exists()
        else []
    )
    addition = Network(
        args.network_id,
        args.display_name,
        frozenset(d.lower() for d in args.domains),
    )
    try:
        NetworkRegistry(existing + [addition])  # disjointness check
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    line = f"{addition.network_id}\t{addition.display_name}\t{','.join(sorted(addition.domain_suffixes))}\n"
    with open(registry_path, "a") as handle:
        handle.write(line)
    print(f"added network {addition.network_id!r} ({len(addition.domain_suffixes)} domains)")
    return 0


def cmd_seed(args) -> int:
    if args.count == 0:
        print("nothing to seed")
        return 0
    service = build_service(load_config(args.config))
    summary = seed_demo(service, args.count, seed=args.seed)
    print(
        f"seeded {summary['listings']} listings across "
        f"{len(summary['categories'])} categories ({summary['users']} users)"
    )
    return 0


def cmd_export_graph(args) -> int:
    service = build_service(load_config(args.config))
    text = service.export_graph()
    if args.output:
        Path(args.output).write_text(text)
        print(f"wrote {args.output}")
    else:
        sys.stdout.write(text)
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netboard", description="network-scoped classifieds service")
    commands = parser.add_subparsers(dest="command", required=True)

    serve = commands.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--config", required=True, help="path to the config file")
    serve.set_defaults(func=cmd_serve)

    admin = commands.add_parser("admin", help="offline administration")
    admin.add_argument("--config", required=True, help="path to the config file")
    admin_commands = admin.add_subparsers(dest="admin_command", required=True)

    requests = admin_commands.add_parser("requests", help="manage field requests")
    request_commands = requests.add_subparsers(dest="requests_command", required=True)
    request_commands.add_parser("list").set_defaults(func=cmd_requests)
    approve = request_commands.add_parser("approve")
    approve.add_argument("request_id", type=int)
    approve.set_defaults(func=cmd_requests)
    reject = request_commands.add_parser("reject")
    reject.add_argument("request_id", type=int)
    reject.set_defaults(func=cmd_requests)

    networks = admin_commands.add_parser("networks", help="manage the network registry")
    network_commands = networks.add_subparsers(dest="networks_command", required=True)
    add = network_commands.add_parser("add")
    add.add_argument("network_id")
    add.add_argument("display_name")
    add.add_argument("domains", nargs="+")
    add.set_defaults(func=cmd_networks_add)

    seed = admin_commands.add_parser("seed", help="seed a deterministic demo corpus")
    seed.add_argument("--count", type=int, required=True)
    seed.add_argument("--seed", type=int, default=7)
    seed.set_defaults(func=cmd_seed)

    export = admin_commands.add_parser("export-graph", help="dump the ownership/interest edge list")
    export.add_argument("--output", default=None)
    export.set_defaults(func=cmd_export_graph)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except NetboardError as exc:
        print(f"error [{exc.code}]: {exc.message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
