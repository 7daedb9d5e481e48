"""Command line entry point: serve a toy model over the wire protocol."""

import argparse
import json
import sys

from .models import BridgeInputError, GraphSpec, build_model, toy_models
from .server import serve_stdio, serve_tcp

EXIT_OK = 0
EXIT_INPUT = 2


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise BridgeInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise BridgeInputError(f"{path} is not valid JSON: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motif-bridge",
        description="Serve a graph model as a value function over line-delimited JSON.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("serve", help="run a model server")
    p.add_argument("--graph", required=True, help="graph JSON file: {n, edges}")
    p.add_argument(
        "--model", required=True, help=f"one of: {', '.join(sorted(toy_models()))}"
    )
    p.add_argument("--model-config", default=None, help="JSON config file for the model")
    p.add_argument(
        "--transport", default="stdio", help="stdio (default) or tcp:PORT (0 picks a port)"
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        graph = GraphSpec.from_dict(_load_json(args.graph))
        config = _load_json(args.model_config) if args.model_config else None
        model = build_model(args.model, graph, config)
        if args.transport == "stdio":
            serve_stdio(graph, model)
        elif args.transport.startswith("tcp:"):
            try:
                port = int(args.transport[len("tcp:"):])
            except ValueError:
                raise BridgeInputError(
                    f"bad port in transport {args.transport!r}"
                ) from None
            serve_tcp(graph, model, port=port)
        else:
            raise BridgeInputError(
                f"transport {args.transport!r} not understood; use stdio or tcp:PORT"
            )
    except BridgeInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KeyboardInterrupt, BrokenPipeError):
        return EXIT_OK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
