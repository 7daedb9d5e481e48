"""Request/reply loop speaking the motif-attrib/1 wire protocol.

The server writes one handshake line, then answers line-delimited JSON
requests until the peer closes the stream. Bad lines and model failures get
an error reply instead of killing the session.
"""

import json
import math
import socket
import sys
from typing import Optional, TextIO

from .models import BridgeInputError, GraphSpec, ModelFn

WIRE_PROTOCOL = "motif-attrib/1"


def _reply(wfile: TextIO, doc: dict) -> None:
    wfile.write(json.dumps(doc) + "\n")
    wfile.flush()


def serve_session(graph: GraphSpec, model: ModelFn, rfile: TextIO, wfile: TextIO) -> None:
    """Handshake, then serve requests until EOF on the read side."""
    _reply(wfile, {"protocol": WIRE_PROTOCOL, "n": graph.n})
    while True:
        line = rfile.readline()
        if line == "":
            return
        line = line.strip()
        if not line:
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            # no trustworthy id to echo
            _reply(wfile, {"id": None, "error": f"malformed request: {exc}"})
            continue
        rid = doc.get("id") if isinstance(doc, dict) else None
        if not isinstance(rid, int) or isinstance(rid, bool):
            _reply(wfile, {"id": None, "error": "request needs an integer id"})
            continue
        try:
            keep = graph.check_nodes(doc.get("nodes"))
            value = float(model(keep))
        except BridgeInputError as exc:
            _reply(wfile, {"id": rid, "error": str(exc)})
            continue
        except Exception as exc:  # model code is user supplied
            _reply(wfile, {"id": rid, "error": f"model failed: {exc}"})
            continue
        if not math.isfinite(value):
            _reply(wfile, {"id": rid, "error": f"model produced non-finite value {value!r}"})
            continue
        _reply(wfile, {"id": rid, "value": value})


def serve_stdio(graph: GraphSpec, model: ModelFn) -> None:
    serve_session(graph, model, sys.stdin, sys.stdout)


def serve_tcp(
    graph: GraphSpec,
    model: ModelFn,
    port: int,
    host: str = "127.0.0.1",
    announce: Optional[TextIO] = None,
) -> None:
    """Accept clients one at a time, forever; each gets a fresh session.

    Port 0 binds an ephemeral port; the bound address is announced on
    stderr so callers can discover it.
    """
    announce = sys.stderr if announce is None else announce
    srv = socket.create_server((host, port))
    try:
        bound_host, bound_port = srv.getsockname()[:2]
        print(f"listening on {bound_host}:{bound_port}", file=announce, flush=True)
        while True:
            conn, _ = srv.accept()
            with conn:
                rfile = conn.makefile("r", encoding="utf-8", newline="\n")
                wfile = conn.makefile("w", encoding="utf-8", newline="\n")
                try:
                    serve_session(graph, model, rfile, wfile)
                except (BrokenPipeError, ConnectionResetError):
                    pass
                finally:
                    rfile.close()
                    wfile.close()
    finally:
        srv.close()
