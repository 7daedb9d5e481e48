"""Wire-protocol client: handshake, request/reply, and the error taxonomy."""

import json
import math
import socket
import sys
import threading
import time

import pytest

from motif_attrib import (
    BackendConnectionError,
    BackendEvalError,
    BackendProtocolError,
    InputError,
    ValueFunction,
    external_backend,
    myerson_exact,
    path_graph,
)

SERVER_SCRIPT = r'''
import json
import sys


def main():
    n = int(sys.argv[1])
    mode = sys.argv[2] if len(sys.argv) > 2 else "ok"
    proto = "motif-attrib/0" if mode == "oldproto" else "motif-attrib/1"
    hs = {"protocol": proto, "n": 0 if mode == "badn" else n}
    sys.stdout.write(json.dumps(hs) + "\n")
    sys.stdout.flush()
    if mode == "eof":
        return
    for line in sys.stdin:
        req = json.loads(line)
        rid = req.get("id")
        nodes = req.get("nodes", [])
        if mode == "badid":
            out = {"id": rid + 1, "value": 0.0}
        elif mode == "strval":
            out = {"id": rid, "value": "zero"}
        elif mode == "nanval":
            out = {"id": rid, "value": float("nan")}
        elif mode == "garbage":
            sys.stdout.write("{not json\n")
            sys.stdout.flush()
            continue
        elif mode == "errodd" and len(nodes) % 2 == 1:
            out = {"id": rid, "error": "odd subsets unsupported"}
        else:
            out = {"id": rid, "value": float(len(nodes)) ** 2}
        sys.stdout.write(json.dumps(out) + "\n")
        sys.stdout.flush()


main()
'''


@pytest.fixture(scope="module")
def server_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("wire") / "server.py"
    path.write_text(SERVER_SCRIPT)
    return str(path)


def stdio_endpoint(server_path, n, mode="ok"):
    return f"stdio:{sys.executable} {server_path} {n} {mode}"


class TestStdioBackend:
    def test_evaluates_and_counts_distinct_queries(self, server_path):
        with external_backend(stdio_endpoint(server_path, 4)) as v:
            assert v.n == 4
            assert v.evaluate_nodes([0, 2]) == 4.0
            assert v.evaluate_nodes([0, 2]) == 4.0
            assert v.evaluate_nodes([]) == 0.0
            assert v.query_count == 2

    def test_matches_in_process_computation(self, server_path):
        g = path_graph(4)
        table = ValueFunction(4, lambda mask: float(mask.bit_count() ** 2))
        with external_backend(stdio_endpoint(server_path, 4)) as remote:
            a = myerson_exact(g, remote)
        b = myerson_exact(g, table)
        for i in range(4):
            assert math.isclose(a.value([i]), b.value([i]), abs_tol=1e-12)

    def test_error_reply(self, server_path):
        with external_backend(stdio_endpoint(server_path, 4, "errodd")) as v:
            assert v.evaluate_nodes([0, 1]) == 4.0
            with pytest.raises(BackendEvalError, match="odd"):
                v.evaluate_nodes([2])

    def test_mismatched_reply_id(self, server_path):
        with external_backend(stdio_endpoint(server_path, 3, "badid")) as v:
            with pytest.raises(BackendProtocolError, match="id"):
                v.evaluate_nodes([0])

    def test_non_numeric_value(self, server_path):
        with external_backend(stdio_endpoint(server_path, 3, "strval")) as v:
            with pytest.raises(BackendProtocolError, match="numeric"):
                v.evaluate_nodes([0])

    def test_non_finite_value(self, server_path):
        with external_backend(stdio_endpoint(server_path, 3, "nanval")) as v:
            with pytest.raises(BackendProtocolError, match="finite"):
                v.evaluate_nodes([0])

    def test_malformed_reply_line(self, server_path):
        with external_backend(stdio_endpoint(server_path, 3, "garbage")) as v:
            with pytest.raises(BackendProtocolError, match="malformed"):
                v.evaluate_nodes([0])

    def test_connection_closed_mid_session(self, server_path):
        with external_backend(stdio_endpoint(server_path, 3, "eof")) as v:
            with pytest.raises(BackendConnectionError):
                v.evaluate_nodes([0])

    def test_wrong_protocol_tag(self, server_path):
        with pytest.raises(BackendProtocolError, match="motif-attrib/1"):
            external_backend(stdio_endpoint(server_path, 3, "oldproto"))

    def test_invalid_handshake_n(self, server_path):
        with pytest.raises(BackendProtocolError, match="invalid n"):
            external_backend(stdio_endpoint(server_path, 3, "badn"))

    def test_expected_n_mismatch(self, server_path):
        with pytest.raises(BackendProtocolError, match="expected n=5"):
            external_backend(stdio_endpoint(server_path, 4), expected_n=5)

    def test_spawn_failure(self):
        with pytest.raises(BackendConnectionError):
            external_backend("stdio:/no/such/binary-anywhere")


def tcp_server(behavior):
    """One-shot TCP server thread; returns (port, thread)."""
    listener = socket.socket()
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    port = listener.getsockname()[1]

    def run():
        conn, _ = listener.accept()
        rfile = conn.makefile("r", encoding="utf-8", newline="\n")
        wfile = conn.makefile("w", encoding="utf-8", newline="\n")
        try:
            behavior(rfile, wfile)
        finally:
            rfile.close()
            wfile.close()
            conn.close()
            listener.close()

    thread = threading.Thread(target=run, daemon=True)
    thread.start()
    return port, thread


def serve_squares(rfile, wfile, n=4, delay=0.0):
    wfile.write(json.dumps({"protocol": "motif-attrib/1", "n": n}) + "\n")
    wfile.flush()
    for line in rfile:
        req = json.loads(line)
        if delay:
            time.sleep(delay)
        wfile.write(
            json.dumps({"id": req["id"], "value": float(len(req["nodes"])) ** 2})
            + "\n"
        )
        wfile.flush()


class TestTcpBackend:
    def test_round_trip(self):
        port, thread = tcp_server(serve_squares)
        with external_backend(f"tcp:127.0.0.1:{port}", expected_n=4) as v:
            assert v.evaluate_nodes([1, 2, 3]) == 9.0
            assert v.evaluate_nodes([0]) == 1.0
        thread.join(timeout=5)

    def test_connection_refused(self):
        probe = socket.socket()
        probe.bind(("127.0.0.1", 0))
        free_port = probe.getsockname()[1]
        probe.close()
        with pytest.raises(BackendConnectionError):
            external_backend(f"tcp:127.0.0.1:{free_port}", timeout=2.0)

    def test_slow_reply_times_out(self):
        port, _ = tcp_server(
            lambda r, w: serve_squares(r, w, delay=2.0)
        )
        with external_backend(f"tcp:127.0.0.1:{port}", timeout=0.3) as v:
            with pytest.raises(BackendConnectionError, match="timed out"):
                v.evaluate_nodes([0])


class TestEndpointParsing:
    def test_bad_endpoints(self):
        for endpoint in (
            "tcp:9999",
            "tcp::1234",
            "tcp:localhost:notaport",
            "stdio:",
            "carrier-pigeon:coop",
        ):
            with pytest.raises(InputError):
                external_backend(endpoint)
