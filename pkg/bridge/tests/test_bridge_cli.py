import json
import shlex
import shutil
import socket
import subprocess
import sys

import pytest

from motif_bridge import WIRE_PROTOCOL
from motif_bridge.cli import EXIT_INPUT, main


def write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.fixture()
def p3_graph(tmp_path):
    return write_json(tmp_path / "g.json", {"n": 3, "edges": [[0, 1], [1, 2]]})


def spawn(args):
    return subprocess.Popen(
        [sys.executable, "-m", "motif_bridge.cli"] + args,
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        stderr=subprocess.PIPE,
        text=True,
        bufsize=1,
    )


def ask(proc, rid, nodes):
    proc.stdin.write(json.dumps({"id": rid, "nodes": nodes}) + "\n")
    proc.stdin.flush()
    return json.loads(proc.stdout.readline())


def test_stdio_round_trip(p3_graph):
    proc = spawn(["serve", "--graph", p3_graph, "--model", "degree-sum"])
    try:
        hello = json.loads(proc.stdout.readline())
        assert hello == {"protocol": WIRE_PROTOCOL, "n": 3}
        assert ask(proc, 1, [0, 1]) == {"id": 1, "value": 2.0}
        assert ask(proc, 2, []) == {"id": 2, "value": 0.0}
    finally:
        proc.stdin.close()
        assert proc.wait(timeout=10) == 0
        proc.stdout.close()
        proc.stderr.close()


def test_stdio_survives_garbage_line(p3_graph):
    proc = spawn(["serve", "--graph", p3_graph, "--model", "degree-sum"])
    try:
        proc.stdout.readline()
        proc.stdin.write("}}} nonsense {{{\n")
        proc.stdin.flush()
        err = json.loads(proc.stdout.readline())
        assert err["id"] is None and "error" in err
        assert ask(proc, 9, [1, 2]) == {"id": 9, "value": 2.0}
    finally:
        proc.stdin.close()
        assert proc.wait(timeout=10) == 0
        proc.stdout.close()
        proc.stderr.close()


def test_tcp_round_trip(p3_graph):
    proc = spawn(["serve", "--graph", p3_graph, "--model", "message-passing",
                  "--transport", "tcp:0"])
    try:
        announce = proc.stderr.readline()
        assert announce.startswith("listening on ")
        host, port = announce.split()[-1].rsplit(":", 1)
        with socket.create_connection((host, int(port)), timeout=10) as sock:
            rfile = sock.makefile("r", encoding="utf-8", newline="\n")
            wfile = sock.makefile("w", encoding="utf-8", newline="\n")
            assert json.loads(rfile.readline())["protocol"] == WIRE_PROTOCOL
            wfile.write(json.dumps({"id": 1, "nodes": [0, 1, 2]}) + "\n")
            wfile.flush()
            assert json.loads(rfile.readline()) == {"id": 1, "value": 2.125}
            rfile.close()
            wfile.close()
    finally:
        proc.terminate()
        proc.wait(timeout=10)
        proc.stdin.close()
        proc.stdout.close()
        proc.stderr.close()


def test_indicator_model_over_config_file(tmp_path, p3_graph):
    cfg = write_json(tmp_path / "cfg.json", {"motifs": [[0, 1]], "weights": [3.5]})
    proc = spawn(["serve", "--graph", p3_graph, "--model", "motif-indicator",
                  "--model-config", cfg])
    try:
        proc.stdout.readline()
        assert ask(proc, 1, [0, 1, 2]) == {"id": 1, "value": 3.5}
        assert ask(proc, 2, [0, 2]) == {"id": 2, "value": 0.0}
    finally:
        proc.stdin.close()
        assert proc.wait(timeout=10) == 0
        proc.stdout.close()
        proc.stderr.close()


def test_indicator_matches_engine_planted_game_through_the_wire(tmp_path):
    # exhaustive bit-for-bit cross-check on a 6-node graph, driven by the
    # engine's own wire client
    motif_attrib = pytest.importorskip("motif_attrib")
    edges = [[0, 1], [1, 2], [2, 3], [3, 4], [4, 5], [1, 4]]
    gpath = write_json(tmp_path / "g.json", {"n": 6, "edges": edges})
    cfg = {"motifs": [[0, 1, 2], [4, 5]], "weights": [1.75, -0.5]}
    cpath = write_json(tmp_path / "cfg.json", cfg)

    g = motif_attrib.build_graph(6, [tuple(e) for e in edges])
    local = motif_attrib.make_planted_motif_game(
        g,
        [motif_attrib.NodeSubset.from_nodes(6, m) for m in cfg["motifs"]],
        cfg["weights"],
    )
    cmd = (
        f"{shlex.quote(sys.executable)} -m motif_bridge.cli serve "
        f"--graph {shlex.quote(gpath)} --model motif-indicator "
        f"--model-config {shlex.quote(cpath)}"
    )
    remote = motif_attrib.external_backend("stdio:" + cmd, expected_n=6)
    try:
        for mask in range(1 << 6):
            nodes = [v for v in range(6) if (mask >> v) & 1]
            assert remote.evaluate_nodes(nodes) == local.evaluate_nodes(nodes)
    finally:
        remote.close()


def run_cli(args, capsys):
    rc = main(args)
    return rc, capsys.readouterr().err


def test_unknown_model_exits_with_input_error(p3_graph, capsys):
    rc, err = run_cli(["serve", "--graph", p3_graph, "--model", "gpt"], capsys)
    assert rc == EXIT_INPUT
    assert "unknown model" in err


def test_missing_graph_file_exits_with_input_error(capsys):
    rc, err = run_cli(["serve", "--graph", "/no/such.json", "--model", "degree-sum"], capsys)
    assert rc == EXIT_INPUT
    assert "cannot read" in err


def test_malformed_graph_file_exits_with_input_error(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    rc, err = run_cli(["serve", "--graph", str(bad), "--model", "degree-sum"], capsys)
    assert rc == EXIT_INPUT
    assert "not valid JSON" in err


def test_indicator_without_config_exits_with_input_error(p3_graph, capsys):
    rc, err = run_cli(["serve", "--graph", p3_graph, "--model", "motif-indicator"], capsys)
    assert rc == EXIT_INPUT
    assert "config" in err


def test_bad_transport_exits_with_input_error(p3_graph, capsys):
    for transport in ("udp:99", "tcp:loud"):
        rc, err = run_cli(
            ["serve", "--graph", p3_graph, "--model", "degree-sum",
             "--transport", transport],
            capsys,
        )
        assert rc == EXIT_INPUT


def test_console_script_round_trip(p3_graph):
    exe = shutil.which("motif-bridge")
    if exe is None:
        pytest.skip("console script not on PATH")
    proc = subprocess.Popen(
        [exe, "serve", "--graph", p3_graph, "--model", "degree-sum"],
        stdin=subprocess.PIPE,
        stdout=subprocess.PIPE,
        text=True,
        bufsize=1,
    )
    try:
        assert json.loads(proc.stdout.readline())["n"] == 3
        assert ask(proc, 1, [0, 1]) == {"id": 1, "value": 2.0}
    finally:
        proc.stdin.close()
        assert proc.wait(timeout=10) == 0
        proc.stdout.close()
