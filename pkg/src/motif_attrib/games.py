"""Value functions over node subsets.

A value function is a black box f mapping subsets of graph nodes to reals.
Everything downstream (indices, search, metrics) talks to the classes here,
which add memoization, distinct-query accounting, restriction to connected
components, and a wire client for out-of-process backends.
"""

from __future__ import annotations

import json
import math
import random
import shlex
import socket
import subprocess
import threading
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence

from .errors import (
    BackendConnectionError,
    BackendError,
    BackendEvalError,
    BackendProtocolError,
    InputError,
)
from .graph import Graph, NodeSubset, _component_masks, is_connected

WIRE_PROTOCOL = "motif-attrib/1"

# Exact enumeration over all 2^n subsets caps out here; beyond it only the
# sampled paths make sense.
MAX_TABLE_NODES = 16


class ValueFunction:
    """Memoized set function with distinct-query accounting.

    The backend is consulted once per distinct subset; concurrent callers may
    race to evaluate the same subset, but query_count still reports distinct
    subsets only. Backends must be deterministic for that to be sound.
    """

    def __init__(self, n: int, backend: Callable[[int], float], kind: str = "custom"):
        if n < 1:
            raise InputError(f"value function needs n >= 1, got {n}")
        self.n = n
        self.kind = kind
        self._backend = backend
        self._cache: Dict[int, float] = {}
        self._lock = threading.Lock()
        self._distinct = 0

    @property
    def query_count(self) -> int:
        """Distinct subsets evaluated against the backend so far."""
        return self._distinct

    @property
    def empty_value(self) -> float:
        return self.eval_mask(0)

    @classmethod
    def from_callable(
        cls, n: int, fn: Callable[[NodeSubset], float], kind: str = "custom"
    ) -> "ValueFunction":
        return cls(n, lambda mask: fn(NodeSubset(n, mask)), kind=kind)

    def evaluate(self, t: NodeSubset) -> float:
        if t.n != self.n:
            raise InputError(f"subset over n={t.n} does not match n={self.n}")
        return self.eval_mask(t.mask)

    def evaluate_nodes(self, nodes: Iterable[int]) -> float:
        return self.eval_mask(NodeSubset.from_nodes(self.n, nodes).mask)

    def eval_mask(self, mask: int) -> float:
        got = self._cache.get(mask)
        if got is not None:
            return got
        if mask < 0 or mask >> self.n:
            raise InputError(f"mask {mask:#x} out of range for n={self.n}")
        val = float(self._backend(mask))
        if not math.isfinite(val):
            raise BackendError(
                f"backend returned non-finite value {val!r} for mask {mask:#x}"
            )
        with self._lock:
            if mask not in self._cache:
                self._cache[mask] = val
                self._distinct += 1
            return self._cache[mask]

    def close(self) -> None:
        """Release backend resources. No-op for in-process backends."""

    def __enter__(self) -> "ValueFunction":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class _NormalizedValueFunction(ValueFunction):
    """View of a base function with its empty-set value subtracted."""

    def __init__(self, base: ValueFunction):
        super().__init__(base.n, lambda mask: 0.0, kind=f"normalized:{base.kind}")
        self._base = base

    def eval_mask(self, mask: int) -> float:
        if mask < 0 or mask >> self.n:
            raise InputError(f"mask {mask:#x} out of range for n={self.n}")
        return self._base.eval_mask(mask) - self._base.eval_mask(0)

    @property
    def query_count(self) -> int:
        return self._base.query_count

    def close(self) -> None:
        self._base.close()


def normalize(v: ValueFunction) -> ValueFunction:
    """Shift so the empty set maps to exactly 0: g(T) = f(T) - f(empty)."""
    if isinstance(v, _NormalizedValueFunction):
        return v
    return _NormalizedValueFunction(v)


class RestrictedValueFunction:
    """Interaction-restricted view of a base function on a graph.

    The value of a subset is the sum of the base values of its connected
    components, and the empty set maps to 0. Only connected subsets ever
    reach the base backend, which is what makes query accounting on sparse
    graphs meaningful.
    """

    def __init__(self, base: ValueFunction, graph: Graph):
        if base.n != graph.n:
            raise InputError(
                f"value function n={base.n} does not match graph n={graph.n}"
            )
        self.base = base
        self.graph = graph
        self.n = graph.n
        self.kind = f"restricted:{base.kind}"
        self._cache: Dict[int, float] = {0: 0.0}
        self._lock = threading.Lock()

    @property
    def query_count(self) -> int:
        return self.base.query_count

    def evaluate(self, t: NodeSubset) -> float:
        if t.n != self.n:
            raise InputError(f"subset over n={t.n} does not match n={self.n}")
        return self.eval_mask(t.mask)

    def eval_mask(self, mask: int) -> float:
        got = self._cache.get(mask)
        if got is not None:
            return got
        comps = _component_masks(self.graph.adj_masks, mask)
        val = math.fsum(self.base.eval_mask(c) for c in comps)
        with self._lock:
            self._cache.setdefault(mask, val)
        return val


def restricted_evaluate(v: ValueFunction, g: Graph, t: NodeSubset) -> float:
    """One-shot restricted value: sum of base values over components of t."""
    if v.n != g.n or t.n != g.n:
        raise InputError("value function, graph and subset sizes must agree")
    comps = _component_masks(g.adj_masks, t.mask)
    return math.fsum(v.eval_mask(c) for c in comps)


def make_unanimity(n: int, t: NodeSubset) -> ValueFunction:
    """Unanimity game: 1 on supersets of t, 0 elsewhere. t must be nonempty."""
    if t.n != n:
        raise InputError(f"subset over n={t.n} does not match n={n}")
    if not t:
        raise InputError("unanimity game needs a nonempty carrier")
    t_mask = t.mask
    return ValueFunction(
        n, lambda mask: 1.0 if mask & t_mask == t_mask else 0.0, kind="unanimity"
    )


def make_planted_motif_game(
    g: Graph, motifs: Sequence[NodeSubset], weights: Sequence[float]
) -> ValueFunction:
    """Weighted sum of unanimity games on connected motifs.

    f(T) = sum of weights[l] over motifs fully contained in T.
    """
    if len(motifs) != len(weights):
        raise InputError(
            f"{len(motifs)} motifs but {len(weights)} weights"
        )
    for s in motifs:
        if s.n != g.n:
            raise InputError(f"motif over n={s.n} does not match graph n={g.n}")
        if not s:
            raise InputError("planted motifs must be nonempty")
        if not is_connected(g, s):
            raise InputError(f"planted motif {sorted(s)} is not connected")
    ws = [float(w) for w in weights]
    if not all(math.isfinite(w) for w in ws):
        raise InputError("planted motif weights must be finite")
    pairs = [(s.mask, w) for s, w in zip(motifs, ws)]

    def fn(mask: int) -> float:
        return math.fsum(w for m, w in pairs if mask & m == m)

    return ValueFunction(g.n, fn, kind="planted")


def make_random_game(n: int, seed: int) -> ValueFunction:
    """Full random table game: i.i.d. uniform[-1, 1] values, f(empty) = 0."""
    if n > MAX_TABLE_NODES:
        raise InputError(f"random table games support n <= {MAX_TABLE_NODES}, got {n}")
    rng = random.Random(seed)
    table = [rng.uniform(-1.0, 1.0) for _ in range(1 << n)]
    table[0] = 0.0
    return ValueFunction(n, table.__getitem__, kind="random")


def subset_key(nodes: Iterable[int]) -> str:
    """Canonical table key: comma-joined ascending node indices."""
    return ",".join(str(v) for v in sorted(nodes))


def _parse_subset_key(key: str, n: int) -> int:
    if key == "":
        return 0
    mask = 0
    for part in key.split(","):
        try:
            v = int(part)
        except ValueError as exc:
            raise InputError(f"bad subset key {key!r}") from exc
        if not 0 <= v < n:
            raise InputError(f"subset key {key!r} out of range for n={n}")
        bit = 1 << v
        if mask & bit:
            raise InputError(f"subset key {key!r} repeats node {v}")
        mask |= bit
    return mask


def table_value_function(n: int, values: Mapping[str, float]) -> ValueFunction:
    """Table game from a key -> value mapping.

    The table may be partial; querying a missing subset raises InputError
    with the offending key, which keeps restricted evaluation usable with
    tables that only cover connected subsets.
    """
    if n > MAX_TABLE_NODES:
        raise InputError(f"table games support n <= {MAX_TABLE_NODES}, got {n}")
    by_mask: Dict[int, float] = {}
    for key, raw in values.items():
        val = float(raw)
        if not math.isfinite(val):
            raise InputError(f"table value for {key!r} is not finite")
        by_mask[_parse_subset_key(key, n)] = val

    def fn(mask: int) -> float:
        try:
            return by_mask[mask]
        except KeyError:
            missing = subset_key(NodeSubset(n, mask))
            raise InputError(f"table game has no value for subset {missing!r}") from None

    return ValueFunction(n, fn, kind="table")


def game_from_dict(d: Mapping) -> ValueFunction:
    """Build a value function from a parsed JSON document.

    Accepts the plain table schema {"n": ..., "values": {...}} and the typed
    variants {"type": "planted", "graph"|..., ...} and {"type": "random", ...}.
    """
    if not isinstance(d, Mapping):
        raise InputError("game document must be a JSON object")
    kind = d.get("type")
    if kind is None and "values" in d:
        kind = "table"
    if kind == "table":
        try:
            return table_value_function(int(d["n"]), d["values"])
        except KeyError as exc:
            raise InputError(f"table game document missing field: {exc}") from exc
    if kind == "planted":
        try:
            n = int(d["n"])
            motifs = [NodeSubset.from_nodes(n, m) for m in d["motifs"]]
            weights = d["weights"]
            edges = d["edges"]
        except KeyError as exc:
            raise InputError(f"planted game document missing field: {exc}") from exc
        from .graph import build_graph

        return make_planted_motif_game(build_graph(n, edges), motifs, weights)
    if kind == "random":
        try:
            return make_random_game(int(d["n"]), int(d["seed"]))
        except KeyError as exc:
            raise InputError(f"random game document missing field: {exc}") from exc
    raise InputError(f"unrecognized game document type {kind!r}")


def game_to_table_dict(v: ValueFunction) -> dict:
    """Materialize a game as the table schema (exhausts all 2^n subsets)."""
    if v.n > MAX_TABLE_NODES:
        raise InputError(f"cannot materialize a table for n={v.n}")
    values = {}
    for mask in range(1 << v.n):
        values[subset_key(NodeSubset(v.n, mask))] = v.eval_mask(mask)
    return {"n": v.n, "values": values}


class _WireClient:
    """Line-delimited JSON client for the motif-attrib/1 protocol.

    One request/reply pair in flight at a time; a lock serializes callers.
    """

    def __init__(self, rfile, wfile, closer: Callable[[], None]):
        self._rfile = rfile
        self._wfile = wfile
        self._closer = closer
        self._lock = threading.Lock()
        self._next_id = 0
        try:
            self.n = self._handshake()
        except BaseException:
            self.close()
            raise

    def _read_line(self) -> str:
        try:
            line = self._rfile.readline()
        except (socket.timeout, TimeoutError) as exc:
            raise BackendConnectionError("backend read timed out") from exc
        except OSError as exc:
            raise BackendConnectionError(f"backend read failed: {exc}") from exc
        if line == "":
            raise BackendConnectionError("backend closed the connection")
        return line

    def _handshake(self) -> int:
        try:
            doc = json.loads(self._read_line())
        except json.JSONDecodeError as exc:
            raise BackendProtocolError(f"malformed handshake: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("protocol") != WIRE_PROTOCOL:
            raise BackendProtocolError(
                f"backend speaks {doc.get('protocol')!r}, expected {WIRE_PROTOCOL!r}"
            )
        n = doc.get("n")
        if not isinstance(n, int) or n < 1:
            raise BackendProtocolError(f"handshake reports invalid n={n!r}")
        return n

    def request(self, nodes: List[int]) -> float:
        with self._lock:
            self._next_id += 1
            rid = self._next_id
            try:
                self._wfile.write(json.dumps({"id": rid, "nodes": nodes}) + "\n")
                self._wfile.flush()
            except OSError as exc:
                raise BackendConnectionError(f"backend write failed: {exc}") from exc
            try:
                doc = json.loads(self._read_line())
            except json.JSONDecodeError as exc:
                raise BackendProtocolError(f"malformed reply: {exc}") from exc
        if not isinstance(doc, dict) or doc.get("id") != rid:
            raise BackendProtocolError(
                f"reply id {doc.get('id')!r} does not match request id {rid}"
            )
        if "error" in doc:
            raise BackendEvalError(str(doc["error"]))
        value = doc.get("value")
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise BackendProtocolError(f"reply has no numeric value: {doc!r}")
        if not math.isfinite(float(value)):
            raise BackendProtocolError(f"reply value {value!r} is not finite")
        return float(value)

    def close(self) -> None:
        try:
            self._closer()
        except OSError:
            pass


def _open_wire_client(endpoint: str, timeout: float) -> _WireClient:
    if endpoint.startswith("tcp:"):
        rest = endpoint[len("tcp:"):]
        host, sep, port_s = rest.rpartition(":")
        if not sep or not host:
            raise InputError(f"tcp endpoint must look like tcp:HOST:PORT, got {endpoint!r}")
        try:
            port = int(port_s)
        except ValueError as exc:
            raise InputError(f"bad tcp port in endpoint {endpoint!r}") from exc
        try:
            sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise BackendConnectionError(f"cannot connect to {endpoint}: {exc}") from exc
        rfile = sock.makefile("r", encoding="utf-8", newline="\n")
        wfile = sock.makefile("w", encoding="utf-8", newline="\n")

        def close() -> None:
            rfile.close()
            wfile.close()
            sock.close()

        return _WireClient(rfile, wfile, close)
    if endpoint.startswith("stdio:"):
        cmd = shlex.split(endpoint[len("stdio:"):])
        if not cmd:
            raise InputError("stdio endpoint needs a command to run")
        try:
            proc = subprocess.Popen(
                cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise BackendConnectionError(f"cannot spawn {cmd[0]!r}: {exc}") from exc

        def close() -> None:
            proc.stdin.close()
            proc.stdout.close()
            proc.terminate()
            proc.wait(timeout=5)

        return _WireClient(proc.stdout, proc.stdin, close)
    raise InputError(
        f"endpoint {endpoint!r} not understood; use tcp:HOST:PORT or stdio:COMMAND"
    )


class ExternalValueFunction(ValueFunction):
    """Value function served by a remote process over the wire protocol."""

    def __init__(self, client: _WireClient):
        self._client = client
        n = client.n

        def fn(mask: int) -> float:
            return client.request(list(NodeSubset(n, mask)))

        super().__init__(n, fn, kind="external")

    def close(self) -> None:
        self._client.close()


def external_backend(
    endpoint: str, expected_n: Optional[int] = None, timeout: float = 30.0
) -> ExternalValueFunction:
    """Connect to a remote value backend.

    Endpoint forms: "tcp:HOST:PORT" for a listening server, or
    "stdio:COMMAND ARGS..." to spawn a child process and talk over its pipes.
    The server's handshake fixes n; a mismatch with expected_n is fatal.
    """
    client = _open_wire_client(endpoint, timeout)
    if expected_n is not None and client.n != expected_n:
        got = client.n
        client.close()
        raise BackendProtocolError(
            f"backend handshake reports n={got}, expected n={expected_n}"
        )
    return ExternalValueFunction(client)
