"""Toy graph models and the registry that serves them.

A model is a callable taking a set of kept nodes and returning a float. The
server deletes every other node, so each model only ever sees the induced
subgraph on its keep-set. Factories receive the fixed graph plus an optional
JSON config document.
"""

import math
from typing import Callable, Dict, Iterable, Optional, Set

ModelFn = Callable[[Set[int]], float]


class BridgeInputError(ValueError):
    """Bad graph document, model config, or request payload."""


class GraphSpec:
    """Minimal immutable graph: node count plus undirected edge list."""

    __slots__ = ("n", "edges", "_adj")

    def __init__(self, n: int, edges: Iterable):
        if not isinstance(n, int) or isinstance(n, bool) or n < 1:
            raise BridgeInputError(f"graph needs a positive integer n, got {n!r}")
        adj = [set() for _ in range(n)]
        seen = set()
        for e in edges:
            if not isinstance(e, (list, tuple)) or len(e) != 2:
                raise BridgeInputError(f"edge {e!r} is not a pair")
            i, j = e
            for u in (i, j):
                if not isinstance(u, int) or isinstance(u, bool) or not 0 <= u < n:
                    raise BridgeInputError(f"edge {e!r} has endpoint outside 0..{n - 1}")
            if i == j:
                raise BridgeInputError(f"self loop on node {i}")
            key = (min(i, j), max(i, j))
            if key in seen:
                continue
            seen.add(key)
            adj[i].add(j)
            adj[j].add(i)
        self.n = n
        self.edges = tuple(sorted(seen))
        self._adj = tuple(frozenset(s) for s in adj)

    @classmethod
    def from_dict(cls, doc) -> "GraphSpec":
        if not isinstance(doc, dict) or "n" not in doc or "edges" not in doc:
            raise BridgeInputError('graph document needs "n" and "edges" fields')
        return cls(doc["n"], doc["edges"])

    def neighbors(self, v: int) -> frozenset:
        return self._adj[v]

    def induced_edges(self, keep: Set[int]):
        return [(i, j) for i, j in self.edges if i in keep and j in keep]

    def check_nodes(self, nodes) -> Set[int]:
        """Validate a request payload and return it as a node set."""
        if not isinstance(nodes, list):
            raise BridgeInputError('request needs a "nodes" list')
        for u in nodes:
            if not isinstance(u, int) or isinstance(u, bool):
                raise BridgeInputError(f"node {u!r} is not an integer")
            if not 0 <= u < self.n:
                raise BridgeInputError(f"node {u} outside 0..{self.n - 1}")
        keep = set(nodes)
        if len(keep) != len(nodes):
            raise BridgeInputError("duplicate nodes in request")
        return keep


def make_degree_sum(graph: GraphSpec, config: Optional[dict] = None) -> ModelFn:
    """Sum of node degrees in the induced subgraph (twice the kept edges)."""
    if config is not None:
        raise BridgeInputError("degree-sum takes no config")

    def model(keep: Set[int]) -> float:
        return 2.0 * len(graph.induced_edges(keep))

    return model


def make_motif_indicator(graph: GraphSpec, config: Optional[dict] = None) -> ModelFn:
    """Weighted sum of indicator games: each motif pays its weight once the
    keep-set covers it."""
    if not isinstance(config, dict):
        raise BridgeInputError('motif-indicator needs a config with "motifs" and "weights"')
    motifs = config.get("motifs")
    weights = config.get("weights")
    if not isinstance(motifs, list) or not isinstance(weights, list):
        raise BridgeInputError('motif-indicator config needs "motifs" and "weights" lists')
    if len(motifs) != len(weights):
        raise BridgeInputError(
            f"{len(motifs)} motifs but {len(weights)} weights"
        )
    sets = []
    for m in motifs:
        if not isinstance(m, list) or not m:
            raise BridgeInputError(f"motif {m!r} is not a nonempty node list")
        for u in m:
            if not isinstance(u, int) or isinstance(u, bool) or not 0 <= u < graph.n:
                raise BridgeInputError(f"motif node {u!r} outside 0..{graph.n - 1}")
        sets.append(frozenset(m))
    ws = []
    for w in weights:
        if not isinstance(w, (int, float)) or isinstance(w, bool) or not math.isfinite(w):
            raise BridgeInputError(f"weight {w!r} is not a finite number")
        ws.append(float(w))

    def model(keep: Set[int]) -> float:
        return math.fsum(w for s, w in zip(sets, ws) if s <= keep)

    return model


def make_message_passing(graph: GraphSpec, config: Optional[dict] = None) -> ModelFn:
    """Small deterministic message-passing scorer.

    Every kept node starts at state 1.0; each round a node keeps half its
    state and adds a quarter of the sum over kept neighbors. The score is
    the sum of final states, so it depends on the induced edge structure
    rather than just the subset size.
    """
    rounds = 2
    if config is not None:
        if not isinstance(config, dict) or set(config) - {"rounds"}:
            raise BridgeInputError('message-passing config allows only "rounds"')
        rounds = config.get("rounds", 2)
        if not isinstance(rounds, int) or isinstance(rounds, bool) or rounds < 0:
            raise BridgeInputError(f"rounds must be a nonnegative integer, got {rounds!r}")

    def model(keep: Set[int]) -> float:
        h = {v: 1.0 for v in sorted(keep)}
        for _ in range(rounds):
            h = {
                v: 0.5 * h[v]
                + 0.25 * math.fsum(h[u] for u in sorted(graph.neighbors(v)) if u in h)
                for v in h
            }
        return math.fsum(h.values())

    return model


def toy_models() -> Dict[str, Callable[[GraphSpec, Optional[dict]], ModelFn]]:
    """Registry of bundled model factories, keyed by CLI name."""
    return {
        "degree-sum": make_degree_sum,
        "motif-indicator": make_motif_indicator,
        "message-passing": make_message_passing,
    }


def build_model(name: str, graph: GraphSpec, config: Optional[dict] = None) -> ModelFn:
    registry = toy_models()
    if name not in registry:
        raise BridgeInputError(
            f"unknown model {name!r}; available: {', '.join(sorted(registry))}"
        )
    return registry[name](graph, config)
