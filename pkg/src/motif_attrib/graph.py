"""Undirected graphs and node subsets.

Node subsets are bit vectors packed into Python integers, so they stay cheap
for the word-sized case and keep working past 64 nodes. Graphs are immutable
once built; every query below treats them as read-only.
"""

from __future__ import annotations

from typing import Iterable, Iterator, List, Sequence, Tuple

from .errors import InputError


class NodeSubset:
    """Immutable set of node indices drawn from a ground set of size n."""

    __slots__ = ("n", "mask")

    def __init__(self, n: int, mask: int = 0):
        if n < 0:
            raise InputError(f"ground set size must be nonnegative, got {n}")
        if mask < 0 or mask >> n:
            raise InputError(f"mask {mask:#x} out of range for n={n}")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mask", mask)

    def __setattr__(self, name, value):
        raise AttributeError("NodeSubset is immutable")

    @classmethod
    def from_nodes(cls, n: int, nodes: Iterable[int]) -> "NodeSubset":
        mask = 0
        for v in nodes:
            if not 0 <= v < n:
                raise InputError(f"node {v} out of range for n={n}")
            mask |= 1 << v
        return cls(n, mask)

    @classmethod
    def full(cls, n: int) -> "NodeSubset":
        return cls(n, (1 << n) - 1)

    def nodes(self) -> Tuple[int, ...]:
        return tuple(self)

    def __iter__(self) -> Iterator[int]:
        m = self.mask
        while m:
            low = m & -m
            yield low.bit_length() - 1
            m ^= low

    def __len__(self) -> int:
        return self.mask.bit_count()

    def __contains__(self, v: int) -> bool:
        return 0 <= v < self.n and (self.mask >> v) & 1 == 1

    def __bool__(self) -> bool:
        return self.mask != 0

    def _check_same_ground(self, other: "NodeSubset") -> None:
        if self.n != other.n:
            raise InputError(f"mismatched ground sets: n={self.n} vs n={other.n}")

    def union(self, other: "NodeSubset") -> "NodeSubset":
        self._check_same_ground(other)
        return NodeSubset(self.n, self.mask | other.mask)

    def intersection(self, other: "NodeSubset") -> "NodeSubset":
        self._check_same_ground(other)
        return NodeSubset(self.n, self.mask & other.mask)

    def difference(self, other: "NodeSubset") -> "NodeSubset":
        self._check_same_ground(other)
        return NodeSubset(self.n, self.mask & ~other.mask)

    def complement(self) -> "NodeSubset":
        return NodeSubset(self.n, ~self.mask & ((1 << self.n) - 1))

    def issubset(self, other: "NodeSubset") -> bool:
        self._check_same_ground(other)
        return self.mask & ~other.mask == 0

    def isdisjoint(self, other: "NodeSubset") -> bool:
        self._check_same_ground(other)
        return self.mask & other.mask == 0

    def with_node(self, v: int) -> "NodeSubset":
        if not 0 <= v < self.n:
            raise InputError(f"node {v} out of range for n={self.n}")
        return NodeSubset(self.n, self.mask | (1 << v))

    def without_node(self, v: int) -> "NodeSubset":
        if not 0 <= v < self.n:
            raise InputError(f"node {v} out of range for n={self.n}")
        return NodeSubset(self.n, self.mask & ~(1 << v))

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def sort_key(self) -> Tuple[int, int]:
        """Deterministic ordering key: size first, then packed bits."""
        return (self.mask.bit_count(), self.mask)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NodeSubset)
            and self.n == other.n
            and self.mask == other.mask
        )

    def __hash__(self) -> int:
        return hash((self.n, self.mask))

    def __repr__(self) -> str:
        return f"NodeSubset(n={self.n}, nodes={list(self)})"


class Graph:
    """Simple undirected graph on nodes 0..n-1. Use build_graph to construct."""

    __slots__ = ("n", "edges", "adj_masks")

    def __init__(self, n: int, edges: Tuple[Tuple[int, int], ...], adj_masks: Tuple[int, ...]):
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "adj_masks", adj_masks)

    def __setattr__(self, name, value):
        raise AttributeError("Graph is immutable")

    @property
    def full_mask(self) -> int:
        return (1 << self.n) - 1

    def full_subset(self) -> NodeSubset:
        return NodeSubset.full(self.n)

    def neighbors(self, v: int) -> Tuple[int, ...]:
        if not 0 <= v < self.n:
            raise InputError(f"node {v} out of range for n={self.n}")
        return tuple(NodeSubset(self.n, self.adj_masks[v]))

    def has_edge(self, i: int, j: int) -> bool:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise InputError(f"edge endpoint out of range for n={self.n}")
        return (self.adj_masks[i] >> j) & 1 == 1

    def degree(self, v: int) -> int:
        return self.adj_masks[v].bit_count()

    def without_edge(self, i: int, j: int) -> "Graph":
        """Copy of the graph with edge {i, j} removed."""
        if not self.has_edge(i, j):
            raise InputError(f"edge ({i}, {j}) not present")
        key = (min(i, j), max(i, j))
        return build_graph(self.n, [e for e in self.edges if e != key])

    def to_dict(self) -> dict:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        try:
            n = d["n"]
            edges = d["edges"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"graph document missing field: {exc}") from exc
        return build_graph(n, edges)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Graph) and self.n == other.n and self.edges == other.edges
        )

    def __hash__(self) -> int:
        return hash((self.n, self.edges))

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, m={len(self.edges)})"


def build_graph(n: int, edges: Iterable[Sequence[int]]) -> Graph:
    """Validate and build an undirected graph.

    Duplicate edges (in either orientation) collapse silently; self-loops and
    out-of-range endpoints are rejected.
    """
    if n < 1:
        raise InputError(f"graph needs at least one node, got n={n}")
    seen = set()
    for e in edges:
        if len(e) != 2:
            raise InputError(f"edge {e!r} is not a pair")
        i, j = int(e[0]), int(e[1])
        if not (0 <= i < n and 0 <= j < n):
            raise InputError(f"edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise InputError(f"self-loop at node {i} is not allowed")
        seen.add((min(i, j), max(i, j)))
    canon = tuple(sorted(seen))
    adj = [0] * n
    for i, j in canon:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    return Graph(n, canon, tuple(adj))


def complete_graph(n: int) -> Graph:
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def path_graph(n: int) -> Graph:
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


class ComponentPartition:
    """Connected components of an induced subgraph, ordered by smallest member."""

    __slots__ = ("subset", "components")

    def __init__(self, subset: NodeSubset, components: Tuple[NodeSubset, ...]):
        object.__setattr__(self, "subset", subset)
        object.__setattr__(self, "components", components)

    def __setattr__(self, name, value):
        raise AttributeError("ComponentPartition is immutable")

    def __iter__(self) -> Iterator[NodeSubset]:
        return iter(self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __repr__(self) -> str:
        return f"ComponentPartition({[list(c) for c in self.components]})"


def _component_masks(adj_masks: Sequence[int], t_mask: int) -> List[int]:
    """Masks of the connected components of the induced subgraph on t_mask."""
    out = []
    rest = t_mask
    while rest:
        seed = rest & -rest
        comp = seed
        frontier = seed
        while frontier:
            grown = 0
            f = frontier
            while f:
                low = f & -f
                f ^= low
                grown |= adj_masks[low.bit_length() - 1]
            frontier = grown & t_mask & ~comp
            comp |= frontier
        out.append(comp)
        rest &= ~comp
    return out


def connected_components(g: Graph, t: NodeSubset) -> ComponentPartition:
    """Partition the induced subgraph on t into connected components."""
    if t.n != g.n:
        raise InputError(f"subset over n={t.n} does not match graph n={g.n}")
    masks = _component_masks(g.adj_masks, t.mask)
    return ComponentPartition(t, tuple(NodeSubset(g.n, m) for m in masks))


def is_connected(g: Graph, t: NodeSubset) -> bool:
    """True when the induced subgraph on t has at most one component.

    The empty subset counts as connected.
    """
    if t.n != g.n:
        raise InputError(f"subset over n={t.n} does not match graph n={g.n}")
    return _is_connected_mask(g.adj_masks, t.mask)


def _is_connected_mask(adj_masks: Sequence[int], t_mask: int) -> bool:
    if t_mask == 0:
        return True
    seed = t_mask & -t_mask
    comp = seed
    frontier = seed
    while frontier:
        grown = 0
        f = frontier
        while f:
            low = f & -f
            f ^= low
            grown |= adj_masks[low.bit_length() - 1]
        frontier = grown & t_mask & ~comp
        comp |= frontier
    return comp == t_mask


def neighborhood(g: Graph, r: NodeSubset) -> NodeSubset:
    """Closed neighborhood: r together with every node adjacent to r."""
    if r.n != g.n:
        raise InputError(f"subset over n={r.n} does not match graph n={g.n}")
    m = r.mask
    for v in r:
        m |= g.adj_masks[v]
    return NodeSubset(g.n, m)


def _connected_subset_masks(adj_masks: Sequence[int], n: int, max_size: int) -> List[int]:
    """All nonempty connected subset masks with at most max_size nodes.

    Bottom-up extension enumeration: subsets are rooted at their smallest
    member and grown only through nodes above the root that are not already
    adjacent to the current set, so each subset is produced exactly once.
    """
    out = []
    if max_size <= 0:
        return out
    for v in range(n):
        vbit = 1 << v
        above_v = ~((vbit << 1) - 1)

        def extend(sub: int, ext: int, closed_nbh: int) -> None:
            out.append(sub)
            if sub.bit_count() >= max_size:
                return
            while ext:
                wbit = ext & -ext
                ext ^= wbit
                w_adj = adj_masks[wbit.bit_length() - 1]
                extend(sub | wbit, ext | (w_adj & above_v & ~closed_nbh),
                       closed_nbh | w_adj | wbit)

        extend(vbit, adj_masks[v] & above_v, vbit | adj_masks[v])
    out.sort(key=lambda m: (m.bit_count(), m))
    return out


def enumerate_connected_subsets(g: Graph, max_size: int) -> Iterator[NodeSubset]:
    """Yield every nonempty connected subset with at most max_size nodes.

    Order is deterministic: ascending size, then ascending packed bit value,
    so callers can rely on it for caching and reproducible output.
    """
    if max_size < 1:
        raise InputError(f"max_size must be at least 1, got {max_size}")
    for m in _connected_subset_masks(g.adj_masks, g.n, min(max_size, g.n)):
        yield NodeSubset(g.n, m)
