"""Cooperative-game interaction indices on graphs.

Four index families over a common core: per-node Shapley values, their
structure-aware Myerson variant (the game restricted to connected
components), and the order-k generalizations of both that assign values to
node subsets of size up to k. A permutation sampler covers instances too
large for exact enumeration, and a Moebius/dividend path over connected
subsets provides an independent exact route for the structure-aware index.

All computations run on the normalized game f - f(empty), which pins the
empty coalition at zero before any restriction happens; discrete derivatives
of nonempty subsets are invariant to that shift, so the unrestricted indices
are unchanged while component efficiency holds in the f(C) - f(empty) form.
"""

from __future__ import annotations

import itertools
import math
import random
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import comb, fsum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from .errors import InputError
from .games import RestrictedValueFunction, ValueFunction, normalize
from .graph import Graph, NodeSubset, _connected_subset_masks

ValueSource = Union[ValueFunction, RestrictedValueFunction]


@dataclass(frozen=True)
class EngineConfig:
    """Caps and tolerances for the engine, kept in one place."""

    exact_cap: int = 16          # max n for exact enumeration paths
    exhaustive_cap: int = 8      # max n for all-permutations sampling
    atol: float = 1e-9           # default comparison tolerance


DEFAULT_CONFIG = EngineConfig()


@dataclass(frozen=True)
class Exactness:
    """How an index was computed: exactly, or by permutation sampling."""

    mode: str
    num_permutations: Optional[int] = None
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        if self.mode == "exact":
            return {"mode": "exact"}
        return {
            "mode": "sampled",
            "num_permutations": self.num_permutations,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Exactness":
        mode = d.get("mode")
        if mode == "exact":
            return cls("exact")
        if mode == "sampled":
            return cls("sampled", d.get("num_permutations"), d.get("seed"))
        raise InputError(f"unrecognized exactness mode {mode!r}")


EXACT = Exactness("exact")

_KINDS = ("shapley", "myerson", "shapley_taylor", "myerson_taylor")


class InteractionIndex:
    """Attribution values keyed by node subsets of size 1..k."""

    __slots__ = ("n", "k", "kind", "entries", "exactness")

    def __init__(
        self,
        n: int,
        k: int,
        kind: str,
        entries: Dict[NodeSubset, float],
        exactness: Exactness = EXACT,
    ):
        if kind not in _KINDS:
            raise InputError(f"unrecognized index kind {kind!r}")
        if kind in ("shapley", "myerson") and k != 1:
            raise InputError(f"kind {kind!r} requires k=1, got k={k}")
        self.n = n
        self.k = k
        self.kind = kind
        self.entries = entries
        self.exactness = exactness

    def value(self, nodes: Iterable[int]) -> float:
        """Entry for a subset, 0.0 when absent."""
        return self.entries.get(NodeSubset.from_nodes(self.n, nodes), 0.0)

    def __getitem__(self, subset: NodeSubset) -> float:
        return self.entries.get(subset, 0.0)

    def items_sorted(self) -> List[Tuple[NodeSubset, float]]:
        return sorted(self.entries.items(), key=lambda kv: kv[0].sort_key())

    def total(self) -> float:
        return fsum(self.entries.values())

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "kind": self.kind,
            "entries": [
                {"nodes": list(s), "value": v} for s, v in self.items_sorted()
            ],
            "exactness": self.exactness.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "InteractionIndex":
        try:
            k = int(d["k"])
            kind = d["kind"]
            raw = d["entries"]
            exactness = Exactness.from_dict(d["exactness"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"index document missing field: {exc}") from exc
        n = d.get("n")
        if n is None:
            n = 1 + max((max(e["nodes"]) for e in raw if e["nodes"]), default=0)
        entries = {
            NodeSubset.from_nodes(int(n), e["nodes"]): float(e["value"]) for e in raw
        }
        return cls(int(n), k, kind, entries, exactness)

    def __repr__(self) -> str:
        return (
            f"InteractionIndex(kind={self.kind!r}, k={self.k}, n={self.n}, "
            f"entries={len(self.entries)}, {self.exactness.mode})"
        )


def _check_k(n: int, k: int) -> None:
    if k < 1:
        raise InputError(f"interaction order k must be >= 1, got {k}")
    if k > n:
        raise InputError(f"interaction order k={k} exceeds node count n={n}")


def _check_exact_cap(n: int, config: EngineConfig) -> None:
    if n > config.exact_cap:
        raise InputError(
            f"exact enumeration supports n <= {config.exact_cap}, got {n}; "
            "use sample_index instead"
        )


def _signed_submasks(s_mask: int) -> List[Tuple[int, int]]:
    """(W, (-1)^(|S|-|W|)) for every W included in S."""
    size = s_mask.bit_count()
    out = []
    w = s_mask
    while True:
        out.append((w, 1 if (size - w.bit_count()) % 2 == 0 else -1))
        if w == 0:
            break
        w = (w - 1) & s_mask
    return out


def discrete_derivative(source: ValueSource, s: NodeSubset, t: NodeSubset) -> float:
    """Finite difference of the value function along s, evaluated past t.

    For s = {i}: f(t + i) - f(t). For s = {i, j}:
    f(t + ij) - f(t + i) - f(t + j) + f(t). Higher orders alternate the same
    way. s must be nonempty and disjoint from t.
    """
    if s.n != source.n or t.n != source.n:
        raise InputError("subset sizes must match the value function")
    if not s:
        raise InputError("discrete derivative needs a nonempty subset")
    if s.mask & t.mask:
        raise InputError("derivative subset must be disjoint from the base set")
    ev = source.eval_mask
    t_mask = t.mask
    return fsum(sgn * ev(w | t_mask) for w, sgn in _signed_submasks(s.mask))


def _taylor_entries(source: ValueSource, n: int, k: int) -> Dict[int, float]:
    """Order-k interaction entries of the (already wrapped) value source.

    Sizes below k get the discrete derivative at the empty set; size-k
    subsets average derivatives over predecessor sets with the standard
    permutation weights.
    """
    ev = source.eval_mask
    full = (1 << n) - 1
    entries: Dict[int, float] = {}

    for size in range(1, k):
        for nodes in itertools.combinations(range(n), size):
            s_mask = 0
            for v in nodes:
                s_mask |= 1 << v
            entries[s_mask] = fsum(sgn * ev(w) for w, sgn in _signed_submasks(s_mask))

    weights = [k / (n * comb(n - 1, t)) for t in range(n - k + 1)]
    for nodes in itertools.combinations(range(n), k):
        s_mask = 0
        for v in nodes:
            s_mask |= 1 << v
        subs = _signed_submasks(s_mask)
        comp = full ^ s_mask
        terms = []
        t = comp
        while True:
            w_t = weights[t.bit_count()]
            terms.append(w_t * fsum(sgn * ev(w | t) for w, sgn in subs))
            if t == 0:
                break
            t = (t - 1) & comp
        entries[s_mask] = fsum(terms)
    return entries


def _index_from_mask_entries(
    n: int, k: int, kind: str, by_mask: Dict[int, float], exactness: Exactness = EXACT
) -> InteractionIndex:
    entries = {NodeSubset(n, m): v for m, v in by_mask.items()}
    return InteractionIndex(n, k, kind, entries, exactness)


def shapley_exact(
    v: ValueFunction, n: Optional[int] = None, config: EngineConfig = DEFAULT_CONFIG
) -> InteractionIndex:
    """Per-node Shapley values by full enumeration."""
    n = v.n if n is None else n
    if n != v.n:
        raise InputError(f"n={n} does not match value function n={v.n}")
    _check_exact_cap(n, config)
    src = normalize(v)
    return _index_from_mask_entries(n, 1, "shapley", _taylor_entries(src, n, 1))


def myerson_exact(
    g: Graph, v: ValueFunction, config: EngineConfig = DEFAULT_CONFIG
) -> InteractionIndex:
    """Per-node Shapley values of the component-restricted game."""
    _check_exact_cap(g.n, config)
    src = RestrictedValueFunction(normalize(v), g)
    return _index_from_mask_entries(g.n, 1, "myerson", _taylor_entries(src, g.n, 1))


def shapley_taylor_exact(
    v: ValueFunction,
    n: Optional[int] = None,
    k: int = 2,
    config: EngineConfig = DEFAULT_CONFIG,
) -> InteractionIndex:
    """Order-k interaction index of the unrestricted game."""
    n = v.n if n is None else n
    if n != v.n:
        raise InputError(f"n={n} does not match value function n={v.n}")
    _check_k(n, k)
    _check_exact_cap(n, config)
    src = normalize(v)
    kind = "shapley" if k == 1 else "shapley_taylor"
    return _index_from_mask_entries(n, k, kind, _taylor_entries(src, n, k))


def myerson_taylor_exact(
    g: Graph, v: ValueFunction, k: int = 2, config: EngineConfig = DEFAULT_CONFIG
) -> InteractionIndex:
    """Order-k interaction index of the component-restricted game."""
    _check_k(g.n, k)
    _check_exact_cap(g.n, config)
    src = RestrictedValueFunction(normalize(v), g)
    kind = "myerson" if k == 1 else "myerson_taylor"
    return _index_from_mask_entries(g.n, k, kind, _taylor_entries(src, g.n, k))


def _sampled_kind(restricted: bool, k: int) -> str:
    if restricted:
        return "myerson" if k == 1 else "myerson_taylor"
    return "shapley" if k == 1 else "shapley_taylor"


def _perm_contributions(
    perm: Sequence[int],
    n: int,
    top_sets: Sequence[Tuple[Tuple[int, ...], List[Tuple[int, int]]]],
    ev,
) -> List[float]:
    """Per-permutation derivative of every size-k subset at its predecessors."""
    pos = [0] * n
    pref = [0] * (n + 1)
    m = 0
    for i, node in enumerate(perm):
        pos[node] = i
        pref[i] = m
        m |= 1 << node
    pref[n] = m
    out = []
    for nodes, subs in top_sets:
        first = min(pos[v] for v in nodes)
        t = pref[first]
        out.append(fsum(sgn * ev(w | t) for w, sgn in subs))
    return out


def sample_index(
    g: Graph,
    v: ValueFunction,
    k: int,
    permutations: int = 200,
    seed: int = 0,
    restricted: bool = True,
    exhaustive: bool = False,
    threads: int = 1,
    config: EngineConfig = DEFAULT_CONFIG,
) -> InteractionIndex:
    """Permutation-sampled interaction index.

    Each sampled permutation contributes, for every size-k subset S, the
    discrete derivative of S on the set of nodes preceding S's first member.
    Size-k entries are the mean over permutations; entries below order k are
    computed exactly, since they do not depend on the permutation. With
    exhaustive=True every permutation is visited once and the result equals
    the exact index.

    Results depend only on (seed, permutations, k, restricted), never on
    thread count.
    """
    n = g.n
    _check_k(n, k)
    if v.n != n:
        raise InputError(f"value function n={v.n} does not match graph n={g.n}")
    src: ValueSource = RestrictedValueFunction(normalize(v), g) if restricted else normalize(v)
    ev = src.eval_mask

    by_mask: Dict[int, float] = {}
    for size in range(1, k):
        for nodes in itertools.combinations(range(n), size):
            s_mask = 0
            for u in nodes:
                s_mask |= 1 << u
            by_mask[s_mask] = fsum(sgn * ev(w) for w, sgn in _signed_submasks(s_mask))

    top_sets = []
    top_masks = []
    for nodes in itertools.combinations(range(n), k):
        s_mask = 0
        for u in nodes:
            s_mask |= 1 << u
        top_sets.append((nodes, _signed_submasks(s_mask)))
        top_masks.append(s_mask)

    if exhaustive:
        if n > config.exhaustive_cap:
            raise InputError(
                f"exhaustive permutation mode supports n <= {config.exhaustive_cap}, got {n}"
            )
        perms: List[Sequence[int]] = list(itertools.permutations(range(n)))
        exactness = EXACT
    else:
        if permutations < 1:
            raise InputError(f"need at least one permutation, got {permutations}")
        rng = random.Random(seed)
        base = list(range(n))
        perms = []
        for _ in range(permutations):
            p = base[:]
            rng.shuffle(p)
            perms.append(p)
        exactness = Exactness("sampled", permutations, seed)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(
                pool.map(lambda p: _perm_contributions(p, n, top_sets, ev), perms)
            )
    else:
        rows = [_perm_contributions(p, n, top_sets, ev) for p in perms]

    count = len(perms)
    for j, s_mask in enumerate(top_masks):
        by_mask[s_mask] = fsum(row[j] for row in rows) / count

    kind = _sampled_kind(restricted, k)
    return _index_from_mask_entries(n, k, kind, by_mask, exactness)


class DividendTable:
    """Interaction dividends of the restricted game, keyed by connected subsets.

    The restricted game decomposes as a weighted sum of unanimity games on
    connected subsets; the weight attached to subset T is its dividend.
    """

    __slots__ = ("n", "entries")

    def __init__(self, n: int, entries: Dict[NodeSubset, float]):
        self.n = n
        self.entries = entries

    def value(self, nodes: Iterable[int]) -> float:
        return self.entries.get(NodeSubset.from_nodes(self.n, nodes), 0.0)

    def __getitem__(self, subset: NodeSubset) -> float:
        return self.entries.get(subset, 0.0)

    def items_sorted(self) -> List[Tuple[NodeSubset, float]]:
        return sorted(self.entries.items(), key=lambda kv: kv[0].sort_key())

    def reconstruct(self, t: NodeSubset) -> float:
        """Restricted value of t: sum of dividends of subsets inside t."""
        if t.n != self.n:
            raise InputError(f"subset over n={t.n} does not match n={self.n}")
        t_mask = t.mask
        return fsum(v for s, v in self.entries.items() if s.mask & ~t_mask == 0)

    def __repr__(self) -> str:
        return f"DividendTable(n={self.n}, entries={len(self.entries)})"


def mobius_dividends(
    g: Graph, v: ValueFunction, config: EngineConfig = DEFAULT_CONFIG
) -> DividendTable:
    """Dividends of the restricted normalized game over connected subsets.

    Computed by the inclusion-exclusion sum over connected R inside T whose
    closed neighborhood covers T; only connected subsets ever reach the
    backend. The table reconstructs the restricted game exactly:
    restricted(t) = sum of dividends over connected subsets of t.
    """
    n = g.n
    _check_exact_cap(n, config)
    ev = normalize(v).eval_mask
    adj = g.adj_masks
    acc: Dict[int, List[float]] = {}
    for r_mask in _connected_subset_masks(adj, n, n):
        closed = r_mask
        m = r_mask
        while m:
            low = m & -m
            m ^= low
            closed |= adj[low.bit_length() - 1]
        val = ev(r_mask)
        boundary = closed & ~r_mask
        u = boundary
        while True:
            sgn = 1 if u.bit_count() % 2 == 0 else -1
            acc.setdefault(r_mask | u, []).append(sgn * val)
            if u == 0:
                break
            u = (u - 1) & boundary
    entries = {NodeSubset(n, m): fsum(terms) for m, terms in acc.items()}
    return DividendTable(n, entries)


def index_from_dividends(d: DividendTable, g: Graph, k: int) -> InteractionIndex:
    """Order-k structure-aware index assembled from dividends.

    A dividend on T pays out 1 to S = T when |T| < k, and is split evenly
    over the size-k subsets of T otherwise. Produces entries for every
    subset of size 1..k, matching the exact engine route.
    """
    n = g.n
    if d.n != n:
        raise InputError(f"dividend table n={d.n} does not match graph n={g.n}")
    _check_k(n, k)
    acc: Dict[int, List[float]] = {}
    for size in range(1, k + 1):
        for nodes in itertools.combinations(range(n), size):
            s_mask = 0
            for u in nodes:
                s_mask |= 1 << u
            acc[s_mask] = []
    for subset, delta in d.entries.items():
        t_mask = subset.mask
        t_size = t_mask.bit_count()
        if t_size < k:
            acc[t_mask].append(delta)
        else:
            share = delta / comb(t_size, k)
            for nodes in itertools.combinations(tuple(subset), k):
                s_mask = 0
                for u in nodes:
                    s_mask |= 1 << u
                acc[s_mask].append(share)
    by_mask = {m: fsum(terms) for m, terms in acc.items()}
    kind = "myerson" if k == 1 else "myerson_taylor"
    return _index_from_mask_entries(n, k, kind, by_mask)


def reduce_to_value(idx: InteractionIndex) -> InteractionIndex:
    """Collapse an order-k index to per-node values.

    Every subset entry is split evenly among its members. For exact
    shapley_taylor input this recovers shapley exactly, and likewise
    myerson_taylor recovers myerson; for sampled input the identity holds
    only in expectation, which is flagged with a warning.
    """
    if idx.exactness.mode == "sampled":
        warnings.warn(
            "reducing a sampled index: the per-node identity holds only in expectation",
            stacklevel=2,
        )
    acc: Dict[int, List[float]] = {1 << i: [] for i in range(idx.n)}
    for subset, val in idx.entries.items():
        size = len(subset)
        for i in subset:
            acc[1 << i].append(val / size)
    by_mask = {m: fsum(terms) for m, terms in acc.items()}
    kind = "myerson" if idx.kind in ("myerson", "myerson_taylor") else "shapley"
    return _index_from_mask_entries(idx.n, 1, kind, by_mask, idx.exactness)
