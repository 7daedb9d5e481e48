"""Multi-motif explanation search over a pairwise interaction matrix.

Given the order-2 interaction index of a game on a graph, pick up to m
pairwise-disjoint connected motifs with at most M nodes in total, maximizing
the summed absolute group attribution. Two solvers share the objective: a
brute-force oracle that enumerates every feasible family, and a
branch-and-bound over an LP relaxation of the assignment formulation with
lazily separated connectivity cuts.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field
from math import fsum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import InputError
from .graph import (
    Graph,
    NodeSubset,
    _component_masks,
    _connected_subset_masks,
    _is_connected_mask,
)
from .interaction import InteractionIndex

ORACLE_NODE_CAP = 14


class InteractionMatrix:
    """Symmetric pairwise attribution matrix with its sign parts.

    Diagonal entries hold singleton attributions; off-diagonal entries hold
    pair attributions, mirrored across the diagonal. b_plus and b_minus are
    the elementwise positive and negative parts, so b = b_plus + b_minus.
    """

    __slots__ = ("n", "b", "b_plus", "b_minus")

    def __init__(self, b: np.ndarray):
        b = np.asarray(b, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise InputError(f"interaction matrix must be square, got {b.shape}")
        if not np.array_equal(b, b.T):
            raise InputError("interaction matrix must be symmetric")
        if not np.all(np.isfinite(b)):
            raise InputError("interaction matrix entries must be finite")
        self.n = b.shape[0]
        self.b = b
        self.b_plus = np.maximum(b, 0.0)
        self.b_minus = np.minimum(b, 0.0)

    def weighted(self, tau: float) -> np.ndarray:
        """tau * positive part + (1 - tau) * negative part."""
        _check_tau(tau)
        return tau * self.b_plus + (1.0 - tau) * self.b_minus


def _check_tau(tau: float) -> None:
    if not (isinstance(tau, (int, float)) and 0.0 <= tau <= 1.0):
        raise InputError(f"tau must lie in [0, 1], got {tau!r}")


def build_matrix(idx: InteractionIndex) -> InteractionMatrix:
    """Arrange an order-2 index as a matrix: singletons on the diagonal,
    pairs mirrored off it. Missing entries read as 0."""
    if idx.k != 2:
        raise InputError(f"motif search needs an order-2 index, got k={idx.k}")
    n = idx.n
    b = np.zeros((n, n))
    for subset, val in idx.entries.items():
        nodes = subset.nodes()
        if len(nodes) == 1:
            b[nodes[0], nodes[0]] = val
        elif len(nodes) == 2:
            i, j = nodes
            b[i, j] = val
            b[j, i] = val
        else:
            raise InputError(f"unexpected entry of size {len(nodes)} in order-2 index")
    return InteractionMatrix(b)


def group_attr(mat: InteractionMatrix, s: NodeSubset, tau: float) -> float:
    """Signed group attribution of a motif: sum over unordered node pairs
    (including each node with itself once) of the weighted matrix."""
    if s.n != mat.n:
        raise InputError(f"subset over n={s.n} does not match matrix n={mat.n}")
    w = mat.weighted(tau)
    return _group_attr_from_weighted(w, s.mask)


def _group_attr_from_weighted(w: np.ndarray, mask: int) -> float:
    if mask == 0:
        return 0.0
    nodes = []
    m = mask
    while m:
        low = m & -m
        nodes.append(low.bit_length() - 1)
        m ^= low
    sub = w[np.ix_(nodes, nodes)]
    return float((sub.sum() + np.trace(sub)) / 2.0)


@dataclass
class Explanation:
    """A family of disjoint connected motifs with their attributions."""

    n: int
    motifs: List[NodeSubset]
    scores: List[float]
    objective: float
    optimal: bool
    tau: float
    m: int
    M: int

    def nodes(self) -> NodeSubset:
        out = NodeSubset(self.n, 0)
        for s in self.motifs:
            out = out | s
        return out

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "motifs": [list(s) for s in self.motifs],
            "scores": list(self.scores),
            "objective": self.objective,
            "optimal": self.optimal,
            "tau": self.tau,
            "m": self.m,
            "M": self.M,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Explanation":
        try:
            motifs_raw = d["motifs"]
            scores = [float(x) for x in d["scores"]]
            objective = float(d["objective"])
            optimal = bool(d["optimal"])
            tau = float(d["tau"])
            m = int(d["m"])
            big_m = int(d["M"])
        except (KeyError, TypeError) as exc:
            raise InputError(f"explanation document missing field: {exc}") from exc
        n = d.get("n")
        if n is None:
            n = 1 + max((max(nodes) for nodes in motifs_raw if nodes), default=0)
        motifs = [NodeSubset.from_nodes(int(n), nodes) for nodes in motifs_raw]
        return cls(int(n), motifs, scores, objective, optimal, tau, m, big_m)


def default_budget(g: Graph, gt=None) -> Tuple[int, int]:
    """(m, M) defaults: copy the ground truth shape when one is known,
    otherwise 2 motifs within 30 percent of the nodes."""
    if gt is not None:
        motifs = getattr(gt, "motifs", gt)
        return (len(motifs), sum(len(s) for s in motifs))
    return (2, math.ceil(0.3 * g.n))


def _canonical_family(n: int, masks: Sequence[int]) -> Tuple[Tuple[int, ...], ...]:
    return tuple(sorted(tuple(NodeSubset(n, m)) for m in masks if m))


def _family_key(n: int, masks: Sequence[int]) -> Tuple[int, Tuple[Tuple[int, ...], ...]]:
    total = sum(m.bit_count() for m in masks)
    return (total, _canonical_family(n, masks))


def _finish(
    g: Graph,
    w: np.ndarray,
    masks: Sequence[int],
    optimal: bool,
    tau: float,
    m: int,
    big_m: int,
) -> Explanation:
    ordered = sorted((mask for mask in masks if mask), key=lambda mk: mk & -mk)
    scores = [_group_attr_from_weighted(w, mk) for mk in ordered]
    objective = fsum(abs(x) for x in scores)
    return Explanation(
        g.n,
        [NodeSubset(g.n, mk) for mk in ordered],
        scores,
        objective,
        optimal,
        tau,
        m,
        big_m,
    )


def _check_search_args(g: Graph, mat: InteractionMatrix, m: int, big_m: int) -> None:
    if mat.n != g.n:
        raise InputError(f"matrix n={mat.n} does not match graph n={g.n}")
    if m < 0:
        raise InputError(f"motif count budget must be nonnegative, got {m}")
    if big_m < 0:
        raise InputError(f"node budget must be nonnegative, got {big_m}")


def exhaustive_search(
    g: Graph, mat: InteractionMatrix, m: int, M: int, tau: float = 1.0
) -> Explanation:
    """Globally optimal explanation by enumerating every feasible family.

    Candidates are the connected subsets within the node budget; families
    are visited in canonical order (strictly increasing candidate index)
    with only feasibility filtering, so this stays a brute-force reference.
    Ties prefer fewer total nodes, then the lexicographically smallest
    family. Exponential: capped at n <= 14 nodes.
    """
    _check_search_args(g, mat, m, M)
    _check_tau(tau)
    if g.n > ORACLE_NODE_CAP:
        raise InputError(f"exhaustive search supports n <= {ORACLE_NODE_CAP}, got {g.n}")
    w = mat.weighted(tau)

    cand_masks: List[int] = []
    cand_sizes: List[int] = []
    cand_abs: List[float] = []
    if m > 0 and M > 0:
        for mk in _connected_subset_masks(g.adj_masks, g.n, min(M, g.n)):
            val = abs(_group_attr_from_weighted(w, mk))
            if val != 0.0:
                cand_masks.append(mk)
                cand_sizes.append(mk.bit_count())
                cand_abs.append(val)

    best_masks: List[int] = []
    best_obj = 0.0
    best_key = _family_key(g.n, [])
    ncand = len(cand_masks)

    def visit(chosen: List[int]) -> None:
        nonlocal best_masks, best_obj, best_key
        obj = fsum(cand_abs[i] for i in chosen)
        if obj < best_obj:
            return
        masks = [cand_masks[i] for i in chosen]
        key = _family_key(g.n, masks)
        if obj > best_obj or key < best_key:
            best_obj = obj
            best_key = key
            best_masks = masks

    def dfs(start: int, used: int, slots: int, budget: int, chosen: List[int]) -> None:
        visit(chosen)
        if slots == 0:
            return
        for i in range(start, ncand):
            if cand_sizes[i] > budget:
                break
            if cand_masks[i] & used:
                continue
            chosen.append(i)
            dfs(i + 1, used | cand_masks[i], slots - 1, budget - cand_sizes[i], chosen)
            chosen.pop()

    dfs(0, 0, m, M, [])
    return _finish(g, w, best_masks, True, tau, m, M)


def _greedy_family(g: Graph, w: np.ndarray, m: int, big_m: int) -> List[int]:
    """Deterministic greedy start: grow each motif by the neighbor that most
    improves its absolute attribution, stopping at the first non-improvement."""
    full = g.full_mask
    used = 0
    budget = big_m
    family: List[int] = []
    for _ in range(m):
        if budget < 1:
            break
        best_mask = 0
        best_stat = (0.0, 0, 0)  # (absval, -size, -mask) maximized
        for v in range(g.n):
            if (used >> v) & 1:
                continue
            cur = 1 << v
            cur_abs = abs(_group_attr_from_weighted(w, cur))
            while cur.bit_count() < budget:
                frontier = 0
                mm = cur
                while mm:
                    low = mm & -mm
                    mm ^= low
                    frontier |= g.adj_masks[low.bit_length() - 1]
                frontier &= full & ~used & ~cur
                step_mask = 0
                step_abs = cur_abs
                while frontier:
                    low = frontier & -frontier
                    frontier ^= low
                    trial = abs(_group_attr_from_weighted(w, cur | low))
                    if trial > step_abs + 1e-15:
                        step_abs = trial
                        step_mask = low
                if step_mask == 0:
                    break
                cur |= step_mask
                cur_abs = step_abs
            stat = (cur_abs, -cur.bit_count(), -cur)
            if stat > best_stat:
                best_stat = stat
                best_mask = cur
        if best_mask and best_stat[0] > 0.0:
            family.append(best_mask)
            used |= best_mask
            budget -= best_mask.bit_count()
        else:
            break
    return family


@dataclass
class _BnbState:
    incumbent: List[int] = field(default_factory=list)
    obj: float = 0.0
    key: tuple = ()
    lp_solves: int = 0
    exhausted: bool = False


def branch_and_bound_search(
    g: Graph,
    mat: InteractionMatrix,
    m: int,
    M: int,
    tau: float = 1.0,
    node_budget: Optional[int] = None,
    time_budget_s: Optional[float] = None,
) -> Explanation:
    """Optimal explanation by LP-based branch and bound.

    Formulation: binary x[v,l] assigns node v to motif slot l; pair products
    are McCormick-linearized; per-slot absolute values use the big-M sign
    device with M_big = sum |b[i][j]|, the sign binaries being enumerated
    up front (each pattern leaves a linear objective). Slot order is pinned
    to smallest-member order to break symmetry. Connectivity is enforced
    lazily: a disconnected incumbent motif with component C yields the cuts
    x[a,l] + x[u,l] <= 1 + sum of x[w,l] over the outside boundary of C,
    which every connected motif satisfies.

    When the node or time budget runs out the best incumbent so far is
    returned with optimal=False; with no budget at all that is the greedy
    start. Deterministic for fixed inputs.
    """
    from scipy.optimize import linprog
    from scipy.sparse import csr_matrix

    _check_search_args(g, mat, m, M)
    _check_tau(tau)
    n = g.n
    w = mat.weighted(tau)
    big_m = M

    st = _BnbState()
    st.incumbent = _greedy_family(g, w, m, big_m)
    st.obj = fsum(abs(_group_attr_from_weighted(w, mk)) for mk in st.incumbent)
    st.key = _family_key(n, st.incumbent)

    mbig = float(np.abs(np.triu(mat.b)).sum())
    trivially_done = m == 0 or big_m == 0 or mbig == 0.0
    budget_left = [node_budget] if node_budget is not None else [None]
    deadline = time.monotonic() + time_budget_s if time_budget_s is not None else None

    if trivially_done:
        best = [] if mbig == 0.0 or m == 0 or big_m == 0 else st.incumbent
        return _finish(g, w, best, True, tau, m, M)

    if budget_left[0] is not None and budget_left[0] <= 0:
        return _finish(g, w, st.incumbent, False, tau, m, M)

    # Variable layout: x[v,l] = l*n + v, then t[l], then y[l,p] per nonzero pair.
    nx = n * m
    t0 = nx
    pairs = [
        (i, j) for i in range(n) for j in range(i + 1, n) if w[i, j] != 0.0
    ]
    npairs = len(pairs)
    y0 = nx + m
    nvars = y0 + m * npairs

    def xi(v: int, l: int) -> int:
        return l * n + v

    def yi(p: int, l: int) -> int:
        return y0 + l * npairs + p

    rows: List[Dict[int, float]] = []
    rhs_base: List[float] = []
    sign_rows: List[Tuple[int, int]] = []  # (row index, slot) for R1/R2 rhs per pattern

    for l in range(m):
        # t_l - g_l <= 2*mbig*(1 - s_l)
        row = {t0 + l: 1.0}
        for p, (i, j) in enumerate(pairs):
            row[yi(p, l)] = -w[i, j]
        for v in range(n):
            if w[v, v] != 0.0:
                row[xi(v, l)] = -w[v, v]
        rows.append(row)
        rhs_base.append(0.0)
        sign_rows.append((len(rows) - 1, l))
        # t_l + g_l <= 2*mbig*s_l
        row = {t0 + l: 1.0}
        for p, (i, j) in enumerate(pairs):
            row[yi(p, l)] = w[i, j]
        for v in range(n):
            if w[v, v] != 0.0:
                row[xi(v, l)] = w[v, v]
        rows.append(row)
        rhs_base.append(0.0)
        sign_rows.append((len(rows) - 1, l))

    for l in range(m):
        for p, (i, j) in enumerate(pairs):
            rows.append({yi(p, l): 1.0, xi(i, l): -1.0})
            rhs_base.append(0.0)
            rows.append({yi(p, l): 1.0, xi(j, l): -1.0})
            rhs_base.append(0.0)
            rows.append({xi(i, l): 1.0, xi(j, l): 1.0, yi(p, l): -1.0})
            rhs_base.append(1.0)

    for v in range(n):
        rows.append({xi(v, l): 1.0 for l in range(m)})
        rhs_base.append(1.0)

    rows.append({xi(v, l): 1.0 for l in range(m) for v in range(n)})
    rhs_base.append(float(big_m))

    for l in range(1, m):
        for v in range(n):
            row = {xi(v, l): 1.0}
            for u in range(v):
                row[xi(u, l - 1)] = -1.0
            rows.append(row)
            rhs_base.append(0.0)

    cut_rows: List[Dict[int, float]] = []
    cut_rhs: List[float] = []

    cost = np.zeros(nvars)
    cost[t0:t0 + m] = -1.0  # maximize sum of t

    base_bounds: List[Tuple[float, float]] = (
        [(0.0, 1.0)] * nx
        + [(-2.0 * mbig - 1.0, mbig + 1.0)] * m
        + [(0.0, 1.0)] * (m * npairs)
    )

    def assemble() -> Tuple[csr_matrix, np.ndarray]:
        all_rows = rows + cut_rows
        data, ri, ci = [], [], []
        for r, row in enumerate(all_rows):
            for c, coef in row.items():
                ri.append(r)
                ci.append(c)
                data.append(coef)
        a = csr_matrix((data, (ri, ci)), shape=(len(all_rows), nvars))
        return a, np.array(rhs_base + cut_rhs)

    def add_connectivity_cuts(motif_mask: int, comps: List[int]) -> None:
        comps = sorted(comps, key=lambda c: c.bit_count())
        c_mask = comps[0]
        boundary = 0
        mm = c_mask
        while mm:
            low = mm & -mm
            mm ^= low
            boundary |= g.adj_masks[low.bit_length() - 1]
        boundary &= ~c_mask
        a_node = (c_mask & -c_mask).bit_length() - 1
        outside = motif_mask & ~c_mask
        for l in range(m):
            mm = outside
            while mm:
                low = mm & -mm
                mm ^= low
                u = low.bit_length() - 1
                row = {xi(a_node, l): 1.0, xi(u, l): 1.0}
                bb = boundary
                while bb:
                    lb = bb & -bb
                    bb ^= lb
                    row[xi(lb.bit_length() - 1, l)] = row.get(
                        xi(lb.bit_length() - 1, l), 0.0
                    ) - 1.0
                cut_rows.append(row)
                cut_rhs.append(1.0)

    def maybe_update_incumbent(masks: List[int]) -> None:
        obj = fsum(abs(_group_attr_from_weighted(w, mk)) for mk in masks)
        key = _family_key(n, masks)
        if obj > st.obj or (obj == st.obj and key < st.key):
            st.obj = obj
            st.key = key
            st.incumbent = [mk for mk in masks if mk]

    def out_of_budget() -> bool:
        if st.exhausted:
            return True
        if budget_left[0] is not None and budget_left[0] <= 0:
            st.exhausted = True
        if deadline is not None and time.monotonic() > deadline:
            st.exhausted = True
        return st.exhausted

    prune_eps = 1e-12
    int_eps = 1e-6

    for pattern in itertools.product((1, 0), repeat=m):
        if out_of_budget():
            break
        # R1 rows get rhs 2*mbig*(1 - s_l), R2 rows 2*mbig*s_l, in insertion order.
        rhs_pattern = list(rhs_base)
        it = iter(sign_rows)
        for (r1, l1), (r2, l2) in zip(it, it):
            s_l = pattern[l1]
            rhs_pattern[r1] = 2.0 * mbig * (1 - s_l)
            rhs_pattern[r2] = 2.0 * mbig * s_l

        # Depth-first over variable fixings; x=1 child explored first.
        stack: List[List[Tuple[int, float, float]]] = [[]]
        while stack:
            if out_of_budget():
                break
            fixings = stack.pop()
            bounds = list(base_bounds)
            for var, lo, hi in fixings:
                bounds[var] = (lo, hi)
            node_done = False
            while not node_done:
                if out_of_budget():
                    break
                a, b_vec = assemble()
                b_node = b_vec.copy()
                b_node[: len(rhs_pattern)] = rhs_pattern
                if budget_left[0] is not None:
                    budget_left[0] -= 1
                st.lp_solves += 1
                res = linprog(
                    cost, A_ub=a, b_ub=b_node, bounds=bounds, method="highs"
                )
                if res.status == 2:  # infeasible
                    node_done = True
                    break
                if res.status != 0:
                    raise RuntimeError(f"LP solver failed with status {res.status}")
                ub = -res.fun
                if ub <= st.obj + prune_eps:
                    node_done = True
                    break
                x = res.x[:nx]
                frac = np.abs(x - np.round(x))
                worst = int(np.argmax(frac))
                if frac[worst] <= int_eps:
                    xr = np.round(x)
                    masks = []
                    for l in range(m):
                        mk = 0
                        for v in range(n):
                            if xr[xi(v, l)] > 0.5:
                                mk |= 1 << v
                        masks.append(mk)
                    bad = False
                    for mk in masks:
                        if mk and not _is_connected_mask(g.adj_masks, mk):
                            add_connectivity_cuts(
                                mk, _component_masks(g.adj_masks, mk)
                            )
                            bad = True
                    if bad:
                        continue  # re-solve this node with the new cuts
                    maybe_update_incumbent(masks)
                    node_done = True
                else:
                    lo, hi = bounds[worst]
                    if hi - lo < 0.5:  # already fixed; numerical dust
                        node_done = True
                        break
                    stack.append(fixings + [(worst, 0.0, 0.0)])
                    stack.append(fixings + [(worst, 1.0, 1.0)])
                    node_done = True

    proven = not st.exhausted
    return _finish(g, w, st.incumbent, proven, tau, m, M)
