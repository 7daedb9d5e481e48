"""Evaluation metrics for motif explanations.

Recovery metrics compare predicted motifs against planted ground truth
(node F1, adjusted mutual information over node partitions, edge AUC);
fidelity metrics probe the value function directly and need no ground
truth. All sampled quantities are deterministic for a fixed seed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from math import fsum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

from .errors import InputError
from .games import ValueFunction
from .graph import Graph, NodeSubset
from .search import Explanation, InteractionMatrix

EXHAUSTIVE_ALPHA_CAP = 16  # max side size for exact expectation enumeration


@dataclass(frozen=True)
class GroundTruth:
    """Planted motifs; the edge mask defaults to edges inside a motif."""

    n: int
    motifs: Tuple[NodeSubset, ...]
    edges: Optional[Tuple[Tuple[int, int], ...]] = None

    def __post_init__(self):
        seen = 0
        for s in self.motifs:
            if s.n != self.n:
                raise InputError(f"motif over n={s.n} does not match n={self.n}")
            if not s:
                raise InputError("ground-truth motifs must be nonempty")
            if s.mask & seen:
                raise InputError("ground-truth motifs must be pairwise disjoint")
            seen |= s.mask

    def nodes(self) -> NodeSubset:
        out = NodeSubset(self.n, 0)
        for s in self.motifs:
            out = out | s
        return out

    def edge_set(self, g: Graph) -> Set[Tuple[int, int]]:
        """Ground-truth edges: explicit if supplied, else graph edges whose
        endpoints share a motif."""
        if self.edges is not None:
            return {(min(i, j), max(i, j)) for i, j in self.edges}
        out = set()
        for i, j in g.edges:
            for s in self.motifs:
                if i in s and j in s:
                    out.add((i, j))
                    break
        return out

    def to_dict(self) -> dict:
        d = {"n": self.n, "motifs": [list(s) for s in self.motifs]}
        if self.edges is not None:
            d["edges"] = [list(e) for e in self.edges]
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "GroundTruth":
        try:
            motifs_raw = d["motifs"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"ground-truth document missing field: {exc}") from exc
        n = d.get("n")
        if n is None:
            n = 1 + max((max(nodes) for nodes in motifs_raw if nodes), default=0)
        motifs = tuple(NodeSubset.from_nodes(int(n), nodes) for nodes in motifs_raw)
        edges = d.get("edges")
        if edges is not None:
            edges = tuple((int(i), int(j)) for i, j in edges)
        return cls(int(n), motifs, edges)


def f1_score(pred: NodeSubset, gt: NodeSubset) -> float:
    """Node-set F1: 2|A & B| / (|A| + |B|). Two empty sets agree perfectly
    (1.0); exactly one empty set scores 0.0."""
    if pred.n != gt.n:
        raise InputError(f"mismatched ground sets: n={pred.n} vs n={gt.n}")
    a, b = len(pred), len(gt)
    if a == 0 and b == 0:
        return 1.0
    if a == 0 or b == 0:
        return 0.0
    return 2.0 * len(pred & gt) / (a + b)


def partition_labels(n: int, motifs: Sequence[NodeSubset]) -> List[int]:
    """Cluster labels for AMI: motif index per node, unassigned nodes share
    one background cluster (-1). Motifs must be disjoint."""
    labels = [-1] * n
    for idx, s in enumerate(motifs):
        if s.n != n:
            raise InputError(f"motif over n={s.n} does not match n={n}")
        for v in s:
            if labels[v] != -1:
                raise InputError(f"node {v} appears in two motifs")
            labels[v] = idx
    return labels


def _partition_of(labels: Sequence[int]) -> Set[frozenset]:
    groups: Dict[int, set] = {}
    for v, lab in enumerate(labels):
        groups.setdefault(lab, set()).add(v)
    return {frozenset(g) for g in groups.values()}


def ami_score(
    pred_motifs: Sequence[NodeSubset], gt_motifs: Sequence[NodeSubset], n: int
) -> float:
    """Adjusted mutual information between the two node partitions.

    Unassigned nodes form a background cluster on each side. Normalization
    uses the arithmetic mean of entropies with the permutation-model
    expected MI; identical partitions score exactly 1.0 and the result is
    clipped to [-1, 1].
    """
    pred = partition_labels(n, pred_motifs)
    gt = partition_labels(n, gt_motifs)
    if _partition_of(pred) == _partition_of(gt):
        return 1.0
    from sklearn.metrics import adjusted_mutual_info_score

    val = float(adjusted_mutual_info_score(gt, pred, average_method="arithmetic"))
    return max(-1.0, min(1.0, val))


def auc_score(
    edge_scores: Mapping[Tuple[int, int], float], gt_edges: Iterable[Tuple[int, int]]
) -> Optional[float]:
    """Mann-Whitney AUC with midrank ties over edge scores.

    Returns None when the ground truth leaves no positive or no negative
    edges to rank against.
    """
    from scipy.stats import rankdata

    canon = {(min(i, j), max(i, j)): float(v) for (i, j), v in edge_scores.items()}
    pos = {(min(i, j), max(i, j)) for i, j in gt_edges}
    unknown = pos - set(canon)
    if unknown:
        raise InputError(f"ground-truth edges missing from scores: {sorted(unknown)}")
    items = sorted(canon.items())
    labels = [1 if e in pos else 0 for e, _ in items]
    npos = sum(labels)
    nneg = len(labels) - npos
    if npos == 0 or nneg == 0:
        return None
    ranks = rankdata([v for _, v in items])
    rank_sum = fsum(r for r, lab in zip(ranks, labels) if lab == 1)
    return (rank_sum - npos * (npos + 1) / 2.0) / (npos * nneg)


def edge_scores_from_explanation(
    g: Graph,
    exp: Explanation,
    mat: Optional[InteractionMatrix] = None,
    mode: str = "binary",
) -> Dict[Tuple[int, int], float]:
    """Score each graph edge by the explanation.

    binary: 1.0 when both endpoints share a motif, else 0.0.
    continuous: the absolute weighted pair attribution inside a motif,
    0.0 outside (requires the interaction matrix).
    """
    if mode not in ("binary", "continuous"):
        raise InputError(f"unrecognized edge score mode {mode!r}")
    if mode == "continuous":
        if mat is None:
            raise InputError("continuous edge scores need the interaction matrix")
        w = mat.weighted(exp.tau)
    out: Dict[Tuple[int, int], float] = {}
    for i, j in g.edges:
        inside = any(i in s and j in s for s in exp.motifs)
        if mode == "binary":
            out[(i, j)] = 1.0 if inside else 0.0
        else:
            out[(i, j)] = abs(float(w[i, j])) if inside else 0.0
    return out


@dataclass(frozen=True)
class FidelityResult:
    plus: float
    minus: float

    @property
    def score(self) -> float:
        return self.plus - self.minus


def fidelity(v: ValueFunction, s: NodeSubset) -> FidelityResult:
    """Deletion/retention fidelity of a node set.

    plus: f(V) - f(V minus S), the drop from deleting the motif nodes.
    minus: f(V) - f(S), the drop remaining when only they are kept.
    """
    if s.n != v.n:
        raise InputError(f"subset over n={s.n} does not match n={v.n}")
    full = (1 << v.n) - 1
    f_full = v.eval_mask(full)
    return FidelityResult(
        plus=f_full - v.eval_mask(full & ~s.mask),
        minus=f_full - v.eval_mask(s.mask),
    )


def _bernoulli_side_exact(
    v: ValueFunction, base_mask: int, pool_mask: int, keep_p: float, flip: bool
) -> float:
    """E[f(base op kept)] where kept is a Bernoulli(keep_p) subset of pool.

    flip=False: value of base | kept. flip=True: value of base & ~kept.
    """
    pool_size = pool_mask.bit_count()
    if pool_size > EXHAUSTIVE_ALPHA_CAP:
        raise InputError(
            f"exact expectation supports pools of <= {EXHAUSTIVE_ALPHA_CAP} nodes, got {pool_size}"
        )
    terms = []
    kept = pool_mask
    while True:
        k = kept.bit_count()
        weight = keep_p**k * (1.0 - keep_p) ** (pool_size - k)
        if weight != 0.0:
            mask = (base_mask & ~kept) if flip else (base_mask | kept)
            terms.append(weight * v.eval_mask(mask))
        if kept == 0:
            break
        kept = (kept - 1) & pool_mask
    return fsum(terms)


def _bernoulli_side_sampled(
    v: ValueFunction,
    base_mask: int,
    pool_mask: int,
    keep_p: float,
    flip: bool,
    samples: int,
    rng: random.Random,
) -> float:
    if keep_p == 1.0 or keep_p == 0.0 or pool_mask == 0:
        kept = pool_mask if keep_p == 1.0 else 0
        mask = (base_mask & ~kept) if flip else (base_mask | kept)
        return v.eval_mask(mask)
    bits = []
    m = pool_mask
    while m:
        low = m & -m
        m ^= low
        bits.append(low)
    vals = []
    for _ in range(samples):
        kept = 0
        for bit in bits:
            if rng.random() < keep_p:
                kept |= bit
        mask = (base_mask & ~kept) if flip else (base_mask | kept)
        vals.append(v.eval_mask(mask))
    return fsum(vals) / samples


def fidelity_alpha(
    v: ValueFunction,
    s: NodeSubset,
    alpha: float = 0.8,
    samples: int = 200,
    seed: int = 0,
    exhaustive: bool = False,
) -> FidelityResult:
    """Probabilistic fidelity. Deletion keeps each motif node with
    probability alpha before removing it from the full set; retention adds
    each outside node with probability 1 - alpha. alpha=1 reduces to plain
    fidelity exactly. exhaustive=True replaces sampling with the exact
    expectation over inclusion patterns.
    """
    if s.n != v.n:
        raise InputError(f"subset over n={s.n} does not match n={v.n}")
    if not 0.0 <= alpha <= 1.0:
        raise InputError(f"alpha must lie in [0, 1], got {alpha}")
    if samples < 1:
        raise InputError(f"need at least one sample, got {samples}")
    full = (1 << v.n) - 1
    f_full = v.eval_mask(full)
    outside = full & ~s.mask
    if exhaustive:
        e_plus = _bernoulli_side_exact(v, full, s.mask, alpha, flip=True)
        e_minus = _bernoulli_side_exact(v, s.mask, outside, 1.0 - alpha, flip=False)
    else:
        rng = random.Random(seed)
        e_plus = _bernoulli_side_sampled(v, full, s.mask, alpha, True, samples, rng)
        e_minus = _bernoulli_side_sampled(
            v, s.mask, outside, 1.0 - alpha, False, samples, rng
        )
    return FidelityResult(plus=f_full - e_plus, minus=f_full - e_minus)


@dataclass
class MetricsReport:
    """Bundle of metric values; inapplicable entries stay None."""

    f1: Optional[float] = None
    ami: Optional[float] = None
    auc: Optional[float] = None
    fid_plus: Optional[float] = None
    fid_minus: Optional[float] = None
    fid: Optional[float] = None
    fid_alpha_plus: Optional[float] = None
    fid_alpha_minus: Optional[float] = None
    fid_alpha: Optional[float] = None
    alpha: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "f1": self.f1,
            "ami": self.ami,
            "auc": self.auc,
            "fid_plus": self.fid_plus,
            "fid_minus": self.fid_minus,
            "fid": self.fid,
            "fid_alpha_plus": self.fid_alpha_plus,
            "fid_alpha_minus": self.fid_alpha_minus,
            "fid_alpha": self.fid_alpha,
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "MetricsReport":
        fields = (
            "f1", "ami", "auc", "fid_plus", "fid_minus", "fid",
            "fid_alpha_plus", "fid_alpha_minus", "fid_alpha", "alpha",
        )
        vals = {}
        for name in fields:
            raw = d.get(name)
            vals[name] = None if raw is None else float(raw)
        return cls(**vals)


def explanation_metrics(
    g: Graph,
    v: ValueFunction,
    exp: Explanation,
    gt: Optional[GroundTruth] = None,
    mat: Optional[InteractionMatrix] = None,
    alpha: float = 0.8,
    samples: int = 200,
    seed: int = 0,
) -> MetricsReport:
    """Full report for an explanation: fidelity always, recovery metrics
    when ground truth is present."""
    s = exp.nodes()
    fid = fidelity(v, s)
    fida = fidelity_alpha(v, s, alpha=alpha, samples=samples, seed=seed)
    report = MetricsReport(
        fid_plus=fid.plus,
        fid_minus=fid.minus,
        fid=fid.score,
        fid_alpha_plus=fida.plus,
        fid_alpha_minus=fida.minus,
        fid_alpha=fida.score,
        alpha=alpha,
    )
    if gt is not None:
        if gt.n != g.n:
            raise InputError(f"ground truth n={gt.n} does not match graph n={g.n}")
        report.f1 = f1_score(s, gt.nodes())
        report.ami = ami_score(exp.motifs, list(gt.motifs), g.n)
        scores = edge_scores_from_explanation(g, exp, mat=mat, mode="binary")
        if scores:
            report.auc = auc_score(scores, gt.edge_set(g))
    return report
