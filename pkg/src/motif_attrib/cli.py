"""Command-line front end.

Subcommands:
  attribute      compute an interaction index for a graph + value backend
  explain        run the full pipeline: index, motif search, metrics
  bench-queries  compare distinct-query counts of the restricted and
                 unrestricted order-k indices on the same instance

Exit codes: 0 success, 2 bad input, 3 backend failure, 4 search budget
exhausted before optimality (the artifact is still written).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, fields
from typing import Optional

from .errors import BackendError, InputError
from .games import ValueFunction, external_backend, game_from_dict
from .graph import Graph
from .interaction import (
    myerson_exact,
    myerson_taylor_exact,
    sample_index,
    shapley_exact,
    shapley_taylor_exact,
)
from .metrics import GroundTruth, explanation_metrics
from .search import branch_and_bound_search, build_matrix, default_budget, exhaustive_search

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_BACKEND = 3
EXIT_BUDGET = 4

_METHODS = ("shapley", "myerson", "shapley-taylor", "myerson-taylor")


@dataclass
class RunConfig:
    """Effective settings after merging flags > config file > defaults."""

    graph: Optional[str] = None
    values: Optional[str] = None
    endpoint: Optional[str] = None
    method: str = "myerson-taylor"
    k: Optional[int] = None
    sampled: bool = False
    permutations: int = 200
    seed: int = 0
    tau: float = 1.0
    m: Optional[int] = None
    M: Optional[int] = None
    gt: Optional[str] = None
    out: Optional[str] = None
    threads: int = 1
    solver: str = "bnb"
    node_budget: Optional[int] = None
    metrics: str = "all"
    alpha: float = 0.8
    metric_samples: int = 200
    timeout: float = 30.0


def _merge_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    file_vals = {}
    if getattr(args, "config", None):
        doc = _load_json(args.config)
        if not isinstance(doc, dict):
            raise InputError("config file must hold a JSON object")
        file_vals = doc
    for f in fields(RunConfig):
        cli_val = getattr(args, f.name, None)
        if cli_val is not None:
            setattr(cfg, f.name, cli_val)
        elif f.name in file_vals:
            setattr(cfg, f.name, file_vals[f.name])
    return cfg


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_graph(cfg: RunConfig) -> Graph:
    if not cfg.graph:
        raise InputError("--graph is required")
    return Graph.from_dict(_load_json(cfg.graph))


def _load_values(cfg: RunConfig, g: Graph) -> ValueFunction:
    if bool(cfg.values) == bool(cfg.endpoint):
        raise InputError("exactly one of --values and --endpoint is required")
    if cfg.values:
        v = game_from_dict(_load_json(cfg.values))
        if v.n != g.n:
            raise InputError(f"value function n={v.n} does not match graph n={g.n}")
        return v
    return external_backend(cfg.endpoint, expected_n=g.n, timeout=cfg.timeout)


def _resolve_k(cfg: RunConfig) -> int:
    if cfg.method not in _METHODS:
        raise InputError(f"unrecognized method {cfg.method!r}")
    if cfg.method in ("shapley", "myerson"):
        if cfg.k not in (None, 1):
            raise InputError(f"method {cfg.method} fixes k=1, got k={cfg.k}")
        return 1
    return 2 if cfg.k is None else int(cfg.k)


def _compute_index(cfg: RunConfig, g: Graph, v: ValueFunction):
    k = _resolve_k(cfg)
    restricted = cfg.method in ("myerson", "myerson-taylor")
    if cfg.sampled:
        return sample_index(
            g, v, k,
            permutations=cfg.permutations,
            seed=cfg.seed,
            restricted=restricted,
            threads=cfg.threads,
        )
    if cfg.method == "shapley":
        return shapley_exact(v, g.n)
    if cfg.method == "myerson":
        return myerson_exact(g, v)
    if cfg.method == "shapley-taylor":
        return shapley_taylor_exact(v, g.n, k)
    return myerson_taylor_exact(g, v, k)


def _emit(doc: dict, out: Optional[str]) -> None:
    text = json.dumps(doc, indent=2, sort_keys=False) + "\n"
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_attribute(cfg: RunConfig) -> int:
    g = _load_graph(cfg)
    with _load_values(cfg, g) as v:
        t0 = time.perf_counter()
        idx = _compute_index(cfg, g, v)
        elapsed = time.perf_counter() - t0
        doc = idx.to_dict()
        doc["stats"] = {"query_count": v.query_count, "wall_time_s": elapsed}
    _emit(doc, cfg.out)
    return EXIT_OK


def cmd_explain(cfg: RunConfig) -> int:
    if cfg.method in ("shapley", "myerson"):
        raise InputError("explain needs a pairwise method: shapley-taylor or myerson-taylor")
    k = _resolve_k(cfg)
    if k != 2:
        raise InputError(f"explain requires k=2, got k={k}")
    g = _load_graph(cfg)
    gt = GroundTruth.from_dict(_load_json(cfg.gt)) if cfg.gt else None
    if gt is not None and gt.n != g.n:
        raise InputError(f"ground truth n={gt.n} does not match graph n={g.n}")
    with _load_values(cfg, g) as v:
        t0 = time.perf_counter()
        idx = _compute_index(cfg, g, v)
        mat = build_matrix(idx)
        m, big_m = default_budget(g, gt)
        if cfg.m is not None:
            m = int(cfg.m)
        if cfg.M is not None:
            big_m = int(cfg.M)
        if cfg.solver == "exhaustive":
            exp = exhaustive_search(g, mat, m, big_m, cfg.tau)
        elif cfg.solver == "bnb":
            exp = branch_and_bound_search(
                g, mat, m, big_m, cfg.tau, node_budget=cfg.node_budget
            )
        else:
            raise InputError(f"unrecognized solver {cfg.solver!r}")
        doc = exp.to_dict()
        if cfg.metrics != "none":
            report = explanation_metrics(
                g, v, exp, gt=gt, mat=mat,
                alpha=cfg.alpha, samples=cfg.metric_samples, seed=cfg.seed,
            )
            doc["metrics"] = report.to_dict()
        else:
            doc["metrics"] = None
        elapsed = time.perf_counter() - t0
        doc["stats"] = {"query_count": v.query_count, "wall_time_s": elapsed}
    _emit(doc, cfg.out)
    return EXIT_OK if exp.optimal else EXIT_BUDGET


def cmd_bench_queries(cfg: RunConfig) -> int:
    k = 2 if cfg.k is None else int(cfg.k)
    g = _load_graph(cfg)
    doc = {"n": g.n, "k": k}
    for label, runner in (
        ("myerson_taylor", lambda vv: myerson_taylor_exact(g, vv, k)),
        ("shapley_taylor", lambda vv: shapley_taylor_exact(vv, g.n, k)),
    ):
        with _load_values(cfg, g) as v:
            t0 = time.perf_counter()
            runner(v)
            elapsed = time.perf_counter() - t0
            doc[label] = {"queries": v.query_count, "wall_time_s": elapsed}
    _emit(doc, cfg.out)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motif-attrib",
        description="Structure-aware attribution and motif explanations "
        "for black-box functions on graph node subsets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--graph", help="graph JSON file")
        p.add_argument("--values", help="value-function JSON file")
        p.add_argument("--endpoint", help="remote backend: tcp:HOST:PORT or stdio:COMMAND")
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--out", help="output path (default: stdout)")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--timeout", type=float, help="backend timeout in seconds")

    p_attr = sub.add_parser("attribute", help="compute an interaction index")
    add_common(p_attr)
    p_attr.add_argument("--method", choices=_METHODS)
    p_attr.add_argument("--k", type=int)
    p_attr.add_argument("--sampled", action="store_const", const=True)
    p_attr.add_argument("--permutations", type=int)

    p_exp = sub.add_parser("explain", help="index + motif search + metrics")
    add_common(p_exp)
    p_exp.add_argument("--method", choices=("shapley-taylor", "myerson-taylor"))
    p_exp.add_argument("--k", type=int)
    p_exp.add_argument("--sampled", action="store_const", const=True)
    p_exp.add_argument("--permutations", type=int)
    p_exp.add_argument("--tau", type=float)
    p_exp.add_argument("--m", type=int)
    p_exp.add_argument("--M", type=int)
    p_exp.add_argument("--gt", help="ground-truth motifs JSON file")
    p_exp.add_argument("--solver", choices=("bnb", "exhaustive"))
    p_exp.add_argument("--node-budget", dest="node_budget", type=int)
    p_exp.add_argument("--metrics", choices=("all", "none"))
    p_exp.add_argument("--alpha", type=float)
    p_exp.add_argument("--metric-samples", dest="metric_samples", type=int)

    p_bench = sub.add_parser("bench-queries", help="query-count comparison")
    add_common(p_bench)
    p_bench.add_argument("--k", type=int)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _merge_config(args)
        if args.command == "attribute":
            return cmd_attribute(cfg)
        if args.command == "explain":
            return cmd_explain(cfg)
        return cmd_bench_queries(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())
