"""Command-line interface: simulate, discover, evaluate, benchmark, preprocess.

Exit codes: 0 success, 1 partial benchmark failure, 2 input error,
3 statistical precondition failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import multiprocessing
import sys

import numpy as np

from .discovery import DiscoveryConfig, estimate_lfcm
from .errors import (
    DegenerateCalibration,
    DegenerateVariance,
    DomainMismatch,
    EmptyHypothesis,
    InsufficientSamples,
    LfcmError,
    SingularMatrix,
)
from .evaluation import (
    cluster_pair_confusion,
    edge_confusion,
    oracle_edges,
    random_clustering_baseline,
    single_child_baseline_edges,
    write_metrics_csv,
)
from .graph import (
    Lfcm,
    OrderedClustering,
    latent_graph,
    lfcm_from_json_dict,
    lfcm_to_json_dict,
)
from .linalg import DataMatrix, sample_covariance
from .simulate import (
    GeneratorConfig,
    parameterize,
    random_lfcm,
    sample_data,
    sample_full_data,
    scm_to_json_dict,
)

_STATISTICAL_ERRORS = (
    InsufficientSamples,
    DegenerateVariance,
    EmptyHypothesis,
    SingularMatrix,
    DegenerateCalibration,
)


def write_data_csv(path, data: DataMatrix) -> None:
    """Header of column names, then float rows; '.' decimal, LF endings."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.column_names)
        for row in data.values:
            writer.writerow([repr(float(x)) for x in row])


def read_data_csv(path) -> DataMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric field") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return DataMatrix(np.array(rows, dtype=float), tuple(header))


def _write_json(path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def _truth_pi_and_ordering(truth: Lfcm) -> tuple[OrderedClustering, tuple[int, ...]]:
    """Leaf-first clustering of the true model plus its upstream-first ordering."""
    topo = latent_graph(truth).topological_order()
    leaf_first = tuple(reversed(topo))
    pi = OrderedClustering(tuple(frozenset(truth.children(k)) for k in leaf_first))
    return pi, topo


def cmd_simulate(args) -> int:
    for g in range(args.graphs):
        seed = args.seed + g
        cfg = GeneratorConfig(
            num_latent=args.num_latent,
            latent_edge_prob=args.latent_edge_prob,
            seed=seed,
        )
        truth = random_lfcm(cfg)
        scm = parameterize(truth, cfg)
        data = sample_data(scm, args.n, seed)
        _write_json(f"{args.out}/scm_{seed}.json", scm_to_json_dict(scm))
        names = scm.node_names()[truth.num_latent:]
        _write_json(f"{args.out}/truth_{seed}.json", lfcm_to_json_dict(truth, names))
        write_data_csv(f"{args.out}/data_{seed}.csv", data)
    return 0


def cmd_discover(args) -> int:
    data = read_data_csv(args.data)
    cfg = DiscoveryConfig(
        alpha_vt=args.alpha_vt, alpha_ci=args.alpha_ci, min_clique=args.min_clique
    )
    graph, trace = estimate_lfcm(data, cfg)
    _write_json(args.out, lfcm_to_json_dict(graph, data.column_names))
    if args.trace:
        _write_json(args.trace, trace.to_json_dict())
    return 0


def cmd_evaluate(args) -> int:
    truth, truth_names = lfcm_from_json_dict(_read_json(args.truth))
    est, est_names = lfcm_from_json_dict(_read_json(args.est))
    if truth_names != est_names:
        raise DomainMismatch("truth and estimate use different observed names")
    truth_clusters = tuple(frozenset(truth.children(k)) for k in range(truth.num_latent))
    est_clusters = tuple(frozenset(est.children(k)) for k in range(est.num_latent))
    rows = [
        (args.alpha, args.seed, cluster_pair_confusion(truth_clusters, est_clusters), "cluster_pairs")
    ]
    order = latent_graph(truth).topological_order()
    rows.append((args.alpha, args.seed, edge_confusion(truth, est, order), "edges"))
    write_metrics_csv(args.out, rows)
    return 0


def _benchmark_point(task):
    """One (graph seed, alpha) cell: method rows plus the three baselines."""
    seed, alpha, num_latent, edge_prob, n = task
    gen = GeneratorConfig(num_latent=num_latent, latent_edge_prob=edge_prob, seed=seed)
    truth = random_lfcm(gen)
    scm = parameterize(truth, gen)
    full = sample_full_data(scm, n, seed)
    observed = DataMatrix(full.values[:, truth.num_latent:], full.column_names[truth.num_latent:])
    cfg = DiscoveryConfig(alpha_vt=alpha, alpha_ci=alpha)
    truth_clusters = tuple(frozenset(truth.children(k)) for k in range(truth.num_latent))
    pi, order = _truth_pi_and_ordering(truth)

    est, _ = estimate_lfcm(observed, cfg)
    est_clusters = tuple(frozenset(est.children(k)) for k in range(est.num_latent))
    rows = [
        (alpha, seed, cluster_pair_confusion(truth_clusters, est_clusters), "cluster_pairs", "lfcm"),
        (alpha, seed, edge_confusion(truth, est, order), "edges", "lfcm"),
    ]
    rand = random_clustering_baseline(
        truth.num_observed, truth.num_latent, np.random.SeedSequence((seed, 2))
    )
    rows.append(
        (alpha, seed, cluster_pair_confusion(truth_clusters, rand), "cluster_pairs", "random")
    )
    cov = sample_covariance(observed)
    single = single_child_baseline_edges(cov, pi, cfg)
    rows.append((alpha, seed, edge_confusion(truth, single, order), "edges", "single_child"))
    oracle = oracle_edges(full, truth, cfg)
    rows.append((alpha, seed, edge_confusion(truth, oracle, order), "edges", "oracle"))
    return rows


def _run_point(task):
    try:
        return task, _benchmark_point(task), None
    except Exception as exc:  # noqa: BLE001 - points must not kill the sweep
        return task, [], f"{type(exc).__name__}: {exc}"


def cmd_benchmark(args) -> int:
    alphas = [float(a) for a in args.alphas.split(",") if a]
    if not alphas or not all(0.0 < a <= 1.0 for a in alphas):
        raise ValueError(f"alphas must lie in (0, 1], got {args.alphas!r}")
    tasks = [
        (args.seed + g, alpha, args.num_latent, args.latent_edge_prob, args.n)
        for g in range(args.graphs)
        for alpha in alphas
    ]
    if args.jobs > 1:
        with multiprocessing.Pool(args.jobs) as pool:
            results = pool.map(_run_point, tasks)
    else:
        results = [_run_point(t) for t in tasks]
    rows = []
    failures = 0
    for task, point_rows, error in results:
        if error is not None:
            failures += 1
            print(f"point seed={task[0]} alpha={task[1]} failed: {error}", file=sys.stderr)
        rows.extend(point_rows)
    rows.sort(key=lambda r: (r[1], r[0], r[3], r[4]))
    write_metrics_csv(args.out, rows, include_method=True)
    return 1 if failures else 0


def _ols_residual_fit(y: np.ndarray, design: np.ndarray):
    """Least squares with intercept; returns (coefficients, fitted values)."""
    x = np.column_stack([np.ones(len(design)), design])
    beta, _res, rank, _sv = np.linalg.lstsq(x, y, rcond=None)
    if rank < x.shape[1]:
        raise SingularMatrix("regression design matrix is rank deficient")
    return beta[1:], x @ beta


def _parse_steps(text: str) -> list[list[str]]:
    steps = []
    for chunk in text.split(";"):
        tokens = chunk.split()
        if tokens:
            steps.append(tokens)
    return steps


def cmd_preprocess(args) -> int:
    data = read_data_csv(args.data)
    values = data.values.copy()
    names = list(data.column_names)

    def col(name: str) -> int:
        try:
            return names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None

    for step in _parse_steps(args.steps):
        op, rest = step[0], step[1:]
        if op == "regress-out":
            if len(rest) != 1:
                raise ValueError(f"regress-out takes one column, got {rest}")
            c = col(rest[0])
            predictor = values[:, [c]]
            for other in range(values.shape[1]):
                if other == c:
                    continue
                _beta, fitted = _ols_residual_fit(values[:, other], predictor)
                values[:, other] -= fitted
            values = np.delete(values, c, axis=1)
            del names[c]
        elif op == "remove-effect":
            low = [t.lower() for t in rest]
            if "from" not in low:
                raise ValueError("remove-effect syntax: CHILD from PARENT [given OTHERS...]")
            fi = low.index("from")
            child_name = " ".join(rest[:fi])
            tail = rest[fi + 1:]
            tail_low = low[fi + 1:]
            if "given" in tail_low:
                gi = tail_low.index("given")
                parent_name, others = " ".join(tail[:gi]), tail[gi + 1:]
            else:
                parent_name, others = " ".join(tail), []
            c_child = col(child_name)
            c_parent = col(parent_name)
            design_cols = [c_parent] + [col(o) for o in others]
            beta, _fitted = _ols_residual_fit(values[:, c_child], values[:, design_cols])
            values[:, c_child] -= beta[0] * values[:, c_parent]
        elif op == "drop":
            for name in rest:
                c = col(name)
                values = np.delete(values, c, axis=1)
                del names[c]
        else:
            raise ValueError(f"unknown preprocess step {op!r}")
    write_data_csv(args.out, DataMatrix(values, tuple(names)))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfcm", description="Latent factor causal model discovery toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate graphs, parameters, and data")
    p_sim.add_argument("--latents", "--num-latent", dest="num_latent", type=int, default=10)
    p_sim.add_argument(
        "--edge-prob", "--latent-edge-prob", dest="latent_edge_prob", type=float, default=0.5
    )
    p_sim.add_argument("--n", type=int, default=200)
    p_sim.add_argument("--graphs", type=int, default=1)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_disc = sub.add_parser("discover", help="estimate an LFCM from a data CSV")
    p_disc.add_argument("data")
    p_disc.add_argument("--out", required=True, help="output graph JSON")
    p_disc.add_argument("--trace", help="optional trace JSON")
    p_disc.add_argument("--alpha-vt", type=float, default=0.01)
    p_disc.add_argument("--alpha-ci", type=float, default=0.1)
    p_disc.add_argument("--min-clique", type=int, default=2)
    p_disc.set_defaults(func=cmd_discover)

    p_eval = sub.add_parser("evaluate", help="score an estimated graph against truth")
    p_eval.add_argument("truth")
    p_eval.add_argument("est")
    p_eval.add_argument("--out", required=True, help="metrics CSV")
    p_eval.add_argument("--alpha", type=float, default=0.0, help="stamp for the alpha column")
    p_eval.add_argument("--seed", type=int, default=0, help="stamp for the seed column")
    p_eval.set_defaults(func=cmd_evaluate)

    p_bench = sub.add_parser("benchmark", help="sweep simulate/discover/evaluate with baselines")
    p_bench.add_argument("--graphs", type=int, default=50)
    p_bench.add_argument("--latents", "--num-latent", dest="num_latent", type=int, default=10)
    p_bench.add_argument(
        "--edge-prob", "--latent-edge-prob", dest="latent_edge_prob", type=float, default=0.5
    )
    p_bench.add_argument("--n", type=int, default=200)
    p_bench.add_argument("--alphas", default="0.05,0.1,0.2,0.3,0.4,0.5")
    p_bench.add_argument("--seed", type=int, required=True)
    p_bench.add_argument("--out", required=True, help="metrics CSV")
    p_bench.add_argument("--jobs", type=int, default=1)
    p_bench.set_defaults(func=cmd_benchmark)

    p_prep = sub.add_parser("preprocess", help="column operations on a data CSV")
    p_prep.add_argument("data")
    p_prep.add_argument("--out", required=True)
    p_prep.add_argument(
        "--steps",
        required=True,
        help="semicolon-separated: regress-out COL; remove-effect CHILD from PARENT"
        " given OTHERS...; drop COL...",
    )
    p_prep.set_defaults(func=cmd_preprocess)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _STATISTICAL_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except (LfcmError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {type(exc).__name__}: {message}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
