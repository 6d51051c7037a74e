"""Confusion metrics, ROC sweeps, and reference baselines for recovered models.

Cluster recovery is scored over unordered observed pairs (same cluster in
truth vs estimate); edge recovery over (observed, downstream-latent)
candidate pairs. Baselines: random equal-size clusterings, the
single-child conditional-independence variant of the DAG stage, and the
infeasible oracle that observes latent columns directly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .discovery import DiscoveryConfig, _edge_stage
from .errors import DomainMismatch
from .graph import Lfcm, OrderedClustering, latent_graph
from .linalg import CovarianceSource, DataMatrix, sample_covariance
from .stats import test_conditional_independence

_trapezoid = getattr(np, "trapezoid", np.trapz)


class _RatePropertiesMixin:
    """Shared derived rates; denominators of zero yield None, never 0/0."""

    @property
    def tpr(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def fpr(self) -> float | None:
        neg = self.fp + self.tn
        return self.fp / neg if neg else None

    @property
    def precision(self) -> float | None:
        pred = self.tp + self.fp
        return self.tp / pred if pred else None

    @property
    def recall(self) -> float | None:
        return self.tpr


@dataclass(frozen=True)
class PairConfusion(_RatePropertiesMixin):
    """Cross-tabulation of same-cluster membership over unordered pairs.

    tp + fp + fn + tn always equals p*(p-1)/2 for p observed nodes.
    """

    tp: int
    fp: int
    fn: int
    tn: int


@dataclass(frozen=True)
class EdgeConfusion(_RatePropertiesMixin):
    """Cross-tabulation over (observed, strictly-downstream latent) pairs.

    The candidate universe contains pairs (X, L_j) whose true cluster
    precedes L_j in the evaluation ordering; estimated edges that fall
    outside it (wrong direction, or an unmatched estimated latent) are
    counted as extra false positives, so tp + fn + tn + fp may exceed
    the universe size by exactly those extras.
    """

    tp: int
    fp: int
    fn: int
    tn: int


def _cluster_sets(clustering) -> list[frozenset[int]]:
    if isinstance(clustering, OrderedClustering):
        return list(clustering.clusters)
    return [frozenset(c) for c in clustering]


def cluster_pair_confusion(truth, est) -> PairConfusion:
    """Scores an estimated clustering against the true one, pair by pair.

    Args:
        truth: iterable of disjoint node sets (or an OrderedClustering).
        est: same, over exactly the same node set.

    Returns:
        PairConfusion over all unordered node pairs: tp counts pairs
        together in both clusterings, fp together only in the estimate,
        fn together only in truth, tn separated in both.

    Raises:
        DomainMismatch: node sets differ, or either side has overlaps.
    """
    t_sets = _cluster_sets(truth)
    e_sets = _cluster_sets(est)
    t_nodes = sorted(n for c in t_sets for n in c)
    e_nodes = sorted(n for c in e_sets for n in c)
    if len(t_nodes) != len(set(t_nodes)) or len(e_nodes) != len(set(e_nodes)):
        raise DomainMismatch("clusters within one clustering must be disjoint")
    if t_nodes != e_nodes:
        raise DomainMismatch("clusterings cover different node sets")
    index = {n: i for i, n in enumerate(t_nodes)}
    p = len(t_nodes)
    t_label = np.empty(p, dtype=np.int64)
    e_label = np.empty(p, dtype=np.int64)
    for lab, c in enumerate(t_sets):
        for n in c:
            t_label[index[n]] = lab
    for lab, c in enumerate(e_sets):
        for n in c:
            e_label[index[n]] = lab
    iu, ju = np.triu_indices(p, 1)
    same_t = t_label[iu] == t_label[ju]
    same_e = e_label[iu] == e_label[ju]
    tp = int(np.sum(same_t & same_e))
    fp = int(np.sum(~same_t & same_e))
    fn = int(np.sum(same_t & ~same_e))
    tn = int(np.sum(~same_t & ~same_e))
    return PairConfusion(tp, fp, fn, tn)


def match_clusters_to_latents(truth: Lfcm, est: Lfcm) -> dict[int, int]:
    """Greedy max-overlap assignment of estimated clusters to true latents.

    Candidate (estimated cluster, true latent) pairs are ranked by
    descending overlap with ties broken toward the lowest true latent
    index, then the lowest estimated index; each side is used at most
    once and zero-overlap pairs never match.

    Returns:
        dict mapping estimated latent index -> true latent index.
    """
    pairs = []
    for m in range(est.num_latent):
        members = set(est.children(m))
        for k in range(truth.num_latent):
            ov = len(members & set(truth.children(k)))
            if ov > 0:
                pairs.append((-ov, k, m))
    pairs.sort()
    used_truth: set[int] = set()
    mapping: dict[int, int] = {}
    for _neg, k, m in pairs:
        if k in used_truth or m in mapping:
            continue
        mapping[m] = k
        used_truth.add(k)
    return mapping


def edge_confusion(truth: Lfcm, est: Lfcm, ordering: Sequence[int]) -> EdgeConfusion:
    """Scores estimated observed-to-latent edges against the true model.

    Args:
        truth: ground-truth model.
        est: estimated model over the same observed nodes.
        ordering: true latent indices, upstream first; the candidate
            universe is every (X, L_j) with X's true cluster strictly
            before L_j in this ordering.

    Returns:
        EdgeConfusion; estimated edges outside the universe count as fp.
    """
    if est.num_observed != truth.num_observed:
        raise DomainMismatch("models cover different numbers of observed nodes")
    if sorted(ordering) != list(range(truth.num_latent)):
        raise DomainMismatch("ordering must enumerate every true latent once")
    pos = {k: r for r, k in enumerate(ordering)}
    universe = set()
    for x in range(truth.num_observed):
        for k in range(truth.num_latent):
            if pos[truth.cluster_of[x]] < pos[k]:
                universe.add((x, k))
    true_edges = set(truth.obs_to_latent)
    mapping = match_clusters_to_latents(truth, est)
    predicted = set()
    extra_fp = 0
    for x, m in est.obs_to_latent:
        if m in mapping and (x, mapping[m]) in universe:
            predicted.add((x, mapping[m]))
        else:
            extra_fp += 1
    tp = len(predicted & true_edges)
    fp = len(predicted - true_edges) + extra_fp
    fn = len(true_edges - predicted)
    tn = len(universe) - tp - (len(predicted) - len(predicted & true_edges)) - fn
    return EdgeConfusion(tp, fp, fn, tn)


def graphs_equal_canonical(truth: Lfcm, est: Lfcm) -> bool:
    """True when est equals truth up to relabeling of the latents.

    Clusters are matched to true latents by maximum overlap; equality
    requires the matching to pair every cluster exactly and the
    observed-to-latent edge sets to coincide under the relabeling.
    """
    if est.num_latent != truth.num_latent or est.num_observed != truth.num_observed:
        return False
    mapping = match_clusters_to_latents(truth, est)
    if len(mapping) != truth.num_latent:
        return False
    for m, k in mapping.items():
        if set(est.children(m)) != set(truth.children(k)):
            return False
    relabeled = {(x, mapping[m]) for x, m in est.obs_to_latent}
    return relabeled == set(truth.obs_to_latent)


def roc_sweep(
    scenario: Callable[[float], _RatePropertiesMixin], alphas: Iterable[float]
) -> list[tuple[float, float | None, float | None]]:
    """Runs scenario(alpha) per level and collects (alpha, fpr, tpr) rows.

    Rows come back sorted by alpha; degenerate rates are None.
    """
    rows = []
    for a in sorted(alphas):
        if not 0.0 < a <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {a}")
        conf = scenario(a)
        rows.append((a, conf.fpr, conf.tpr))
    return rows


def trapezoid_auc(points: Iterable[tuple[float | None, float | None]]) -> float:
    """Area under a ROC polyline anchored at (0,0) and (1,1).

    Points with a missing coordinate are dropped before integration.
    """
    kept = [(f, t) for f, t in points if f is not None and t is not None]
    kept.extend([(0.0, 0.0), (1.0, 1.0)])
    kept.sort()
    xs = np.array([f for f, _ in kept])
    ys = np.array([t for _, t in kept])
    return float(_trapezoid(ys, xs))


def random_clustering_baseline(p: int, num_clusters: int, seed) -> tuple[frozenset[int], ...]:
    """Random partition of p nodes into num_clusters near-equal blocks.

    A seeded permutation is cut into contiguous blocks whose sizes
    differ by at most one.
    """
    if not 1 <= num_clusters <= p:
        raise ValueError(f"need 1 <= clusters <= {p}, got {num_clusters}")
    order = np.random.default_rng(seed).permutation(p)
    return tuple(frozenset(int(v) for v in block) for block in np.array_split(order, num_clusters))


def single_child_baseline_edges(
    cov: CovarianceSource, pi: OrderedClustering, cfg: DiscoveryConfig
) -> Lfcm:
    """DAG stage variant testing one child per latent instead of the cluster.

    Same candidate edges and conditioning sets as learn_dag on the given
    (true) clustering, but each H_ci targets only the lowest-index child
    of L_i. Weaker by design; serves as the comparison baseline.
    """
    return _edge_stage(cov, pi, cfg, lambda cluster: [min(cluster)])


def oracle_edges(full_data: DataMatrix, truth: Lfcm, cfg: DiscoveryConfig) -> Lfcm:
    """Infeasible reference: edge tests against the latent columns directly.

    Args:
        full_data: samples whose first num_latent columns are the latent
            nodes themselves, followed by the observed columns.
        truth: ground-truth model supplying clusters and their ordering.
        cfg: alpha_ci is the only field used.

    Returns:
        Lfcm in the truth's own latent indexing, with an edge X_j -> L_i
        whenever the Fisher test of X_j against the L_i column given the
        strictly-upstream observed children (minus X_j) rejects.
    """
    num_l = truth.num_latent
    if full_data.p != num_l + truth.num_observed:
        raise DomainMismatch(
            f"expected {num_l + truth.num_observed} columns (latents first), got {full_data.p}"
        )
    cov = sample_covariance(full_data)
    leaf_first = tuple(reversed(latent_graph(truth).topological_order()))
    edges = set()
    for i, k_i in enumerate(leaf_first):
        upstream = sorted(x for k in leaf_first[i + 1:] for x in truth.children(k))
        for x in upstream:
            cond = [num_l + s for s in upstream if s != x]
            report = test_conditional_independence(cov, num_l + x, [k_i], cond, cfg.alpha_ci)
            if report.reject:
                edges.add((x, k_i))
    return Lfcm(num_l, truth.num_observed, truth.cluster_of, frozenset(edges))


def _format_cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_metrics_csv(path, rows, include_method: bool = False) -> None:
    """Writes confusion rows in the exchange format used by the CLI.

    Args:
        path: destination file.
        rows: tuples (alpha, seed, confusion, metric_kind) or with a
            trailing method name when include_method is set.
        include_method: append the benchmark's method column.
    """
    header = ["alpha", "seed", "tp", "fp", "fn", "tn", "fpr", "tpr", "metric_kind"]
    if include_method:
        header.append("method")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            alpha, seed, conf, kind = row[:4]
            cells = [
                _format_cell(float(alpha)),
                str(int(seed)),
                str(conf.tp),
                str(conf.fp),
                str(conf.fn),
                str(conf.tn),
                _format_cell(conf.fpr),
                _format_cell(conf.tpr),
                kind,
            ]
            if include_method:
                cells.append(row[4])
            writer.writerow(cells)
