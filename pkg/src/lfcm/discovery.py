"""Three-stage latent factor model discovery.

Stage 1 peels off clusters of observed variables whose pairwise
vanishing-tetrad tests against the remaining variables are retained,
leaf clusters first. Stage 2 merges cluster pairs whose union still has
all tetrads vanishing. Stage 3 places one latent per cluster and tests
each strictly-upstream observed variable for an edge into the latent via
conditional-independence rejection. estimate_lfcm composes the stages
over one sample covariance and threads a replayable trace.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidData, TooFewVariables
from .graph import Lfcm, OrderedClustering, greedy_clique
from .linalg import CovarianceSource, DataMatrix, sample_covariance
from .stats import (
    _require_sample_n,
    _sidak_transform,
    _tetrad_pvalues_core,
    test_conditional_independence,
    test_vanishing_tetrads,
)


@dataclass(frozen=True)
class DiscoveryConfig:
    """Significance levels and the minimum clique size taken per round."""

    alpha_vt: float = 0.01
    alpha_ci: float = 0.1
    min_clique: int = 2

    def __post_init__(self) -> None:
        for name in ("alpha_vt", "alpha_ci"):
            value = float(getattr(self, name))
            object.__setattr__(self, name, value)
            if not 0.0 < value <= 1.0:
                raise InvalidData(f"{name} must be in (0, 1], got {value}")
        if self.min_clique < 2:
            raise InvalidData(f"min_clique must be >= 2, got {self.min_clique}")


@dataclass(frozen=True)
class RoundRecord:
    """One clustering round: the graph built, the clique taken or refused."""

    remaining: tuple[int, ...]
    retained_pairs: tuple[tuple[int, int], ...]
    clique: tuple[int, ...]
    accepted: bool


@dataclass(frozen=True)
class MergeRecord:
    position: int
    kept: tuple[int, ...]
    absorbed: tuple[int, ...]


@dataclass(frozen=True)
class EdgeTestRecord:
    observed: int
    cluster_position: int
    conditioning: tuple[int, ...]
    rejected: bool
    min_adjusted_p: float


@dataclass
class DiscoveryTrace:
    """Append-only record of every decision; replays to the same output."""

    rounds: list[RoundRecord] = field(default_factory=list)
    merges: list[MergeRecord] = field(default_factory=list)
    edge_tests: list[EdgeTestRecord] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "rounds": [
                {
                    "remaining": list(r.remaining),
                    "retained_pairs": [list(p) for p in r.retained_pairs],
                    "clique": list(r.clique),
                    "accepted": r.accepted,
                }
                for r in self.rounds
            ],
            "merges": [
                {"position": m.position, "kept": list(m.kept), "absorbed": list(m.absorbed)}
                for m in self.merges
            ],
            "edge_tests": [
                {
                    "observed": t.observed,
                    "cluster_position": t.cluster_position,
                    "conditioning": list(t.conditioning),
                    "rejected": t.rejected,
                    "min_adjusted_p": t.min_adjusted_p,
                }
                for t in self.edge_tests
            ],
        }


def _pairwise_retained(cov: CovarianceSource, remaining: list[int], alpha: float) -> np.ndarray:
    """Boolean matrix over local indices: True where H_vt({i,j}, rest) is retained.

    Enumerates every tetrad of every pair in one index array and pushes
    it through the batched Wishart kernel; the Sidak exponent per pair is
    the number of tetrads it contributes.
    """
    r = len(remaining)
    nodes = np.asarray(remaining, dtype=np.intp)
    pair_i, pair_j = np.triu_indices(r, 1)
    n_pairs = len(pair_i)
    mask = np.ones((n_pairs, r), dtype=bool)
    rows = np.arange(n_pairs)
    mask[rows, pair_i] = False
    mask[rows, pair_j] = False
    rest = np.nonzero(mask)[1].reshape(n_pairs, r - 2)
    comb_u, comb_v = np.triu_indices(r - 2, 1)
    n_tetrads = len(comb_u)
    ii = np.broadcast_to(nodes[pair_i][:, None], (n_pairs, n_tetrads))
    jj = np.broadcast_to(nodes[pair_j][:, None], (n_pairs, n_tetrads))
    uu = nodes[rest[:, comb_u]]
    vv = nodes[rest[:, comb_v]]
    raw = _tetrad_pvalues_core(
        cov.sigma, cov.n_eff, ii.ravel(), jj.ravel(), uu.ravel(), vv.ravel()
    ).reshape(n_pairs, n_tetrads)
    adjusted = _sidak_transform(raw, n_tetrads)
    retained_pairs = adjusted.min(axis=1) >= alpha
    retained = np.zeros((r, r), dtype=bool)
    retained[pair_i, pair_j] = retained_pairs
    retained[pair_j, pair_i] = retained_pairs
    return retained


def find_ordered_clusters(
    cov: CovarianceSource, cfg: DiscoveryConfig, trace: DiscoveryTrace | None = None
) -> tuple[OrderedClustering, DiscoveryTrace]:
    """Stage 1: peel greedy cliques of tetrad-retained pairs, leaves first.

    While more than 3 variables remain, build the undirected graph whose
    edges are pairs {i, j} with H_vt({i, j}, remaining minus {i, j})
    retained at alpha_vt, take a greedy maximal clique, and split it off
    as the next cluster. A clique smaller than min_clique is not trusted
    as a cluster; its lowest-index node is shed as a singleton instead,
    so one stray rejection cannot trap the variables still holding true
    clusters. Any final 3 or fewer variables become the last cluster.
    Later clusters are upstream of earlier ones.
    """
    if cov.p < 2:
        raise TooFewVariables(f"clustering needs at least 2 variables, got {cov.p}")
    _require_sample_n(cov, 4, "the Wishart test")
    if trace is None:
        trace = DiscoveryTrace()
    remaining = list(range(cov.p))
    clusters: list[frozenset[int]] = []
    while len(remaining) > 3:
        retained = _pairwise_retained(cov, remaining, cfg.alpha_vt)
        clique_local = sorted(greedy_clique(retained))
        clique = [remaining[v] for v in clique_local]
        accepted = len(clique) >= cfg.min_clique
        li, lj = np.nonzero(np.triu(retained, 1))
        trace.rounds.append(
            RoundRecord(
                tuple(remaining),
                tuple((remaining[a], remaining[b]) for a, b in zip(li, lj)),
                tuple(clique),
                accepted,
            )
        )
        clusters.append(frozenset(clique) if accepted else frozenset(clique[:1]))
        remaining = [v for v in remaining if v not in clusters[-1]]
    if remaining:
        clusters.append(frozenset(remaining))
    return OrderedClustering(tuple(clusters)), trace


def merge_clusters(
    cov: CovarianceSource,
    pi: OrderedClustering,
    cfg: DiscoveryConfig,
    trace: DiscoveryTrace | None = None,
) -> OrderedClustering:
    """Stage 2: merge cluster pairs whose union keeps all tetrads vanishing.

    Scans ordered pairs (position ascending on both sides); when
    H_vt(c1 | c2, c1 | c2) is retained, c2 is absorbed into c1's
    position and the scan restarts. Unions with fewer than 4 variables
    carry no tetrad and are never merged. Singleton clusters are never
    merge candidates either: every tetrad over one outside node plus a
    cluster of pure children vanishes no matter where that node belongs,
    so the union test carries no signal for them.
    """
    clusters = list(pi.clusters)
    changed = True
    while changed:
        changed = False
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                if min(len(clusters[a]), len(clusters[b])) < 2:
                    continue
                union = clusters[a] | clusters[b]
                if len(union) < 4:
                    continue
                report = test_vanishing_tetrads(cov, union, union, cfg.alpha_vt)
                if not report.reject:
                    if trace is not None:
                        trace.merges.append(
                            MergeRecord(a, tuple(sorted(clusters[a])), tuple(sorted(clusters[b])))
                        )
                    clusters[a] = union
                    del clusters[b]
                    changed = True
                    break
            if changed:
                break
    return OrderedClustering(tuple(clusters))


def _edge_stage(
    cov: CovarianceSource,
    pi: OrderedClustering,
    cfg: DiscoveryConfig,
    targets,
    trace: DiscoveryTrace | None = None,
) -> Lfcm:
    """Shared stage 3: one latent per cluster, upstream-variable edge tests.

    targets(cluster) names the variables whose conditional independence
    from each upstream X_j is tested; the full method tests the whole
    cluster, the single-child baseline only its lowest-index member. For
    target position i, the conditioning set is every variable of the
    strictly-upstream clusters (positions above i) except X_j itself,
    and a rejected test adds the edge X_j -> L_i.
    """
    clusters = pi.clusters
    covered = sorted(i for c in clusters for i in c)
    if covered != list(range(cov.p)):
        raise InvalidData("clusters must partition all observed variables")
    cluster_of = [0] * cov.p
    for pos, c in enumerate(clusters):
        for i in c:
            cluster_of[i] = pos
    edges = set()
    for pos in range(len(clusters) - 1):
        upstream = sorted(set().union(*clusters[pos + 1:]))
        tested = sorted(targets(clusters[pos]))
        for j in upstream:
            cond = [v for v in upstream if v != j]
            report = test_conditional_independence(cov, j, tested, cond, cfg.alpha_ci)
            if trace is not None:
                trace.edge_tests.append(
                    EdgeTestRecord(j, pos, tuple(cond), report.reject, report.min_adjusted_p)
                )
            if report.reject:
                edges.add((j, pos))
    return Lfcm(len(clusters), cov.p, tuple(cluster_of), frozenset(edges))


def learn_dag(
    cov: CovarianceSource,
    pi: OrderedClustering,
    cfg: DiscoveryConfig,
    trace: DiscoveryTrace | None = None,
) -> Lfcm:
    """Stage 3: latent per cluster plus observed-to-latent edge tests.

    Interprets pi with later clusters upstream (stage 1 peels leaves
    first); latent i is the position-i cluster's parent. For every X_j
    strictly upstream of latent L_i, the edge X_j -> L_i is added iff
    X_j's conditional independence from the cluster, given all other
    strictly-upstream variables, is rejected at alpha_ci.
    """
    return _edge_stage(cov, pi, cfg, lambda c: c, trace)


def estimate_lfcm(data: DataMatrix, cfg: DiscoveryConfig) -> tuple[Lfcm, DiscoveryTrace]:
    """Full pipeline: covariance, ordered clusters, merging, latent DAG."""
    cov = sample_covariance(data)
    pi, trace = find_ordered_clusters(cov, cfg)
    merged = merge_clusters(cov, pi, cfg, trace)
    graph = learn_dag(cov, merged, cfg, trace)
    return graph, trace
