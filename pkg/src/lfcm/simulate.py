"""Synthetic latent factor model generator and linear SCM sampling.

Graphs are drawn from a directed Erdos-Renyi latent skeleton with 3 to 6
observed children per latent; weights are rescaled per node so that
every parented node gets half its variance from its parents, which keeps
marginal variances near 1 and avoids the varsortability artifact where
downstream nodes are detectable by variance alone.

All randomness flows through numpy SeedSequence streams: graph topology,
weight calibration, and data sampling use distinct spawn keys of one
seed, and calibration streams are split per node, so each stage is
reproducible independently of the others.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCalibration, InvalidData
from .graph import Dag, Lfcm, full_graph
from .linalg import CovarianceSource, DataMatrix

_CALIBRATION_FLOOR = 1e-12


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs of the synthetic generator; defaults follow the benchmark protocol."""

    num_latent: int = 10
    latent_edge_prob: float = 0.5
    children_range: tuple[int, int] = (3, 6)
    weight_magnitude_range: tuple[float, float] = (0.25, 1.0)
    calibration_samples: int = 1000
    noise_variance_root: float = 1.0
    noise_variance_child: float = 0.5
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_latent < 1:
            raise InvalidData(f"num_latent must be >= 1, got {self.num_latent}")
        if not 0.0 <= self.latent_edge_prob <= 1.0:
            raise InvalidData(f"latent_edge_prob must be in [0, 1], got {self.latent_edge_prob}")
        lo, hi = (int(x) for x in self.children_range)
        object.__setattr__(self, "children_range", (lo, hi))
        if not 3 <= lo <= hi:
            raise InvalidData(f"children_range must satisfy 3 <= lo <= hi, got ({lo}, {hi})")
        wlo, whi = (float(x) for x in self.weight_magnitude_range)
        object.__setattr__(self, "weight_magnitude_range", (wlo, whi))
        if not 0.0 < wlo <= whi:
            raise InvalidData(
                f"weight magnitudes must be bounded away from zero, got ({wlo}, {whi})"
            )
        if self.calibration_samples < 2:
            raise InvalidData(f"calibration_samples must be >= 2, got {self.calibration_samples}")
        if self.noise_variance_root <= 0.0 or self.noise_variance_child <= 0.0:
            raise InvalidData("noise variances must be positive")


@dataclass(frozen=True)
class LinearScm:
    """Linear Gaussian SCM over a DAG, latent nodes first.

    weights maps each graph edge (parent, child) to its coefficient;
    noise_var holds one positive exogenous variance per node. num_latent
    names how many leading nodes are latent (0 for fully observed SCMs).
    """

    graph: Dag
    num_latent: int
    weights: dict[tuple[int, int], float]
    noise_var: tuple[float, ...]

    def __post_init__(self) -> None:
        if not 0 <= self.num_latent <= self.graph.node_count:
            raise InvalidData(f"num_latent {self.num_latent} out of range")
        weights = {(int(u), int(v)): float(w) for (u, v), w in self.weights.items()}
        object.__setattr__(self, "weights", weights)
        if set(weights) != set(self.graph.edges):
            raise InvalidData("weights must be defined exactly on the graph edges")
        noise_var = tuple(float(v) for v in self.noise_var)
        object.__setattr__(self, "noise_var", noise_var)
        if len(noise_var) != self.graph.node_count:
            raise InvalidData(
                f"got {len(noise_var)} noise variances for {self.graph.node_count} nodes"
            )
        if any(v <= 0.0 for v in noise_var):
            raise InvalidData("noise variances must be positive")

    @property
    def num_observed(self) -> int:
        return self.graph.node_count - self.num_latent

    def node_names(self) -> tuple[str, ...]:
        """Node names, L1..LK then X1..Xp."""
        latent = tuple(f"L{k + 1}" for k in range(self.num_latent))
        observed = tuple(f"X{i + 1}" for i in range(self.num_observed))
        return latent + observed


def random_lfcm(cfg: GeneratorConfig) -> Lfcm:
    """Draw a random latent factor model.

    A uniform random ordering of the latents defines the skeleton
    direction; each forward latent pair gets an edge with probability
    latent_edge_prob. Every latent then receives Unif(children_range)
    observed children, and each skeleton edge k -> k' is backed by
    d ~ Unif{2..|children(k)|} distinct children of L_k pointing into
    L_k', so the output always satisfies the model conditions.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0,)))
    K = cfg.num_latent
    order = rng.permutation(K)
    skeleton = []
    for a in range(K):
        for b in range(a + 1, K):
            if rng.random() < cfg.latent_edge_prob:
                skeleton.append((int(order[a]), int(order[b])))
    lo, hi = cfg.children_range
    counts = rng.integers(lo, hi + 1, size=K)
    cluster_of = tuple(k for k in range(K) for _ in range(int(counts[k])))
    children = {k: [i for i, c in enumerate(cluster_of) if c == k] for k in range(K)}
    obs_to_latent = set()
    for k, kp in sorted(skeleton):
        d = int(rng.integers(2, len(children[k]) + 1))
        picked = rng.choice(children[k], size=d, replace=False)
        obs_to_latent.update((int(i), kp) for i in picked)
    return Lfcm(K, len(cluster_of), cluster_of, frozenset(obs_to_latent))


def parameterize(g: Lfcm, cfg: GeneratorConfig) -> LinearScm:
    """Attach calibrated linear weights and noise variances to an LFCM.

    Nodes are processed in topological order. Parentless nodes get noise
    variance noise_variance_root. For a parented node, initial weights
    are drawn with magnitude Unif(weight_magnitude_range) and random
    sign, the variance of the parental contribution is estimated from
    calibration_samples draws of the upstream SEM, and the weights are
    rescaled by (2 * sigma_hat)^(-1/2) so the parents contribute half of
    the node's variance; the other half is noise_variance_child.

    Raises DegenerateCalibration when the parental-contribution variance
    collapses below 1e-12 even after one weight resample.
    """
    full = full_graph(g)
    streams = np.random.SeedSequence(cfg.seed, spawn_key=(1,)).spawn(full.node_count)
    B = cfg.calibration_samples
    calib = np.zeros((B, full.node_count))
    weights: dict[tuple[int, int], float] = {}
    noise_var = [0.0] * full.node_count
    wlo, whi = cfg.weight_magnitude_range
    for j in full.topological_order():
        rng = np.random.default_rng(streams[j])
        parents = full.parents_of(j)
        if not parents:
            noise_var[j] = cfg.noise_variance_root
            calib[:, j] = rng.normal(size=B) * np.sqrt(cfg.noise_variance_root)
            continue
        upstream = calib[:, parents]
        for attempt in range(2):
            magnitudes = rng.uniform(wlo, whi, size=len(parents))
            signs = 2.0 * rng.integers(0, 2, size=len(parents)) - 1.0
            raw = signs * magnitudes
            sigma_hat = float((upstream @ raw).var(ddof=1))
            if sigma_hat > _CALIBRATION_FLOOR:
                break
        else:
            raise DegenerateCalibration(
                f"parental contribution variance {sigma_hat:g} at node {j} "
                "after one weight resample"
            )
        final = raw / np.sqrt(2.0 * sigma_hat)
        for i, w in zip(parents, final):
            weights[(i, j)] = float(w)
        noise_var[j] = cfg.noise_variance_child
        calib[:, j] = upstream @ final + rng.normal(size=B) * np.sqrt(cfg.noise_variance_child)
    return LinearScm(full, g.num_latent, weights, tuple(noise_var))


def _ancestral_sample(scm: LinearScm, n: int, seed) -> np.ndarray:
    """All-node sample matrix; noise is drawn in node order, then propagated."""
    if n < 1:
        raise InvalidData(f"need n >= 1 samples, got {n}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    m = scm.graph.node_count
    x = rng.normal(size=(n, m)) * np.sqrt(np.asarray(scm.noise_var))
    for j in scm.graph.topological_order():
        for i in scm.graph.parents_of(j):
            x[:, j] += scm.weights[(i, j)] * x[:, i]
    return x


def sample_data(scm: LinearScm, n: int, seed) -> DataMatrix:
    """Ancestral Gaussian sample of the observed columns only."""
    x = _ancestral_sample(scm, n, seed)
    names = scm.node_names()[scm.num_latent:]
    return DataMatrix(x[:, scm.num_latent:], names)


def sample_full_data(scm: LinearScm, n: int, seed) -> DataMatrix:
    """Like sample_data but keeps the latent columns (oracle use only).

    The observed block is sample_data(scm, n, seed) exactly: both draw
    one noise matrix over all nodes in node order before propagation.
    """
    x = _ancestral_sample(scm, n, seed)
    return DataMatrix(x, scm.node_names())


def population_covariance(scm: LinearScm) -> CovarianceSource:
    """Exact covariance of the observed block, as a population source.

    With A[child, parent] holding the edge weights and D the noise
    variances, the full covariance is (I - A)^-1 D (I - A)^-T; the
    observed-rows/columns submatrix is returned with n_eff = None.
    """
    m = scm.graph.node_count
    a = np.zeros((m, m))
    for (i, j), w in scm.weights.items():
        a[j, i] = w
    eye = np.eye(m)
    inv = np.linalg.solve(eye - a, eye)
    sigma = inv @ np.diag(scm.noise_var) @ inv.T
    return CovarianceSource(sigma[scm.num_latent:, scm.num_latent:], None)


def scm_to_json_dict(scm: LinearScm) -> dict:
    """JSON-ready dict with fields nodes, edges, noise_var."""
    names = scm.node_names()
    nodes = [
        {"name": names[v], "kind": "latent" if v < scm.num_latent else "observed"}
        for v in range(scm.graph.node_count)
    ]
    edges = [[names[i], names[j], scm.weights[(i, j)]] for i, j in sorted(scm.weights)]
    return {"nodes": nodes, "edges": edges, "noise_var": list(scm.noise_var)}


def scm_from_json_dict(obj: dict) -> LinearScm:
    """Inverse of scm_to_json_dict."""
    try:
        names = [str(node["name"]) for node in obj["nodes"]]
        kinds = [str(node["kind"]) for node in obj["nodes"]]
        raw_edges = [(str(p), str(c), float(w)) for p, c, w in obj["edges"]]
        noise_var = tuple(float(v) for v in obj["noise_var"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidData(f"malformed SCM object: {exc}") from exc
    if len(set(names)) != len(names):
        raise InvalidData("node names must be unique")
    if any(kind not in ("latent", "observed") for kind in kinds):
        raise InvalidData("node kind must be 'latent' or 'observed'")
    num_latent = sum(kind == "latent" for kind in kinds)
    if any(kind == "latent" for kind in kinds[num_latent:]):
        raise InvalidData("latent nodes must precede observed nodes")
    index = {name: v for v, name in enumerate(names)}
    try:
        weights = {(index[p], index[c]): w for p, c, w in raw_edges}
    except KeyError as exc:
        raise InvalidData(f"edge references unknown node {exc}") from exc
    graph = Dag(len(names), frozenset(weights))
    return LinearScm(graph, num_latent, weights, noise_var)
